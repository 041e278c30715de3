"""Exact one-step expectations and the drift inequalities checked against them.

E[F(next) | now] is a finite sum over allocation targets. Targets with equal
load produce the same post-state multiset, so they are grouped and each group
is evaluated once. Exponential potentials are handled as logarithms relative
to a common integer reference so that huge configurations stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from ..framework import distribution_vector
from ..processes.config import Kind, ProcessConfig
from ..processes.simulate import simulate
from ..processes.step import ProcessState, placements_for
from ..state import LoadState, _sum_abs, _sum_sq, ceil_div, sorted_order

DEFAULT_TOLERANCE = 1e-10
EXACT_POTENTIALS = ("delta", "upsilon", "one")
EXP_POTENTIALS = ("phi", "phi0", "lambda", "v", "psi")


@dataclass(frozen=True)
class ExpectationResult:
    potential: str
    current: object
    expected: object
    bound: object = None
    satisfied: bool | None = None
    exact: bool = False
    tolerance: float = 0.0
    log_current: float | None = None
    log_expected: float | None = None
    log_bound: float | None = None
    constants: dict = field(default_factory=dict)
    regime: str | None = None

    @property
    def ratio(self) -> float:
        """expected / current, formed in log space for exponential potentials."""
        if self.log_current is not None:
            return math.exp(self.log_expected - self.log_current)
        return float(Fraction(self.expected) / Fraction(self.current))

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, Fraction):
                return str(v)
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, dict):
                return {k: conv(u) for k, u in v.items()}
            return v
        out = {k: conv(getattr(self, k)) for k in (
            "potential", "current", "expected", "bound", "satisfied", "exact", "tolerance",
            "log_current", "log_expected", "log_bound", "regime")}
        out["constants"] = conv(self.constants)
        return out


# ---------------------------------------------------------------------------
# Outcome enumeration


def outcomes(config: ProcessConfig, state: ProcessState) -> list[tuple[Fraction, np.ndarray, int]]:
    """(probability, post loads, post W) over distinct post-state multisets."""
    x, W, n = state.load.x, state.load.W, state.load.n
    if config.kind is Kind.Caching and state.cache is None:
        probs = [Fraction(1, n)] * n
        order = sorted_order(x)
    else:
        p = distribution_vector(config, state)
        probs = p.p
        order = sorted_order(x)
    groups: dict[int, list] = {}
    for rank, b in enumerate(order):
        if probs[rank] == 0:
            continue
        load = int(x[b])
        if load in groups:
            groups[load][0] += probs[rank]
        else:
            groups[load] = [probs[rank], int(b)]
    out = []
    for prob, b in groups.values():
        post = np.array(x, dtype=np.int64)
        w = 0
        for bin_, c in placements_for(config, x, W, b):
            post[bin_] += c
            w += c
        out.append((prob, post, W + w))
    return out


# ---------------------------------------------------------------------------
# Potential evaluation


def _values(x: np.ndarray, W: int, potential: str, phi_threshold: int = 2):
    """Integer exponent numerators v (exponent = coef * v / n) for a potential."""
    n = x.shape[0]
    z = n * x - W
    if potential in ("lambda", "v"):
        return np.abs(z)
    if potential in ("phi", "psi"):
        return z[z >= phi_threshold * n]
    if potential == "phi0":
        return z[z >= 0]
    raise ValueError(potential)


def _rel_logsum(v: np.ndarray, ref: int, coef: float, n: int) -> float:
    if v.size == 0:
        return -math.inf
    e = coef * ((v - ref).astype(np.float64)) / n
    top = float(e.max())
    return top + math.log(float(np.exp(e - top).sum()))


def _coef(potential: str, n: int, alpha: float | None, alpha_tilde: float | None) -> float:
    if potential == "psi":
        return 1.0 / (12 * n)
    if potential == "v":
        if alpha_tilde is None:
            raise ValueError("V needs alpha_tilde")
        return float(alpha_tilde)
    if alpha is None or alpha <= 0:
        raise ValueError("alpha must be positive")
    return float(alpha)


def _exact_value(x: np.ndarray, W: int, potential: str) -> Fraction:
    n = x.shape[0]
    z = n * x - W
    if potential == "delta":
        return Fraction(_sum_abs(z), n)
    if potential == "upsilon":
        return Fraction(_sum_sq(z), n * n)
    if potential == "one":
        return Fraction(1)
    raise ValueError(potential)


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = max(a, b), min(a, b)
    return hi + math.log1p(math.exp(lo - hi))


def _safe_exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def one_step_expectation(config: ProcessConfig, state: ProcessState, potential: str = "upsilon",
                         alpha: float | None = None, alpha_tilde: float | None = None,
                         tolerance: float = DEFAULT_TOLERANCE) -> ExpectationResult:
    """E[F^{t+1} | F^t] by enumerating every allocation target."""
    if isinstance(state, LoadState):
        state = ProcessState(state)
    potential = potential.lower()
    x, W, n = state.load.x, state.load.W, state.load.n
    outs = outcomes(config, state)
    if potential in EXACT_POTENTIALS:
        cur = _exact_value(x, W, potential)
        exp_val = sum((p * _exact_value(px, pW, potential) for p, px, pW in outs), Fraction(0))
        return ExpectationResult(potential, cur, exp_val, exact=True)
    if potential not in EXP_POTENTIALS:
        raise ValueError(f"unknown potential {potential!r}")
    coef = _coef(potential, n, alpha, alpha_tilde)
    v_cur = _values(x, W, potential)
    ref = int(v_cur.max()) if v_cur.size else 0
    log_ref = coef * ref / n
    cur_rel = _rel_logsum(v_cur, ref, coef, n)
    acc = -math.inf
    for p, px, pW in outs:
        rel = _rel_logsum(_values(px, pW, potential), ref, coef, n)
        if rel > -math.inf:
            acc = _logaddexp(acc, math.log(p.numerator) - math.log(p.denominator) + rel)
    log_cur = log_ref + cur_rel
    log_exp = log_ref + acc
    return ExpectationResult(potential, _safe_exp(log_cur), _safe_exp(log_exp), tolerance=tolerance,
                             log_current=log_cur, log_expected=log_exp,
                             constants={"alpha": coef})


# ---------------------------------------------------------------------------
# Drift inequalities


def _p_extremes(config: ProcessConfig, state: ProcessState):
    p = distribution_vector(config, state)
    st = state.load
    m_plus = int(np.count_nonzero(st.n * st.x >= st.W))
    p_plus = Fraction(int(max(p.num[:m_plus])), p.den)
    p_minus = Fraction(int(min(p.num[m_plus:])), p.den) if m_plus < st.n else None
    return p_plus, p_minus, Fraction(m_plus, st.n)


def process_constants(config: ProcessConfig) -> dict:
    """Weights and P3 constants the framework assigns to a process."""
    w = config.weights
    if w is None:
        raise ValueError(f"{config.label} has no constant branch weights")
    out = {"w_plus": w[0], "w_minus": w[1], "k1": None, "k2": None, "family": None}
    if config.kind is Kind.MeanThinning:
        out.update(k1=Fraction(1), k2=Fraction(1), family="P3W2")
    elif config.kind is Kind.OnePlusEtaMeanThinning:
        out.update(k1=config.eta, k2=config.eta, family="P3W2")
    elif config.kind is Kind.Twinning:
        out.update(family="P2W3")
    return out


def verify_upsilon_drop(config: ProcessConfig, state: ProcessState) -> ExpectationResult:
    """E[Y'] <= Y - (p_- w_- - p_+ w_+) Delta + 4 w_-^2, in exact rationals."""
    consts = process_constants(config)
    w_plus, w_minus = consts["w_plus"], consts["w_minus"]
    res = one_step_expectation(config, state, "upsilon")
    x, W, n = state.load.x, state.load.W, state.load.n
    Delta = _exact_value(x, W, "delta")
    p_plus, p_minus, dlt = _p_extremes(config, state)
    drift = (p_minus if p_minus is not None else Fraction(0)) * w_minus - p_plus * w_plus
    bound = res.current - drift * Delta + 4 * w_minus * w_minus
    if consts["family"] == "P3W2":
        c1 = min(consts["k1"], consts["k2"])
    elif consts["family"] == "P2W3":
        c1 = Fraction(w_minus - w_plus)
    else:
        c1 = None
    return ExpectationResult("upsilon", res.current, res.expected, bound, res.expected <= bound, exact=True,
                             constants={"p_plus": p_plus, "p_minus": p_minus, "delta": Delta, "quantile": dlt,
                                        "drift": drift, "c1": c1, "w_plus": w_plus, "w_minus": w_minus})


def phi_bound_factor(state: LoadState, alpha: float) -> float:
    """The bracket of the filling bound, divided by n."""
    x, W, n = state.x, state.W, state.n
    z = n * x - W
    low = z < n  # y < 1
    ceil_neg = -((z[low]) // n)  # ceil(-z/n) = -floor(z/n)
    s = float(np.exp(-alpha * (ceil_neg + 1) / n).sum())
    high = int(np.count_nonzero(~low))
    s += math.exp(-alpha / n) * (high - 1) + math.exp(alpha - alpha / n)
    return s / n


def verify_phi_bound(state, alpha: float = 0.01, config: ProcessConfig | None = None,
                     tolerance: float = 1e-9) -> ExpectationResult:
    """E[Phi'] against the uniform-target filling bound (P1 and W1 processes)."""
    if isinstance(state, LoadState):
        state = ProcessState(state)
    config = config or ProcessConfig.simple("Packing")
    res = one_step_expectation(config, state, "phi", alpha=alpha)
    factor = phi_bound_factor(state.load, alpha)
    log_rhs = _logaddexp(math.log(factor) + res.log_current if res.log_current > -math.inf else -math.inf,
                         3 * alpha)
    ok = res.log_expected <= log_rhs + math.log1p(tolerance) if res.log_expected > -math.inf else True
    return ExpectationResult("phi", res.current, res.expected, _safe_exp(log_rhs), ok, tolerance=tolerance,
                             log_current=res.log_current, log_expected=res.log_expected, log_bound=log_rhs,
                             constants={"alpha": alpha, "factor": factor})


def lambda_alpha_limit(config: ProcessConfig, eps) -> float:
    """Largest alpha allowed by the good-quantile drop's preconditions."""
    c = process_constants(config)
    eps = float(Fraction(eps))
    wp, wm = c["w_plus"], c["w_minus"]
    if c["family"] == "P3W2":
        k1, k2 = float(c["k1"]), float(c["k2"])
        return min(1 / wm, k2 * eps / (2 * wm * (1 + k2 * eps)), k1 * eps / (2 * wp * (1 - k1 * eps)))
    if c["family"] == "P2W3":
        return min(1 / wm, eps * (wm - wp) / (4 * wm * wm), eps / (2 * wm * (2 + eps)))
    raise ValueError(f"{config.label} is neither a P3/W2 nor a P2/W3 process")


def verify_lambda_change(config: ProcessConfig, state: ProcessState, eps, alpha: float | None = None,
                         tolerance: float = 1e-9) -> ExpectationResult:
    """Increase bound always; good-quantile drop (with the largest c3) inside the band."""
    consts = process_constants(config)
    wm = consts["w_minus"]
    limit = lambda_alpha_limit(config, eps)
    if alpha is None:
        alpha = limit
    n = state.load.n
    res = one_step_expectation(config, state, "lambda", alpha=alpha)
    c4 = 3 * wm * math.exp(2 * wm)
    L, E = res.log_current, res.log_expected
    log_rhs = _logaddexp(L + math.log1p(alpha * alpha * c4 / (2 * n)), math.log(c4))
    ok = E <= log_rhs + math.log1p(tolerance)
    delta = Fraction(int(np.count_nonzero(n * state.load.x >= state.load.W)), n)
    eps_f = Fraction(eps)
    in_band = eps_f < delta < 1 - eps_f
    c3 = None
    if in_band:
        lam, exp_val = res.current, res.expected
        if math.isfinite(lam) and math.isfinite(exp_val):
            slope = 3 * math.exp(2 * wm) - 2 * alpha * lam / n
            slack = lam + 3 * wm * math.exp(2 * wm) - exp_val
            if slope >= 0:
                c3 = math.inf if slack >= 0 or slope > 0 else 0.0
            else:
                c3 = max(0.0, slack / (-slope)) if slack > 0 else 0.0
        else:
            # Lambda beyond double range: the additive constants are negligible.
            c3 = (1 - math.exp(E - L)) * n / (2 * alpha) if E < L else 0.0
    return ExpectationResult("lambda", res.current, res.expected, _safe_exp(log_rhs), ok, tolerance=tolerance,
                             log_current=L, log_expected=E, log_bound=log_rhs,
                             constants={"alpha": alpha, "alpha_limit": limit, "alpha_ok": alpha <= limit + 1e-15,
                                        "c4": c4, "c3": c3, "quantile": delta, "eps": eps_f},
                             regime="in-band" if in_band else "out-of-band")


def v_alpha_tilde(config: ProcessConfig, n: int) -> float:
    c = process_constants(config)
    wp, wm = c["w_plus"], c["w_minus"]
    if c["family"] == "P3W2":
        k1, k2 = float(c["k1"]), float(c["k2"])
        return min(k1 / (2 * wm * (n - k1)), k2 / (2 * wm * (n + k2)))
    if c["family"] == "P2W3":
        return min((wm - wp) / (4 * wm * wm * n), 1 / (wm * (4 * n + 2)))
    raise ValueError(f"{config.label} is neither a P3/W2 nor a P2/W3 process")


def verify_v_drop(config: ProcessConfig, state: ProcessState, alpha_tilde: float | None = None
                  ) -> ExpectationResult:
    """Fit c5 in E[V'] <= V (1 - c5/n^3) + 2n; satisfied iff c5 > 0."""
    n = state.load.n
    if alpha_tilde is None:
        alpha_tilde = v_alpha_tilde(config, n)
    res = one_step_expectation(config, state, "v", alpha_tilde=alpha_tilde)
    V, E = res.current, res.expected
    c5 = n ** 3 * (V + 2 * n - E) / V
    return ExpectationResult("v", V, E, V + 2 * n, c5 > 0, tolerance=0.0, log_current=res.log_current,
                             log_expected=res.log_expected, constants={"alpha_tilde": alpha_tilde, "c5": c5})


# ---------------------------------------------------------------------------
# Two rounds of Caching


@njit(cache=True)
def _psi_term(load, n, W2, coef):
    zz = n * load - W2
    if zz >= 2 * n:
        return math.exp(coef * zz / n)
    return 0.0


@njit(cache=True)
def _caching_two_step(x, W, cache, coef):
    n = x.shape[0]
    W2 = W + 2
    base = 0.0
    for j in range(n):
        base += _psi_term(x[j], n, W2, coef)
    total = 0.0
    for i1 in range(n):
        if cache < 0:
            t1 = i1
            c1 = i1
        elif x[i1] < x[cache]:
            t1 = i1
            c1 = i1
        elif x[i1] == x[cache]:
            t1 = i1
            c1 = cache
        else:
            t1 = cache
            c1 = cache
        for i2 in range(n):
            a = x[i2] + (1 if i2 == t1 else 0)
            b = x[c1] + (1 if c1 == t1 else 0)
            t2 = i2 if a <= b else c1
            if t2 == t1:
                val = base - _psi_term(x[t1], n, W2, coef) + _psi_term(x[t1] + 2, n, W2, coef)
            else:
                val = (base - _psi_term(x[t1], n, W2, coef) - _psi_term(x[t2], n, W2, coef)
                       + _psi_term(x[t1] + 1, n, W2, coef) + _psi_term(x[t2] + 1, n, W2, coef))
            total += val
    return total / (n * n)


@njit(cache=True)
def _psi_now(x, W, coef):
    n = x.shape[0]
    s = 0.0
    for j in range(n):
        s += _psi_term(x[j], n, W, coef)
    return s


MAX_TWO_STEP_BINS = 512


def caching_two_step_expectation(state, cache: int | None) -> ExpectationResult:
    """E[Psi^{t+2} | now] for Caching, enumerating both samples exactly."""
    load = state.load if isinstance(state, ProcessState) else state
    n = load.n
    if n > MAX_TWO_STEP_BINS:
        raise ValueError(f"two-step enumeration is limited to n <= {MAX_TWO_STEP_BINS}")
    if cache is not None and not (0 <= cache < n):
        raise ValueError("cache must index a bin")
    coef = 1.0 / (12 * n)
    x = np.ascontiguousarray(load.x, dtype=np.int64)
    psi = _psi_now(x, load.W, coef)
    exp_val = _caching_two_step(x, load.W, -1 if cache is None else int(cache), coef)
    bound = psi * (1 - 1 / (24 * n ** 3)) + 6
    return ExpectationResult("psi", psi, exp_val, bound, exp_val <= bound * (1 + DEFAULT_TOLERANCE),
                             tolerance=DEFAULT_TOLERANCE, constants={"cache": cache})


def worst_cache_two_step(state) -> ExpectationResult:
    """The cache position (including none) with the smallest slack."""
    load = state.load if isinstance(state, ProcessState) else state
    worst = None
    for cache in [None, *range(load.n)]:
        res = caching_two_step_expectation(load, cache)
        if worst is None or res.bound - res.expected < worst.bound - worst.expected:
            worst = res
    return worst


# ---------------------------------------------------------------------------
# Random reachable states


def random_reachable_states(config: ProcessConfig, n: int, count: int, seed: int,
                            max_rounds: int | None = None) -> list[ProcessState]:
    """States after a uniform number of rounds in [0, 50n] from empty."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xA11CE])))
    top = 50 * n if max_rounds is None else max_rounds
    rounds = rng.integers(0, top + 1, size=count)
    out = []
    for k, r in enumerate(rounds):
        st, _ = simulate(config, n, int(r), seed, rep=k + 1)
        out.append(st)
    return out
