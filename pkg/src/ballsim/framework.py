"""Distribution vectors, the P/W condition checkers, majorization, unfolding.

Distribution vectors are kept as integer numerators over one common
denominator so that every comparison is exact. Ranks follow the sorted
labeling of ``state.sorted_order`` (rank 0 is the most loaded bin).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .processes.config import Kind, ProcessConfig
from .processes.step import AllocationEvent, ProcessState
from .state import LoadState, ceil_div, sorted_order

_SAFE = 1 << 62


@dataclass(frozen=True)
class DistributionVector:
    num: np.ndarray
    den: int

    def __post_init__(self):
        num = np.asarray(self.num)
        if num.ndim != 1:
            raise ValueError("distribution vector must be flat")
        if num.dtype != object and num.dtype != np.int64:
            num = num.astype(np.int64)
        object.__setattr__(self, "num", num)
        if int(self.den) <= 0:
            raise ValueError("denominator must be positive")
        if sum(int(v) for v in num) != int(self.den):
            raise ValueError("probabilities must sum to 1")
        if any(int(v) < 0 for v in num):
            raise ValueError("probabilities must be non-negative")

    @classmethod
    def from_fractions(cls, probs) -> "DistributionVector":
        probs = [Fraction(p) for p in probs]
        den = 1
        for p in probs:
            den = den * p.denominator // np.gcd(den, p.denominator)
        num = [int(p * den) for p in probs]
        return cls(_int_array(num, den * len(num)), den)

    @property
    def n(self) -> int:
        return int(self.num.shape[0])

    @property
    def p(self) -> list[Fraction]:
        return [Fraction(int(v), int(self.den)) for v in self.num]

    def prefix(self) -> list[Fraction]:
        out, acc = [], 0
        for v in self.num:
            acc += int(v)
            out.append(Fraction(acc, int(self.den)))
        return out


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    holds: bool
    witness: dict | None = None
    constants: dict = field(default_factory=dict)
    vacuous: bool = False

    def __post_init__(self):
        if self.holds == (self.witness is not None):
            raise ValueError("a witness is present exactly when the condition fails")

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, Fraction):
                return str(v)
            if isinstance(v, dict):
                return {k: conv(u) for k, u in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(u) for u in v]
            if isinstance(v, np.integer):
                return int(v)
            return v
        return {"condition": self.condition, "holds": self.holds, "vacuous": self.vacuous,
                "witness": conv(self.witness), "constants": conv(self.constants)}


def _int_array(values, bound: int) -> np.ndarray:
    if bound < _SAFE:
        return np.array(values, dtype=np.int64)
    return np.array([int(v) for v in np.ravel(values)], dtype=object).reshape(np.shape(values))


# ---------------------------------------------------------------------------
# Distribution vectors


def _sorted_rows(loads: np.ndarray):
    R, n = loads.shape
    idx = np.arange(n)
    order = np.lexsort((np.broadcast_to(idx, (R, n)), -loads), axis=1)
    return order, np.take_along_axis(loads, order, axis=1)


def _dchoice_rows(sorted_loads: np.ndarray, d: int):
    """Exact per-rank probabilities (numerators over n^d) for d-choice with
    ties resolved toward the lowest bin index, i.e. the lowest rank in a tie."""
    R, n = sorted_loads.shape
    ranks = np.broadcast_to(np.arange(1, n + 1), (R, n))
    new_group = np.ones((R, n), dtype=bool)
    new_group[:, 1:] = sorted_loads[:, 1:] != sorted_loads[:, :-1]
    first = np.maximum.accumulate(np.where(new_group, ranks, 0), axis=1)
    end_group = np.ones((R, n), dtype=bool)
    end_group[:, :-1] = new_group[:, 1:]
    rev = np.where(end_group, ranks, n + 1)[:, ::-1]
    last = np.minimum.accumulate(rev, axis=1)[:, ::-1]
    size = (first - 1) + (last - ranks + 1)
    den = n ** d
    if den * n < _SAFE:
        return size ** d - (size - 1) ** d, den
    s = size.astype(object)
    return s ** d - (s - 1) ** d, den


def distribution_matrix(config: ProcessConfig, loads: np.ndarray, weights: np.ndarray,
                        rounds: np.ndarray | None = None, caches: np.ndarray | None = None):
    """Per-rank target probabilities for many states at once.

    Returns (num, den, order): row r of ``num``/den is the vector for state r,
    and ``order[r]`` maps ranks back to bin indices.
    """
    loads = np.asarray(loads, dtype=np.int64)
    if loads.ndim == 1:
        loads = loads[None, :]
    R, n = loads.shape
    weights = np.asarray(weights, dtype=np.int64).reshape(R)
    order, sl = _sorted_rows(loads)
    z = n * sl - weights[:, None]
    m_plus = np.count_nonzero(z >= 0, axis=1)
    kind = config.kind
    ones = np.ones((R, n), dtype=np.int64)

    if kind in (Kind.OneChoice, Kind.Packing, Kind.OverPacking, Kind.Twinning):
        return ones, n, order
    if kind is Kind.DChoice:
        num, den = _dchoice_rows(sl, config.d)
        return num, den, order
    if kind is Kind.OnePlusBeta:
        b = config.beta
        two, _ = _dchoice_rows(sl, 2)
        num = (b.denominator - b.numerator) * n * ones + b.numerator * two
        return num, b.denominator * n * n, order
    if kind in (Kind.Thinning, Kind.MeanThinning, Kind.OnePlusEtaMeanThinning):
        if kind is Kind.Thinning:
            if rounds is None:
                raise ValueError("Thinning needs the round index")
            t = np.asarray(rounds, dtype=np.int64).reshape(R)
            f = config.f
            accept = n * sl * f.denominator < (t * f.denominator + n * f.numerator)[:, None]
        else:
            accept = z < 0
        h = n - np.count_nonzero(accept, axis=1)  # bins that reject the first sample
        thin = np.where(accept, n, 0) + h[:, None]
        if kind is not Kind.OnePlusEtaMeanThinning:
            return thin, n * n, order
        e = config.eta
        num = e.numerator * thin + (e.denominator - e.numerator) * n * ones
        return num, e.denominator * n * n, order
    if kind is Kind.Caching:
        if caches is None:
            raise ValueError("Caching needs a cache position")
        caches = np.asarray(caches, dtype=np.int64).reshape(R)
        if np.any(caches < 0):
            raise ValueError("Caching distribution is undefined before the cache is set")
        xb = loads[np.arange(R), caches]
        heavier = np.count_nonzero(loads > xb[:, None], axis=1)
        rank_b = np.argmax(order == caches[:, None], axis=1)
        num = ones.copy()
        cols = np.arange(n)[None, :]
        num[cols < heavier[:, None]] = 0
        num[np.arange(R), rank_b] = 1 + heavier
        return num, n, order
    raise ValueError(f"no closed form for {kind.name}")


def distribution_vector(config: ProcessConfig, state: ProcessState) -> DistributionVector:
    if config.kind is Kind.Caching and state.cache is None:
        raise ValueError("Caching distribution is undefined before the cache is set")
    num, den, _ = distribution_matrix(config, state.load.x[None, :], np.array([state.load.W]),
                                      np.array([state.round]),
                                      None if state.cache is None else np.array([state.cache]))
    return DistributionVector(num[0], den)


def one_plus_beta_closed(n: int, beta) -> DistributionVector:
    """(1-beta)/n + beta(2i-1)/n^2 per rank i (tie-free states)."""
    beta = Fraction(beta)
    a, b = beta.numerator, beta.denominator
    num = [(b - a) * n + a * (2 * i - 1) for i in range(1, n + 1)]
    return DistributionVector(_int_array(num, b * n ** 3), b * n * n)


def one_plus_eta_closed(n: int, eta, overloaded: int) -> DistributionVector:
    """(1+eta)-MeanThinning with ``overloaded`` bins at or above the mean."""
    eta = Fraction(eta)
    a, b = eta.numerator, eta.denominator
    num = [a * ((0 if i < overloaded else n) + overloaded) + (b - a) * n for i in range(n)]
    return DistributionVector(_int_array(num, b * n ** 3), b * n * n)


# ---------------------------------------------------------------------------
# Conditions on distribution vectors


def _cum(num):
    return np.cumsum(num, axis=-1)


def check_P1_rows(num: np.ndarray, den: int) -> np.ndarray:
    """Index of the first violated prefix per row (-1 when P1 holds)."""
    num = np.atleast_2d(num)
    n = num.shape[1]
    k = np.arange(1, n + 1)
    bad = _cum(num) * n > k * den
    first = np.argmax(bad, axis=1)
    return np.where(bad.any(axis=1), first, -1)


def check_P1(p: DistributionVector) -> ConditionReport:
    first = int(check_P1_rows(p.num[None, :], p.den)[0])
    if first < 0:
        return ConditionReport("P1", True)
    pref = p.prefix()[first]
    return ConditionReport("P1", False, {"k": first + 1, "prefix": pref, "limit": Fraction(first + 1, p.n),
                                         "inequality": "sum_{i<=k} p_i <= k/n"})


def _overloaded_count(state: ProcessState) -> int:
    st = state.load
    return int(np.count_nonzero(st.n * st.x >= st.W))


def _extremes(p: DistributionVector, m_plus: int):
    p_plus = Fraction(int(max(p.num[:m_plus])), p.den)
    p_minus = Fraction(int(min(p.num[m_plus:])), p.den) if m_plus < p.n else None
    return p_plus, p_minus


def check_P2(p: DistributionVector, state: ProcessState) -> ConditionReport:
    n = p.n
    m_plus = _overloaded_count(state)
    p_plus, p_minus = _extremes(p, m_plus)
    consts = {"p_plus": p_plus, "p_minus": p_minus, "delta": Fraction(m_plus, n),
              "equality": p_plus == Fraction(1, n) and p_minus in (None, Fraction(1, n))}
    if p_plus > Fraction(1, n):
        return ConditionReport("P2", False, {"side": "+", "value": p_plus, "inequality": "p_+ <= 1/n"}, consts)
    if p_minus is not None and p_minus < Fraction(1, n):
        return ConditionReport("P2", False, {"side": "-", "value": p_minus, "inequality": "p_- >= 1/n"}, consts)
    return ConditionReport("P2", True, None, consts, vacuous=p_minus is None)


def check_P3(p: DistributionVector, state: ProcessState, k1, k2) -> ConditionReport:
    n = p.n
    k1, k2 = Fraction(k1), Fraction(k2)
    m_plus = _overloaded_count(state)
    delta = Fraction(m_plus, n)
    p_plus, p_minus = _extremes(p, m_plus)
    hi = Fraction(1, n) - k1 * (1 - delta) / n
    lo = Fraction(1, n) + k2 * delta / n
    consts = {"k1": k1, "k2": k2, "delta": delta, "p_plus": p_plus, "p_minus": p_minus}
    if p_plus > hi:
        return ConditionReport("P3", False, {"side": "+", "value": p_plus, "limit": hi,
                                             "inequality": "p_+ <= 1/n - k1(1-delta)/n"}, consts)
    if p_minus is not None and p_minus < lo:
        return ConditionReport("P3", False, {"side": "-", "value": p_minus, "limit": lo,
                                             "inequality": "p_- >= 1/n + k2 delta/n"}, consts)
    return ConditionReport("P3", True, None, consts)


def _extreme_rows(num: np.ndarray, loads: np.ndarray, weights: np.ndarray):
    """Per-row (m_plus, p_plus numerator, p_minus numerator or -1) for rank-ordered rows."""
    n = num.shape[1]
    m_plus = np.count_nonzero(n * loads >= weights[:, None], axis=1)
    over = np.arange(n)[None, :] < m_plus[:, None]
    p_plus = np.where(over, num, -1).max(axis=1)
    p_minus = np.where(over, np.iinfo(np.int64).max, num).min(axis=1)
    p_minus = np.where(m_plus < n, p_minus, -1)
    return m_plus, p_plus, p_minus


def check_P2_rows(num: np.ndarray, den: int, loads: np.ndarray, weights: np.ndarray):
    """Vectorized P2 over trace rows; returns (holds, holds with equality) boolean arrays."""
    n = num.shape[1]
    m_plus, p_plus, p_minus = _extreme_rows(num, loads, weights)
    has_minus = m_plus < n
    ok = (p_plus * n <= den) & (~has_minus | (p_minus * n >= den))
    eq = (p_plus * n == den) & (~has_minus | (p_minus * n == den))
    return ok, eq


def check_P3_rows(num: np.ndarray, den: int, loads: np.ndarray, weights: np.ndarray, k1, k2) -> np.ndarray:
    """Vectorized P3 with rational k1, k2; returns a boolean array, one entry per row."""
    n = num.shape[1]
    k1, k2 = Fraction(k1), Fraction(k2)
    if den * n * n * max(k1.denominator, k2.denominator) * max(1, k1.numerator, k2.numerator) >= 1 << 62:
        raise OverflowError("denominators too large for the vectorized check")
    m_plus, p_plus, p_minus = _extreme_rows(num, loads, weights)
    a1, b1, a2, b2 = k1.numerator, k1.denominator, k2.numerator, k2.denominator
    upper = p_plus * n * n * b1 <= den * (b1 * n - a1 * (n - m_plus))
    lower = (m_plus == n) | (p_minus * n * n * b2 >= den * (b2 * n + a2 * m_plus))
    return upper & lower


def fit_P3(p: DistributionVector, state: ProcessState) -> tuple[Fraction | None, Fraction | None]:
    """Largest (k1, k2) satisfied at this state; None means unconstrained."""
    n = p.n
    m_plus = _overloaded_count(state)
    delta = Fraction(m_plus, n)
    p_plus, p_minus = _extremes(p, m_plus)
    k1 = None if delta == 1 else (1 - n * p_plus) / (1 - delta)
    k2 = None if p_minus is None else (n * p_minus - 1) / delta
    return k1, k2


def fit_P3_trace(pairs) -> tuple[Fraction | None, Fraction | None]:
    """Best constants valid across (p, state) pairs."""
    k1 = k2 = None
    for p, state in pairs:
        a, b = fit_P3(p, state)
        if a is not None:
            k1 = a if k1 is None else min(k1, a)
        if b is not None:
            k2 = b if k2 is None else min(k2, b)
    return k1, k2


def check_P4(p: DistributionVector, state: ProcessState, eps) -> ConditionReport:
    eps = Fraction(eps)
    n = p.n
    delta = Fraction(_overloaded_count(state), n)
    if not (eps < delta < 1 - eps):
        return ConditionReport("P4", True, None, {"eps": eps, "delta": delta, "k4": None}, vacuous=True)
    k4 = Fraction(int(min(p.num)) * n, p.den)
    consts = {"eps": eps, "delta": delta, "k4": k4}
    if k4 <= 0:
        return ConditionReport("P4", False, {"k4": k4, "inequality": "min_i p_i >= k4/n with k4 > 0"}, consts)
    return ConditionReport("P4", True, None, consts)


def majorizes(p: DistributionVector, q: DistributionVector) -> bool:
    return first_majorization_failure(p, q) is None


def first_majorization_failure(p: DistributionVector, q: DistributionVector) -> int | None:
    """Smallest k with prefix_k(p) < prefix_k(q), or None."""
    if p.n != q.n:
        raise ValueError("vectors differ in length")
    lhs = np.cumsum(p.num.astype(object)) * int(q.den)
    rhs = np.cumsum(q.num.astype(object)) * int(p.den)
    for k in range(p.n):
        if lhs[k] < rhs[k]:
            return k + 1
    return None


# ---------------------------------------------------------------------------
# Weight conditions


def w1_violation(x: np.ndarray, W: int, chosen: int, placements) -> dict | None:
    """First way a round breaks W1 relative to its pre-state, or None."""
    n = x.shape[0]
    z_c = n * int(x[chosen]) - W
    total = sum(c for _, c in placements)
    if z_c >= 0:
        if len(placements) != 1 or placements[0][0] != chosen or total != 1:
            return {"rule": "overloaded chosen bin must receive exactly one ball", "placements": list(placements)}
        return None
    need = ceil_div(-z_c, n) + 1
    if total != need:
        return {"rule": "total must be ceil(-y_i)+1", "expected": need, "got": total}
    # k1 and k2 are capacities: one bin may take ceil(-y)+1, a second at most ceil(-y).
    full = []
    k1 = None
    for b, c in placements:
        if c <= 0:
            continue
        cap = ceil_div(W - n * int(x[b]), n)  # ceil(-y_b)
        if c > cap + 1:
            return {"rule": "no bin receives more than ceil(-y)+1", "bin": b, "balls": c, "cap": cap + 1}
        if c == cap + 1:
            if k1 is not None:
                return {"rule": "at most one bin receives ceil(-y)+1", "bins": [k1, b]}
            k1 = b
        if c >= cap:
            full.append(b)
            if len(full) > 2:
                return {"rule": "at most two bins receive ceil(-y) or more", "bins": full}
    return None


def classify_weights(trace, states, condition: str = "W1", weights: tuple[int, int] | None = None,
                     config: ProcessConfig | None = None) -> ConditionReport:
    """Check realized placements against W1, W2 or W3 round by round.

    For W2/W3 the constants are inferred from the first round of each branch
    unless ``weights`` = (w_+, w_-) is supplied. Passing ``config`` adds the
    W3 requirement that p is non-decreasing along the ranks.
    """
    events = list(trace)
    states = list(states)
    if len(events) != len(states):
        raise ValueError("trace and states differ in length")
    condition = condition.upper()
    if condition not in ("W1", "W2", "W3"):
        raise ValueError(f"unknown weight condition {condition}")
    w_plus, w_minus = weights if weights is not None else (None, None)
    for ev, st in zip(events, states):
        x, W = st.load.x, st.load.W
        chosen = ev.chosen if ev.chosen >= 0 else ev.samples[0]
        if condition == "W1":
            bad = w1_violation(x, W, chosen, ev.placements)
            if bad is not None:
                bad["round"] = ev.round
                return ConditionReport("W1", False, bad)
            continue
        if len(ev.placements) != 1 or ev.placements[0][0] != chosen:
            return ConditionReport(condition, False, {"round": ev.round, "rule": "all balls go to the chosen bin"})
        under = st.load.n * int(x[chosen]) < W
        if under:
            w_minus = ev.weight if w_minus is None else w_minus
            expect = w_minus
        else:
            w_plus = ev.weight if w_plus is None else w_plus
            expect = w_plus
        if ev.weight != expect:
            return ConditionReport(condition, False, {"round": ev.round, "branch": "-" if under else "+",
                                                      "expected": expect, "got": ev.weight})
        if config is not None and condition == "W3":
            p = distribution_vector(config, st)
            if any(int(a) * 1 > int(b) for a, b in zip(p.num[:-1], p.num[1:])):
                return ConditionReport(condition, False, {"round": ev.round, "rule": "p must be non-decreasing"})
    consts = {"w_plus": w_plus, "w_minus": w_minus} if condition != "W1" else {}
    if condition != "W1" and w_plus is not None and w_minus is not None and w_plus > w_minus:
        return ConditionReport(condition, False, {"rule": "w_+ <= w_-"}, consts)
    if condition == "W3" and w_plus is not None and w_minus is not None and not w_plus < w_minus:
        return ConditionReport(condition, False, {"rule": "w_+ < w_-"}, consts)
    return ConditionReport(condition, True, None, consts)


def synthetic_w1_event(state: ProcessState, chosen: int, rng: random.Random, violate: bool = False,
                       ) -> AllocationEvent:
    """A synthetic round exercising W1's freedom to spread balls (testing aid).

    With ``violate`` the balls are dumped into one bin at least one above the
    mean, which W1 forbids whenever the chosen bin is underloaded.
    """
    x, W, n = state.load.x, state.load.W, state.load.n
    z_c = n * int(x[chosen]) - W
    if z_c >= 0:
        return AllocationEvent(state.round, (chosen,), ((chosen, 1),), 1, chosen)
    k = ceil_div(-z_c, n) + 1
    if violate:
        heavy = [b for b in range(n) if n * int(x[b]) - W >= n]
        if heavy:
            return AllocationEvent(state.round, (chosen,), ((heavy[0], k),), k, chosen)
        return AllocationEvent(state.round, (chosen,), ((chosen, k + 1),), k + 1, chosen)
    bins = list(range(n))
    rng.shuffle(bins)
    neg_ceil = {b: ceil_div(W - n * int(x[b]), n) for b in bins}
    k1, k2 = bins[0], bins[1]
    caps = {b: max(0, neg_ceil[b] - 1) for b in bins}
    caps[k1] = max(0, neg_ceil[k1] + 1)
    caps[k2] = max(0, neg_ceil[k2])
    if sum(caps.values()) < k:
        return AllocationEvent(state.round, (chosen,), ((chosen, k),), k, chosen)
    give = {b: 0 for b in bins}
    left = k
    while left:
        b = rng.choice([b for b in bins if give[b] < caps[b]])
        give[b] += 1
        left -= 1
    placements = tuple((b, c) for b, c in give.items() if c)
    return AllocationEvent(state.round, (chosen,), placements, k, chosen)


# ---------------------------------------------------------------------------
# Unfolding and Caching groups


@dataclass(frozen=True)
class Unfolding:
    targets: tuple[int, ...]  # one bin per atomic allocation
    starts: tuple[int, ...]  # starts[t] = s(t), index of the first atomic allocation of round t

    def __len__(self):
        return len(self.targets)


def _designated_first(x, W, placements):
    n = x.shape[0]

    def key(item):
        b, c = item
        cap = ceil_div(W - n * int(x[b]), n)
        return 0 if c == cap + 1 else (1 if c == cap else 2)
    return sorted(placements, key=key)


def unfold(trace, states=None) -> Unfolding:
    """Expand rounds into single-ball allocations, k1 then k2 first when the
    pre-states are given."""
    targets: list[int] = []
    starts: list[int] = []
    states = None if states is None else list(states)
    for r, ev in enumerate(trace):
        starts.append(len(targets))
        placements = ev.placements
        if states is not None:
            st = states[r]
            placements = _designated_first(st.load.x, st.load.W, placements)
        for b, c in placements:
            targets.extend([b] * c)
    return Unfolding(tuple(targets), tuple(starts))


@dataclass(frozen=True)
class CachingGroup:
    start: int  # atomic index of the first allocation
    size: int
    chosen: int
    counts: tuple[tuple[int, int], ...]
    complete: bool


@dataclass(frozen=True)
class GroupedTrace:
    groups: tuple[CachingGroup, ...]

    def __len__(self):
        return len(self.groups)


def group_caching_trace(targets, start: LoadState | None = None, n: int | None = None
                        ) -> tuple[GroupedTrace, ConditionReport]:
    """Fold an atomic Caching trace into W1 rounds and check each one.

    ``targets`` holds the receiving bin of every atomic allocation (or
    AllocationEvents of a Caching run). A group opens at the receiving bin of
    its first ball; it has one ball when that bin is overloaded and
    ceil(-y)+1 balls otherwise, measured at the group's start. A trailing
    group cut off by the end of the trace is not checked.
    """
    targets = [ev.chosen if isinstance(ev, AllocationEvent) else int(ev) for ev in targets]
    if start is None:
        if n is None:
            raise ValueError("give the start state or n")
        x = np.zeros(n, dtype=np.int64)
        W = 0
    else:
        x = np.array(start.x, dtype=np.int64)
        W = start.W
    n = x.shape[0]
    groups = []
    s = 0
    T = len(targets)
    while s < T:
        c = targets[s]
        z_c = n * int(x[c]) - W
        size = 1 if z_c >= 0 else ceil_div(-z_c, n) + 1
        block = targets[s:s + size]
        counts: dict[int, int] = {}
        for b in block:
            counts[b] = counts.get(b, 0) + 1
        complete = len(block) == size
        placements = tuple(counts.items())
        if complete:
            bad = w1_violation(x, W, c, placements)
            if bad is not None:
                bad.update({"group": len(groups), "atomic_start": s})
                groups.append(CachingGroup(s, size, c, placements, complete))
                return GroupedTrace(tuple(groups)), ConditionReport("W1", False, bad)
        groups.append(CachingGroup(s, size, c, placements, complete))
        for b in block:
            x[b] += 1
        W += len(block)
        s += len(block)
    return GroupedTrace(tuple(groups)), ConditionReport("W1", True, None, {"groups": len(groups)})


def delta_step_violation(loads: np.ndarray, weights: np.ndarray, bound: int = 4) -> int | None:
    """First row t (of consecutive states) where Delta_{t+1} > Delta_t + bound, else None.

    Compared in scaled units: sum|z| / n.
    """
    n = loads.shape[1]
    z = n * loads - weights[:, None]
    scaled = np.abs(z).sum(axis=1)
    bad = np.nonzero(scaled[1:] > scaled[:-1] + bound * n)[0]
    return None if bad.size == 0 else int(bad[0])
