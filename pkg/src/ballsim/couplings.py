"""Coupled Thinning runs and the (1+beta) versus (1+eta) majorization check."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from .framework import ConditionReport, first_majorization_failure, one_plus_beta_closed, one_plus_eta_closed
from .processes import kernels
from .processes.config import ProcessConfig
from .processes.simulate import simulate
from .rng import RandomStream
from .state import LoadState


@dataclass(frozen=True)
class CoupledTrace:
    f: Fraction
    samples: np.ndarray  # (m, 2) shared (i1, i2) pairs
    traj_a: np.ndarray | None  # (m+1, n) loads per round, when recorded
    traj_b: np.ndarray | None
    dominated: np.ndarray  # per round: x(A) <= x(B) on every bin
    violations: int
    case_disagreements: int
    final_a: LoadState
    final_b: LoadState

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.case_disagreements == 0


@njit(cache=True)
def _coupled(xa, xb, m, f_num, f_den, buf, pos, t0, samples, dominated, traj_a, traj_b, counters):
    """Advance both processes from round t0; returns (pos, round reached)."""
    n = xa.shape[0]
    keep = traj_a.shape[0] > 0
    t = t0
    while t < m:
        i1, p1 = kernels._below(buf, pos, n)
        if i1 < 0:
            return pos, t
        i2, p2 = kernels._below(buf, p1, n)
        if i2 < 0:
            return pos, t
        pos = p2
        samples[t, 0] = i1
        samples[t, 1] = i2
        rhs = t * f_den + n * f_num
        a_first = n * xa[i1] * f_den < rhs
        b_first = n * xb[i1] * f_den < rhs
        if not a_first and b_first:
            # A sits at or above the threshold, so B (which dominates A) must too.
            counters[1] += 1
        ta = i1 if a_first else i2
        tb = i1 if b_first else i2
        xa[ta] += 1
        xb[tb] += 1
        ok = xa[ta] <= xb[ta] and xa[tb] <= xb[tb]
        dominated[t] = ok
        if not ok:
            counters[0] += 1
        if keep:
            for b in range(n):
                traj_a[t + 1, b] = xa[b]
                traj_b[t + 1, b] = xb[b]
        t += 1
    return pos, t


def coupled_thinning(n: int, m: int, f, seed: int, rep: int = 0, record: bool = False) -> CoupledTrace:
    """A: Thinning(f) from empty. B: same threshold, f balls pre-placed per bin.

    Both consume the same (i1, i2) pairs. Only integer f is supported because
    B's head start must be a whole number of balls per bin.
    """
    f = Fraction(f)
    if f < 0:
        raise ValueError("f must be non-negative")
    if f.denominator != 1:
        raise ValueError("the coupling needs an integer f")
    if n < 2 or m < 0:
        raise ValueError("need n >= 2 and m >= 0")
    stream = RandomStream(seed, rep)
    xa = np.zeros(n, dtype=np.int64)
    xb = np.full(n, int(f), dtype=np.int64)
    samples = np.zeros((m, 2), dtype=np.int64)
    dominated = np.zeros(m, dtype=np.bool_)
    shape = (m + 1, n) if record else (0, n)
    traj_a = np.zeros(shape, dtype=np.int64)
    traj_b = np.zeros(shape, dtype=np.int64)
    if record:
        traj_a[0] = xa
        traj_b[0] = xb
    counters = np.zeros(2, dtype=np.int64)
    t = 0
    while t < m:
        pos, t = _coupled(xa, xb, m, f.numerator, f.denominator, stream.buf, stream.pos, t, samples,
                          dominated, traj_a, traj_b, counters)
        stream.sync_after_kernel(pos)
        if t < m:
            stream.refill()
    return CoupledTrace(f, samples, traj_a if record else None, traj_b if record else None, dominated,
                        int(counters[0]), int(counters[1]), LoadState.from_loads(xa), LoadState.from_loads(xb))


@dataclass(frozen=True)
class DominanceReport:
    holds: bool
    worst_margin: float  # min over g of (tail_0+f(g) + 3 SE - tail_f(g))
    worst_gap: int | None
    tails_f: dict
    tails_shift: dict
    reps: int


def gap_dominance(n: int, m: int, f, reps: int, seed: int, slack_se: float = 3.0) -> DominanceReport:
    """One-sided check P(Gap_f >= g) <= P(Gap_0 + f >= g) + slack at every integer g."""
    f = Fraction(f)
    thin = ProcessConfig.thinning(f)
    mean = ProcessConfig.simple("MeanThinning")
    gf, g0 = [], []
    for r in range(reps):
        sa, _ = simulate(thin, n, m, seed, rep=2 * r)
        sb, _ = simulate(mean, n, m, seed, rep=2 * r + 1)
        gf.append(Fraction(int(sa.load.x.max()) * n - sa.load.W, n))
        g0.append(Fraction(int(sb.load.x.max()) * n - sb.load.W, n) + f)
    lo = math.floor(min(min(gf), min(g0)))
    hi = math.ceil(max(max(gf), max(g0)))
    worst, worst_g = math.inf, None
    tails_f, tails_s = {}, {}
    for g in range(lo, hi + 2):
        pf = sum(v >= g for v in gf) / reps
        ps = sum(v >= g for v in g0) / reps
        se = math.sqrt(pf * (1 - pf) / reps + ps * (1 - ps) / reps)
        margin = ps + slack_se * se - pf
        tails_f[g], tails_s[g] = pf, ps
        if margin < worst:
            worst, worst_g = margin, g
    return DominanceReport(worst >= 0, worst, worst_g, tails_f, tails_s, reps)


def beta_eta_prefix_check(n: int, beta) -> ConditionReport:
    """(1+eta)-MeanThinning with eta = beta majorizes (1+beta) at every quantile j/n."""
    beta = Fraction(beta)
    q = one_plus_beta_closed(n, beta)
    q_pref = np.cumsum(q.num.astype(object))
    for j in range(1, n + 1):
        p = one_plus_eta_closed(n, beta, j)
        k = first_majorization_failure(p, q)
        if k is not None:
            return ConditionReport("majorization", False, {"n": n, "beta": beta, "j": j, "k": k})
        # At the quantile boundary both prefix sums equal delta - beta (delta - delta^2).
        delta = Fraction(j, n)
        boundary = delta - beta * (delta - delta * delta)
        p_pref = Fraction(int(np.sum(p.num[:j].astype(object))), p.den)
        if p_pref != boundary or Fraction(int(q_pref[j - 1]), q.den) != boundary:
            return ConditionReport("majorization", False,
                                   {"n": n, "beta": beta, "j": j, "rule": "boundary prefix sums differ"})
    return ConditionReport("majorization", True, None, {"n": n, "beta": beta})
