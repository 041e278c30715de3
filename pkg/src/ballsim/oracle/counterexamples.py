"""Configurations on which the exponential potentials rise in expectation."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..processes.config import ProcessConfig
from ..processes.step import ProcessState
from ..state import LoadState
from .expectation import ExpectationResult, one_step_expectation


def counterexample_config(kind: str, n: int, offset: int | None = None) -> LoadState:
    """Integer realisation of the B1 or B2 normalized-load vector.

    B1: (sqrt n, 0 x (n - sqrt n - 1), -1 x sqrt n), default offset sqrt n.
    B2: (n^2, n x (n-3), -n(2n-3)/2 x 2), default offset n(2n-3)/2.
    """
    kind = kind.upper()
    if kind == "B1":
        s = math.isqrt(n)
        if s * s != n or n < 4:
            raise ValueError(f"B1 needs a perfect square n >= 4, got {n}")
        y = [s] + [0] * (n - s - 1) + [-1] * s
        c = s if offset is None else offset
    elif kind == "B2":
        if n % 2 or n < 4:
            raise ValueError(f"B2 needs an even n >= 4, got {n}")
        h = n * (2 * n - 3) // 2
        y = [n * n] + [n] * (n - 3) + [-h, -h]
        c = h if offset is None else offset
    else:
        raise ValueError(f"unknown counterexample {kind!r}")
    if c < -min(y):
        raise ValueError("offset leaves a negative load")
    return LoadState.from_loads(np.array(y, dtype=np.int64) + c)


def verify_counterexamples(n_b1: int, alpha: float, n_b2: int | None = None
                           ) -> tuple[ExpectationResult, ExpectationResult]:
    """Both claims at the given sizes; each result carries the required factor.

    B1 uses the claim's own potential, summing over bins with y >= 0.
    """
    n_b2 = n_b1 if n_b2 is None else n_b2
    out = []
    for kind, n, cfg, pot in (("B1", n_b1, ProcessConfig.simple("Packing"), "phi0"),
                              ("B2", n_b2, ProcessConfig.simple("MeanThinning"), "lambda")):
        state = ProcessState(counterexample_config(kind, n))
        res = one_step_expectation(cfg, state, pot, alpha=alpha)
        need = 1 + 0.1 * alpha * alpha / n
        ratio = math.exp(res.log_expected - res.log_current)
        quant = Fraction(int(np.count_nonzero(n * state.load.x >= state.load.W)), n)
        consts = {"claim": kind, "n": n, "alpha": alpha, "ratio": ratio, "required": need, "quantile": quant}
        if kind == "B1":
            std = one_step_expectation(cfg, state, "phi", alpha=alpha)
            consts["ratio_two_above"] = math.exp(std.log_expected - std.log_current)
        out.append(ExpectationResult(pot, res.current, res.expected, None, ratio >= need,
                                     tolerance=res.tolerance, log_current=res.log_current,
                                     log_expected=res.log_expected,
                                     log_bound=res.log_current + math.log(need), constants=consts))
    return out[0], out[1]


def smallest_holding_n(kind: str, alpha: float, candidates) -> int | None:
    """First size in ``candidates`` at which the claimed increase is observed."""
    for n in candidates:
        b1, b2 = verify_counterexamples(n if kind == "B1" else 4, alpha, n if kind == "B2" else 4)
        res = b1 if kind == "B1" else b2
        if res.satisfied:
            return n
    return None
