"""Exact load vectors and the scalar observables derived from them.

Every comparison against the average load goes through the scaled vector
z_i = n*x_i - W, so y_i = z_i / n is never materialised as a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MAX_BINS = 1 << 20
# n * W must stay below this so that every z_i fits in a signed 64-bit int.
MAX_SCALED = 1 << 62


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LoadState:
    """Integer loads of n bins together with the total weight W."""

    x: np.ndarray
    W: int

    def __post_init__(self):
        x = self.x
        if not (isinstance(x, np.ndarray) and x.dtype == np.int64 and not x.flags.writeable):
            x = _frozen_array(x)
            object.__setattr__(self, "x", x)
        if x.ndim != 1:
            raise ValueError("loads must be a flat vector")
        n = x.shape[0]
        if n < 2:
            raise ValueError(f"need at least 2 bins, got {n}")
        if n > MAX_BINS:
            raise ValueError(f"at most {MAX_BINS} bins are supported")
        if n and int(x.min()) < 0:
            raise ValueError("loads must be non-negative")
        W = int(self.W)
        object.__setattr__(self, "W", W)
        if int(x.sum()) != W:
            raise ValueError(f"W={W} does not equal the load sum {int(x.sum())}")
        if W * n >= MAX_SCALED:
            raise OverflowError("n*W exceeds the 64-bit scaled-load range")

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @classmethod
    def from_loads(cls, loads) -> "LoadState":
        arr = _frozen_array(loads)
        return cls(arr, int(arr.sum()))

    def __eq__(self, other):
        if not isinstance(other, LoadState):
            return NotImplemented
        return self.W == other.W and np.array_equal(self.x, other.x)

    def __hash__(self):
        return hash((self.W, self.x.tobytes()))

    def __repr__(self):
        return f"LoadState(x={self.x.tolist()}, W={self.W})"


@dataclass(frozen=True)
class ScaledLoads:
    z: np.ndarray
    n: int

    def y(self, i: int) -> Fraction:
        return Fraction(int(self.z[i]), self.n)


@dataclass(frozen=True)
class PotentialReport:
    delta: Fraction
    upsilon: Fraction
    phi: float
    lam: float
    v: float
    psi: float
    quantile: Fraction
    gap: Fraction
    spread: int  # max - min load

    def as_row(self) -> dict:
        return {
            "gap": self.gap,
            "delta": self.delta,
            "upsilon": self.upsilon,
            "phi": self.phi,
            "lambda": self.lam,
            "v": self.v,
            "quantile": self.quantile,
        }


def new_state(n: int) -> LoadState:
    if n < 2:
        raise ValueError(f"need at least 2 bins, got {n}")
    return LoadState(np.zeros(n, dtype=np.int64), 0)


def scaled_vector(x: np.ndarray, W: int) -> np.ndarray:
    """z = n*x - W as int64 (callers guarantee n*W < 2^62)."""
    return x.shape[0] * x - W


def scaled_loads(state: LoadState) -> ScaledLoads:
    return ScaledLoads(_frozen_array(scaled_vector(state.x, state.W)), state.n)


def gap(state: LoadState) -> Fraction:
    return Fraction(int(state.x.max()) * state.n - state.W, state.n)


def spread(state: LoadState) -> int:
    return int(state.x.max() - state.x.min())


def quantile(state: LoadState) -> Fraction:
    z = scaled_vector(state.x, state.W)
    return Fraction(int(np.count_nonzero(z >= 0)), state.n)


def ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def ceil_neg_y(z_i: int, n: int) -> int:
    """The integer ceiling of -y_i = -z_i/n."""
    return ceil_div(-z_i, n)


def sorted_order(x: np.ndarray) -> np.ndarray:
    """Bin indices by non-increasing load, ties by ascending index."""
    return np.lexsort((np.arange(x.shape[0]), -x))


def _sum_abs(z: np.ndarray) -> int:
    return int(np.abs(z).sum())


def _sum_sq(z: np.ndarray) -> int:
    peak = int(np.abs(z).max()) if z.size else 0
    if peak < (1 << 31) and peak * peak * z.size < (1 << 62):
        return int((z * z).sum())
    # Products may leave int64; fall back to Python integers.
    return sum(int(v) * int(v) for v in z.tolist())


def exp_sum(exponents: np.ndarray) -> float:
    """Sum of exp(e) in double precision; inf if it overflows."""
    if exponents.size == 0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.exp(exponents).sum())


def log_exp_sum(exponents: np.ndarray) -> float:
    if exponents.size == 0:
        return -math.inf
    top = float(exponents.max())
    return top + math.log(float(np.exp(exponents - top).sum()))


def potentials(state: LoadState, alpha: float = 0.7, alpha_tilde: float | None = None,
               phi_alpha: float | None = None) -> PotentialReport:
    """All potentials of one state.

    ``alpha`` drives Lambda (and Phi unless ``phi_alpha`` is given);
    ``alpha_tilde`` drives V and defaults to 1/(12n). Psi always uses 1/(12n).
    """
    n = state.n
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha_tilde is None:
        alpha_tilde = 1.0 / (12 * n)
    if alpha_tilde <= 0:
        raise ValueError("alpha_tilde must be positive")
    if phi_alpha is None:
        phi_alpha = alpha
    if phi_alpha <= 0:
        raise ValueError("phi alpha must be positive")
    z = scaled_vector(state.x, state.W)
    y = z / n
    absy = np.abs(y)
    heavy = y[z >= 2 * n]
    return PotentialReport(
        delta=Fraction(_sum_abs(z), n),
        upsilon=Fraction(_sum_sq(z), n * n),
        phi=exp_sum(phi_alpha * heavy),
        lam=exp_sum(alpha * absy),
        v=exp_sum(alpha_tilde * absy),
        psi=exp_sum(heavy / (12 * n)),
        quantile=Fraction(int(np.count_nonzero(z >= 0)), n),
        gap=Fraction(int(z.max()), n),
        spread=int(state.x.max() - state.x.min()),
    )
