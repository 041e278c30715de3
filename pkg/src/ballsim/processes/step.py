"""Reference (pure Python) implementation of one round of every process."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..rng import RandomStream
from ..state import MAX_SCALED, LoadState, ceil_div, new_state
from .config import Kind, ProcessConfig


@dataclass(frozen=True)
class ProcessState:
    load: LoadState
    cache: int | None = None
    round: int = 0

    def __post_init__(self):
        if self.cache is not None and not (0 <= self.cache < self.load.n):
            raise ValueError(f"cache {self.cache} is not a bin index")
        if self.round < 0:
            raise ValueError("round must be non-negative")

    @classmethod
    def empty(cls, n: int) -> "ProcessState":
        return cls(new_state(n))

    @property
    def n(self) -> int:
        return self.load.n


@dataclass(frozen=True)
class AllocationEvent:
    round: int
    samples: tuple[int, ...]
    placements: tuple[tuple[int, int], ...]
    weight: int
    chosen: int = field(default=-1)  # bin the process selected (the "i" of the weight rules)

    def __post_init__(self):
        if self.weight != sum(b for _, b in self.placements) or self.weight < 1:
            raise ValueError("weight must equal the placed balls and be positive")


def overpacking_placements(x: np.ndarray, W: int, i: int) -> list[tuple[int, int]]:
    """Placements of an OverPacking round whose sampled bin i is underloaded.

    The heaviest underloaded bin j is lifted to ceil(W/n); the rest of the
    ceil(-y_i)+1 balls go to the next underloaded bins in sorted order, none
    of them exceeding ceil(W/n)-1. If those bins cannot absorb everything, the
    single leftover ball goes to j.
    """
    n = x.shape[0]
    top = ceil_div(W, n)
    k = top + 1 - int(x[i])
    under = [b for b in range(n) if n * int(x[b]) < W]
    under.sort(key=lambda b: (-int(x[b]), b))
    j = under[0]
    give = {j: min(k, top - int(x[j]))}
    left = k - give[j]
    for b in under[1:]:
        if left == 0:
            break
        room = top - 1 - int(x[b])
        if room > 0:
            put = min(room, left)
            give[b] = put
            left -= put
    if left:
        give[j] += left
    return [(b, c) for b, c in give.items() if c > 0]


def placements_for(config: ProcessConfig, x: np.ndarray, W: int, chosen: int) -> list[tuple[int, int]]:
    """Deterministic part of a round once the process has chosen its bin."""
    kind = config.kind
    n = x.shape[0]
    under = n * int(x[chosen]) < W
    if kind is Kind.Twinning:
        return [(chosen, 2 if under else 1)]
    if kind is Kind.Packing:
        return [(chosen, ceil_div(W, n) + 1 - int(x[chosen]) if under else 1)]
    if kind is Kind.OverPacking:
        return overpacking_placements(x, W, chosen) if under else [(chosen, 1)]
    return [(chosen, 1)]


def _thinning_first(config: ProcessConfig, x_i1: int, n: int, t: int, W: int) -> bool:
    if config.kind is Kind.Thinning:
        f = config.f
        return n * x_i1 * f.denominator < t * f.denominator + n * f.numerator
    return n * x_i1 < W


def step(config: ProcessConfig, state: ProcessState, rng: RandomStream) -> tuple[ProcessState, AllocationEvent]:
    x = state.load.x
    W = state.load.W
    n = x.shape[0]
    t = state.round
    kind = config.kind
    cache = state.cache
    if cache is not None and kind is not Kind.Caching:
        raise ValueError("only Caching carries a cache")

    if kind is Kind.OnePlusBeta:
        beta = config.beta
        d = 2 if rng.bernoulli(beta.numerator, beta.denominator) else 1
        samples = tuple(rng.below(n) for _ in range(d))
        chosen = min(samples, key=lambda b: (int(x[b]), b))
    elif kind is Kind.DChoice:
        samples = tuple(rng.below(n) for _ in range(config.d))
        chosen = min(samples, key=lambda b: (int(x[b]), b))
    elif kind in (Kind.Thinning, Kind.MeanThinning):
        samples = (rng.below(n), rng.below(n))
        chosen = samples[0] if _thinning_first(config, int(x[samples[0]]), n, t, W) else samples[1]
    elif kind is Kind.OnePlusEtaMeanThinning:
        eta = config.eta
        if rng.bernoulli(eta.numerator, eta.denominator):
            samples = (rng.below(n), rng.below(n))
            chosen = samples[0] if n * int(x[samples[0]]) < W else samples[1]
        else:
            samples = (rng.below(n),)
            chosen = samples[0]
    elif kind is Kind.Caching:
        i = rng.below(n)
        if cache is None:
            samples, chosen, cache = (i,), i, i
        else:
            samples = (i, cache)
            if x[i] < x[cache]:
                chosen, cache = i, i
            elif x[i] == x[cache]:
                chosen = i
            else:
                chosen = cache
    else:
        samples = (rng.below(n),)
        chosen = samples[0]

    placements = placements_for(config, x, W, chosen)
    weight = sum(c for _, c in placements)
    if (W + weight) * n >= MAX_SCALED:
        raise OverflowError("total weight left the 64-bit scaled-load range")
    new_x = x.copy()
    for b, c in placements:
        new_x[b] += c
    new_x.setflags(write=False)
    event = AllocationEvent(t, tuple(int(s) for s in samples), tuple(placements), weight, int(chosen))
    return ProcessState(LoadState(new_x, W + weight), cache, t + 1), event
