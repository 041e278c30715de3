"""Exact gap distributions for tiny instances, and the Monte-Carlo counterpart."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..processes import kernels
from ..processes.config import Kind, ProcessConfig
from ..processes.simulate import kernel_params
from ..processes.step import ProcessState
from ..rng import RandomStream
from ..state import LoadState
from .expectation import outcomes

MAX_DP_BINS = 4
MAX_DP_ROUNDS = 12


@dataclass(frozen=True)
class ExactGapDistribution:
    dist: dict  # gap (Fraction) -> probability (Fraction)
    n: int
    m: int
    process: str

    def __post_init__(self):
        if sum(self.dist.values(), Fraction(0)) != 1:
            raise ValueError("probabilities must sum to one")

    def to_json(self) -> dict:
        return {"process": self.process, "n": self.n, "m": self.m,
                "dist": {str(g): str(p) for g, p in sorted(self.dist.items())}}


def _caching_moves(loads: tuple, cache_load):
    """Enumerate one Caching round from a canonical (sorted loads, cache load) state."""
    n = len(loads)
    x = list(loads)
    b = None if cache_load is None else x.index(cache_load)
    for i in range(n):
        y = list(x)
        if b is None:
            y[i] += 1
            new_b = i
        elif x[i] < x[b]:
            y[i] += 1
            new_b = i
        elif x[i] == x[b]:
            y[i] += 1
            new_b = b
        else:
            y[b] += 1
            new_b = b
        yield tuple(sorted(y, reverse=True)), y[new_b]


def exact_gap_distribution(config: ProcessConfig, n: int, m: int) -> ExactGapDistribution:
    """Gap distribution after m rounds from empty, by dynamic programming."""
    if not (2 <= n <= MAX_DP_BINS) or not (0 <= m <= MAX_DP_ROUNDS):
        raise ValueError(f"exact DP supports 2 <= n <= {MAX_DP_BINS} and 0 <= m <= {MAX_DP_ROUNDS}")
    level: dict = {((0,) * n, None): Fraction(1)}
    for t in range(m):
        nxt: dict = defaultdict(Fraction)
        for (loads, cache_load), prob in level.items():
            if config.kind is Kind.Caching:
                share = prob / n
                for key in _caching_moves(loads, cache_load):
                    nxt[key] += share
                continue
            state = ProcessState(LoadState.from_loads(loads), None, t)
            for p, post, _ in outcomes(config, state):
                key = (tuple(sorted(post.tolist(), reverse=True)), None)
                nxt[key] += prob * p
        level = dict(nxt)
    dist: dict = defaultdict(Fraction)
    for (loads, _), prob in level.items():
        W = sum(loads)
        dist[Fraction(max(loads) * n - W, n)] += prob
    return ExactGapDistribution(dict(dist), n, m, config.label)


def monte_carlo_gap_distribution(config: ProcessConfig, n: int, m: int, samples: int, seed: int,
                                 rep: int = 0) -> dict:
    """Empirical gap frequencies over ``samples`` runs drawn from one stream."""
    stream = RandomStream(seed, rep, block=1 << 20)
    params = kernel_params(config)
    out_x = np.zeros((samples, n), dtype=np.int64)
    out_w = np.zeros(samples, dtype=np.int64)
    done = 0
    while done < samples:
        pos, done = kernels.batch_final(int(config.kind), params, n, m, done, samples,
                                        stream.buf, stream.pos, out_x, out_w)
        stream.sync_after_kernel(pos)
        if done < samples:
            stream.refill()
    scaled = out_x.max(axis=1) * n - out_w
    values, counts = np.unique(scaled, return_counts=True)
    return {Fraction(int(v), n): Fraction(int(c), samples) for v, c in zip(values, counts)}


def total_variation(p: dict, q: dict) -> Fraction:
    keys = set(p) | set(q)
    return sum((abs(p.get(k, Fraction(0)) - q.get(k, Fraction(0))) for k in keys), Fraction(0)) / 2
