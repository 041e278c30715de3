"""Drivers around the compiled kernels: simulations, trajectories and traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import RandomStream
from ..state import LoadState, PotentialReport, new_state, potentials
from . import kernels
from .config import Kind, ProcessConfig
from .step import AllocationEvent, ProcessState

DEFAULT_LAMBDA_ALPHA = 0.7
DEFAULT_PHI_ALPHA = 0.01


def kernel_params(config: ProcessConfig) -> np.ndarray:
    p = np.zeros(5, dtype=np.int64)
    p[0] = config.d if config.kind is Kind.DChoice else 1
    frac = config.beta if config.kind is Kind.OnePlusBeta else config.eta
    if frac is not None:
        p[1], p[2] = frac.numerator, frac.denominator
    if config.f is not None:
        p[3], p[4] = config.f.numerator, config.f.denominator
    else:
        p[4] = 1
    return p


def parse_trace_mode(mode, n: int) -> int | None:
    """Checkpoint spacing in rounds; None means only the final state."""
    if mode is None or mode == "final":
        return None
    if mode == "full":
        return 1
    if isinstance(mode, tuple) and mode[0] == "every":
        k = int(mode[1])
    elif isinstance(mode, str) and mode.startswith("every"):
        _, _, val = mode.partition(":")
        k = int(val) if val else n
    else:
        raise ValueError(f"unknown trace mode {mode!r}")
    if k < 1:
        raise ValueError("trace spacing must be positive")
    return k


class Runner:
    """Mutable simulation state driven by the kernels."""

    def __init__(self, config: ProcessConfig, start: ProcessState, stream: RandomStream):
        if start.cache is not None and config.kind is not Kind.Caching:
            raise ValueError("only Caching carries a cache")
        self.config = config
        self.kind = int(config.kind)
        self.params = kernel_params(config)
        self.x = np.array(start.load.x, dtype=np.int64)
        self.st = np.array([start.load.W, start.round, -1 if start.cache is None else start.cache, 0, start.round],
                           dtype=np.int64)
        self.stream = stream
        self._no_loads = np.zeros((0, self.x.shape[0]), dtype=np.int64)
        self._none = np.zeros(0, dtype=np.int64)
        self._none2 = np.zeros((0, 2), dtype=np.int64)

    @property
    def W(self) -> int:
        return int(self.st[0])

    @property
    def round(self) -> int:
        return int(self.st[1])

    def state(self) -> ProcessState:
        cache = int(self.st[2])
        return ProcessState(LoadState(self.x.copy(), self.W), None if cache < 0 else cache, self.round)

    def _call(self, stop_round, stop_weight, rec):
        s = self.stream
        while True:
            pos, status = kernels.advance(self.kind, self.params, self.x, self.st, s.buf, s.pos,
                                          stop_round, stop_weight, *rec)
            s.sync_after_kernel(pos)
            if status == kernels.NEED_RANDOM:
                s.refill()
                continue
            if status == kernels.OVERFLOW:
                raise OverflowError("total weight left the 64-bit scaled-load range")
            return status

    def run(self, stop_round: int | None = None, stop_weight: int | None = None) -> None:
        big = np.iinfo(np.int64).max
        self._call(big if stop_round is None else stop_round, big if stop_weight is None else stop_weight,
                   (self._no_loads, self._none, self._none, self._none, self._none2, self._none,
                    self._none, self._none))


@dataclass(frozen=True)
class TrajectoryPoint:
    round: int
    weight: int
    report: PotentialReport


def _start_state(config, n, start) -> ProcessState:
    if start is None:
        return ProcessState(new_state(n))
    if isinstance(start, LoadState):
        return ProcessState(start)
    return start


def simulate(config: ProcessConfig, n: int, rounds: int | None, seed: int, trace_mode="final", *,
             rep: int = 0, start=None, stop_balls: int | None = None,
             alpha: float = DEFAULT_LAMBDA_ALPHA, phi_alpha: float = DEFAULT_PHI_ALPHA,
             alpha_tilde: float | None = None):
    """Run ``rounds`` rounds (or until W >= ``stop_balls``) of a process.

    Returns (final ProcessState, trajectory or None). The trajectory includes
    the starting point and every checkpoint, plus the final state.
    """
    if rounds is None and stop_balls is None:
        raise ValueError("give rounds or stop_balls")
    if rounds is not None and rounds < 0:
        raise ValueError("rounds must be non-negative")
    state0 = _start_state(config, n, start)
    runner = Runner(config, state0, RandomStream(seed, rep))
    end_round = None if rounds is None else state0.round + rounds
    every = parse_trace_mode(trace_mode, state0.n)

    def report():
        st = LoadState(runner.x.copy(), runner.W)
        return TrajectoryPoint(runner.round, runner.W,
                               potentials(st, alpha=alpha, alpha_tilde=alpha_tilde, phi_alpha=phi_alpha))

    def finished():
        return (end_round is not None and runner.round >= end_round) or (
            stop_balls is not None and runner.W >= stop_balls)

    if every is None:
        runner.run(end_round, stop_balls)
        return runner.state(), None
    traj = [report()]
    while not finished():
        target = runner.round + every
        if end_round is not None:
            target = min(target, end_round)
        runner.run(target, stop_balls)
        traj.append(report())
    return runner.state(), traj


def run_balls(config: ProcessConfig, n: int, balls: int, seed: int, rep: int = 0) -> LoadState:
    """Final loads after the first round at which W >= balls."""
    state, _ = simulate(config, n, None, seed, rep=rep, stop_balls=balls)
    return state.load


@dataclass
class Trace:
    """Columnar record of consecutive rounds (row r is round start_round + r)."""

    config: ProcessConfig
    n: int
    start_round: int
    loads: np.ndarray  # pre-round loads, shape (R, n); may be empty when not kept
    weights: np.ndarray  # pre-round W
    caches: np.ndarray  # pre-round cache, -1 = none
    chosen: np.ndarray
    nsamp: np.ndarray
    samples: np.ndarray
    ploff: np.ndarray
    pbin: np.ndarray
    pcnt: np.ndarray
    final: ProcessState

    def __len__(self):
        return self.chosen.shape[0]

    def round_weight(self) -> np.ndarray:
        csum = np.concatenate([[0], np.cumsum(self.pcnt)])
        return csum[self.ploff[1:]] - csum[self.ploff[:-1]]

    def event(self, r: int) -> AllocationEvent:
        lo, hi = self.ploff[r], self.ploff[r + 1]
        placements = tuple((int(b), int(c)) for b, c in zip(self.pbin[lo:hi], self.pcnt[lo:hi]))
        return AllocationEvent(self.start_round + r, tuple(int(s) for s in self.samples[r, :self.nsamp[r]]),
                               placements, sum(c for _, c in placements), int(self.chosen[r]))

    def events(self) -> list[AllocationEvent]:
        return [self.event(r) for r in range(len(self))]

    def pre_state(self, r: int) -> ProcessState:
        cache = int(self.caches[r])
        return ProcessState(LoadState(self.loads[r].copy(), int(self.weights[r])),
                            None if cache < 0 else cache, self.start_round + r)

    def pre_states(self) -> list[ProcessState]:
        return [self.pre_state(r) for r in range(len(self))]


def record_trace(config: ProcessConfig, n: int, rounds: int, seed: int, *, rep: int = 0, start=None,
                 keep_loads: bool = True) -> Trace:
    state0 = _start_state(config, n, start)
    n = state0.n
    runner = Runner(config, state0, RandomStream(seed, rep))
    R = int(rounds)
    maxs = max(int(runner.params[0]), 2)
    loads = np.zeros((R if keep_loads else 0, n), dtype=np.int64)
    caches = np.zeros(R, dtype=np.int64)
    chosen = np.zeros(R, dtype=np.int64)
    nsamp = np.zeros(R, dtype=np.int64)
    samples = np.zeros((R, maxs), dtype=np.int64)
    ploff = np.zeros(R + 1, dtype=np.int64)
    cap = max(R, 16)
    pbin = np.zeros(cap, dtype=np.int64)
    pcnt = np.zeros(cap, dtype=np.int64)
    end = state0.round + R
    if R > 0:
        # Recording mode needs non-empty arrays; chosen has length R > 0.
        while True:
            status = runner._call(end, np.iinfo(np.int64).max,
                                  (loads, caches, chosen, nsamp, samples, ploff, pbin, pcnt))
            if status == kernels.NEED_SPACE:
                pbin = np.concatenate([pbin, np.zeros_like(pbin)])
                pcnt = np.concatenate([pcnt, np.zeros_like(pcnt)])
                continue
            break
    filled = int(runner.st[3])
    pcnt_used = pcnt[:filled]
    W0 = state0.load.W
    per_round = np.zeros(R, dtype=np.int64)
    if R:
        csum = np.concatenate([[0], np.cumsum(pcnt_used)])
        per_round = csum[ploff[1:]] - csum[ploff[:-1]]
    weights = W0 + np.concatenate([[0], np.cumsum(per_round)[:-1]]) if R else np.zeros(0, dtype=np.int64)
    return Trace(config, n, state0.round, loads, weights.astype(np.int64), caches, chosen, nsamp, samples,
                 ploff, pbin[:filled], pcnt_used, runner.state())
