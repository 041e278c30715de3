"""Experiment drivers: gap histograms, scaling curves, trajectories, lower-bound probes."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from ..oracle.counterexamples import counterexample_config
from ..oracle.exact import exact_gap_distribution, monte_carlo_gap_distribution, total_variation
from ..processes.config import ProcessConfig
from ..processes.simulate import simulate
from ..state import LoadState, gap
from .spec import ExperimentSpec, GapHistogram

TRAJECTORY_COLUMNS = ("t", "balls", "gap", "delta", "upsilon", "phi", "lambda", "v", "quantile")
NORMALIZED = ("delta", "upsilon", "phi", "lambda", "v")


def default_threads() -> int:
    env = os.environ.get("BALLSIM_THREADS")
    if env:
        value = int(env)
        if value < 1:
            raise ValueError("BALLSIM_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


def parallel_map(fn, items, threads: int = 1) -> list:
    """Ordered map; results come back in input order whatever the pool width."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def start_state(start: str, n: int) -> LoadState | None:
    """Decode ``empty``, ``half-split:L`` (L an integer or ``log``), ``b1`` or ``b2``."""
    start = (start or "empty").strip().lower()
    if start == "empty":
        return None
    if start in ("b1", "b2"):
        return counterexample_config(start, n)
    if start.startswith("half-split:"):
        arg = start.split(":", 1)[1]
        L = max(1, round(math.log(n))) if arg == "log" else int(arg)
        if n % 2:
            raise ValueError("half-split needs an even number of bins")
        if L < 0:
            raise ValueError("half-split offset must be non-negative")
        # Half the bins sit L above the average and half L below; the average is L.
        return LoadState.from_loads(np.array([2 * L] * (n // 2) + [0] * (n // 2), dtype=np.int64))
    raise ValueError(f"unknown start {start!r}")


def _final(spec: ExperimentSpec, rep: int):
    start = start_state(spec.start, spec.n)
    if spec.m_unit == "rounds":
        st, _ = simulate(spec.process, spec.n, spec.m, spec.seed, rep=rep, start=start)
    else:
        base = 0 if start is None else start.W
        st, _ = simulate(spec.process, spec.n, None, spec.seed, rep=rep, start=start, stop_balls=base + spec.m)
    return st.load


def final_gaps(spec: ExperimentSpec, threads: int = 1) -> list[Fraction]:
    return parallel_map(lambda r: gap(_final(spec, r)), range(spec.reps), threads)


def gap_histogram(spec: ExperimentSpec, threads: int = 1) -> GapHistogram:
    return GapHistogram.from_gaps(final_gaps(spec, threads), spec.n, spec.m, spec.process.label)


def scaling_rows(processes, ns, m_factor: int, reps: int, seed: int, threads: int = 1) -> list[dict]:
    """Average final gap per (process, n) with m = m_factor * n balls."""
    rows = []
    for config in processes:
        for n in ns:
            spec = ExperimentSpec("gapdist", config, n, m_factor * n, "balls", reps, seed)
            gaps = final_gaps(spec, threads)
            rows.append({"process": config.label, "n": n, "m": m_factor * n, "reps": reps,
                         "mean_gap": sum(gaps, Fraction(0)) / reps, "min_gap": min(gaps), "max_gap": max(gaps)})
    return rows


def trajectory_rows(spec: ExperimentSpec, burn_in: int = 0) -> list[dict]:
    """Potential values at the trace cadence, plus columns divided by the row at ``burn_in``."""
    start = start_state(spec.start, spec.n)
    trace = spec.trace if spec.trace != "final" else "full"
    kwargs = dict(rep=0, start=start, alpha=spec.alpha, phi_alpha=spec.phi_alpha, alpha_tilde=spec.alpha_tilde)
    if spec.m_unit == "rounds":
        _, traj = simulate(spec.process, spec.n, spec.m, spec.seed, trace, **kwargs)
    else:
        base = 0 if start is None else start.W
        _, traj = simulate(spec.process, spec.n, None, spec.seed, trace, stop_balls=base + spec.m, **kwargs)
    rows = []
    for point in traj:
        row = {"t": point.round, "balls": point.weight}
        row.update(point.report.as_row())
        rows.append(row)
    ref = next((r for r in rows if r["t"] >= burn_in), rows[-1])
    for row in rows:
        for key in NORMALIZED:
            den = float(ref[key])
            row[f"{key}_norm"] = float(row[key]) / den if den else math.nan
    return rows


def lowerbound_probe(spec: ExperimentSpec, k, threads: int = 1) -> dict:
    """Empirical frequency of Gap >= k log n after ceil(k n log n) balls."""
    k = Fraction(k)
    if k <= 0:
        raise ValueError("k must be positive")
    n = spec.n
    balls = math.ceil(float(k) * n * math.log(n))
    target = float(k) * math.log(n)
    run = ExperimentSpec("lowerbound", spec.process, n, balls, "balls", spec.reps, spec.seed, start=spec.start)
    gaps = final_gaps(run, threads)
    hits = sum(1 for g in gaps if g >= target)
    return {"process": spec.process.label, "n": n, "k": k, "balls": balls, "threshold": target,
            "reps": spec.reps, "hits": hits, "frequency": hits / spec.reps,
            "mean_gap": sum(gaps, Fraction(0)) / spec.reps}


def oracle_report(config: ProcessConfig, n: int, m: int, samples: int, seed: int, tv_max: float = 0.01) -> dict:
    exact = exact_gap_distribution(config, n, m)
    mc = monte_carlo_gap_distribution(config, n, m, samples, seed)
    tv = total_variation(exact.dist, mc)
    return {"process": config.label, "n": n, "m": m, "samples": samples, "exact": exact.to_json()["dist"],
            "empirical": {str(g): float(p) for g, p in sorted(mc.items())}, "tv": float(tv),
            "tv_max": tv_max, "passed": float(tv) < tv_max}
