"""Acceptance criteria 1-11.

Each test records one PASS/FAIL line; ``conftest.py`` prints them at the end
of the session, and running this file directly prints them as well.
Large-n gap tables share one cache so each histogram is simulated once.
"""

import time
from fractions import Fraction
from functools import lru_cache

import pytest

from ballsim.harness import ExperimentSpec, gap_histogram, oracle_report, run_suite, scaling_rows
from ballsim.harness.cli import main
from ballsim.harness.experiments import default_threads
from ballsim.processes import ProcessConfig, parse_process

RESULTS: dict[int, str] = {}
SEED = 0
N_SMALL, N_LARGE = 1000, 10_000
LARGE_REPS = 25  # repetitions per process at n=10^4 in the scaling check


def record(k: int, ok: bool, detail: str) -> None:
    RESULTS[k] = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[k])


@lru_cache(maxsize=None)
def table(name: str):
    spec = ExperimentSpec("gapdist", ProcessConfig.simple(name), N_SMALL, 1000 * N_SMALL, "balls", 100, SEED)
    t0 = time.perf_counter()
    hist = gap_histogram(spec, default_threads())
    return hist, time.perf_counter() - t0


def _count(hist, lo, hi) -> int:
    return sum(c for g, c in hist.counts.items() if lo <= g <= hi)


def test_criterion_01_caching_table():
    hist, secs = table("Caching")
    inside = sum(c for g, c in hist.counts.items() if g in (2, 3))
    ok = inside >= 95 and secs < 30
    record(1, ok, f"Caching gap in {{2,3}}: {inside}/100; {hist.table().replace(chr(10), ', ')}; {secs:.1f}s")
    assert inside >= 95
    assert secs < 30


def test_criterion_02_meanthinning_table():
    hist, secs = table("MeanThinning")
    inside = _count(hist, 4, 9)
    mean = float(hist.mean)
    ok = inside >= 90 and 5.0 <= mean <= 7.0 and secs < 60
    record(2, ok, f"MeanThinning gap in [4,9]: {inside}/100, mean {mean:.2f}; {secs:.1f}s")
    assert inside >= 90
    assert 5.0 <= mean <= 7.0
    assert secs < 60


def test_criterion_03_twinning_and_packing_tables():
    tw, s1 = table("Twinning")
    pk, s2 = table("Packing")
    a, b = _count(tw, 8, 17), _count(pk, 6, 15)
    ok = a >= 90 and b >= 90 and s1 + s2 < 60
    record(3, ok, f"Twinning in [8,17]: {a}/100 (mean {float(tw.mean):.2f}); "
                  f"Packing in [6,15]: {b}/100 (mean {float(pk.mean):.2f}); {s1 + s2:.1f}s")
    assert a >= 90
    assert b >= 90
    assert s1 + s2 < 60


ORDER = ("Caching", "MeanThinning", "Packing", "Twinning")


def test_criterion_04_scaling_order():
    t0 = time.perf_counter()
    means = {(name, N_SMALL): table(name)[0].mean for name in ORDER}
    rows = scaling_rows([ProcessConfig.simple(p) for p in ORDER], [N_LARGE], 1000, LARGE_REPS, SEED,
                        default_threads())
    means.update({(r["process"], N_LARGE): r["mean_gap"] for r in rows})
    secs = time.perf_counter() - t0
    gaps = {n: [float(means[(p, n)]) for p in ORDER] for n in (N_SMALL, N_LARGE)}
    seps = {n: [b - a for a, b in zip(v, v[1:])] for n, v in gaps.items()}
    ok = all(s >= 1.0 for v in seps.values() for s in v) and secs < 600
    detail = "; ".join(f"n={n}: " + " < ".join(f"{p} {g:.2f}" for p, g in zip(ORDER, v)) for n, v in gaps.items())
    record(4, ok, f"{detail}; {secs:.0f}s")
    for n, v in seps.items():
        for pair, s in zip(zip(ORDER, ORDER[1:]), v):
            assert s >= 1.0, f"n={n}: {pair[1]} - {pair[0]} = {s:.2f}"
    assert secs < 600


def test_criterion_05_oracle_equivalence():
    t0 = time.perf_counter()
    names = ("OneChoice", "TwoChoice", "Twinning", "MeanThinning", "Packing", "Caching")
    reports = [oracle_report(parse_process(p), 3, 6, 1_000_000, SEED) for p in names]
    secs = time.perf_counter() - t0
    worst = max(r["tv"] for r in reports)
    ok = all(r["tv"] < 0.01 for r in reports) and secs < 120
    record(5, ok, "TV " + ", ".join(f"{r['process']} {r['tv']:.4f}" for r in reports) + f"; {secs:.1f}s")
    assert worst < 0.01
    assert secs < 120


def test_criterion_06_drift_suite():
    t0 = time.perf_counter()
    report = run_suite("drift", n=64, states=1000, caching_n=100, caching_states=100, seed=SEED,
                       threads=default_threads())
    secs = time.perf_counter() - t0
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    record(6, report["passed"] and secs < 300,
           f"{len(report['checks'])} drift checks, failed: {failed or 'none'}; {secs:.1f}s")
    assert report["passed"], failed
    assert secs < 300


def test_criterion_07_counterexamples():
    t0 = time.perf_counter()
    report = run_suite("counterexamples", n=10_000, alpha=0.5)
    secs = time.perf_counter() - t0
    by_name = {c["name"]: c for c in report["checks"]}
    record(7, report["passed"] and secs < 10,
           ", ".join(f"{k}={'ok' if c['passed'] else 'no'}" for k, c in by_name.items()) + f"; {secs:.2f}s")
    assert report["passed"]
    assert secs < 10


def test_criterion_08_couplings():
    t0 = time.perf_counter()
    report = run_suite("couplings", n=50, m=5000, f=3, runs=1000, dom_n=100, dom_m=10_000, dom_reps=1000,
                       prefix_max_n=2, seed=SEED, threads=default_threads())
    secs = time.perf_counter() - t0
    checks = [c for c in report["checks"] if "majorizes" not in c["name"]]
    ok = all(c["passed"] for c in checks) and secs < 180
    record(8, ok, ", ".join(f"{c['name']}={'ok' if c['passed'] else 'no'}" for c in checks) + f"; {secs:.1f}s")
    assert all(c["passed"] for c in checks), [c for c in checks if not c["passed"]]
    assert secs < 180


def test_criterion_09_framework():
    t0 = time.perf_counter()
    report = run_suite("framework", n=64, m=10_000, traces=100, caching_traces=1000, seed=SEED,
                       threads=default_threads())
    secs = time.perf_counter() - t0
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    record(9, report["passed"] and secs < 300,
           f"{len(report['checks'])} classification checks, failed: {failed or 'none'}; {secs:.1f}s")
    assert report["passed"], failed
    assert secs < 300


def test_criterion_10_majorization():
    from ballsim.couplings import beta_eta_prefix_check

    t0 = time.perf_counter()
    bad = [(n, b) for b in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))
           for n in range(2, 129) if not beta_eta_prefix_check(n, b).holds]
    secs = time.perf_counter() - t0
    record(10, not bad and secs < 60, f"n in 2..128 x 4 betas, failures: {bad or 'none'}; {secs:.1f}s")
    assert not bad
    assert secs < 60


def test_criterion_11_determinism(tmp_path):
    t0 = time.perf_counter()
    runs = {
        "gapdist": ["gapdist", "--process", "MeanThinning", "--n", "200", "--balls", "200000", "--reps", "12"],
        "scaling": ["scaling", "--n", "100,200", "--reps", "4", "--m-factor", "200"],
        "run": ["run", "--n", "100", "--rounds", "50000", "--trace", "every:5000", "--start", "half-split:log"],
        "verify": ["verify", "couplings", "--n", "20", "--rounds", "500", "--reps", "20"],
    }
    same = {}
    for name, argv in runs.items():
        blobs = []
        for threads in (1, 4):
            path = tmp_path / f"{name}-{threads}"
            assert main(argv + ["--threads", str(threads), "--out", str(path)]) == 0
            blobs.append(path.read_bytes())
        same[name] = blobs[0] == blobs[1]
    secs = time.perf_counter() - t0
    record(11, all(same.values()) and secs < 60,
           ", ".join(f"{k}={'identical' if v else 'DIFFERENT'}" for k, v in same.items()) + f"; {secs:.1f}s")
    assert all(same.values()), same
    assert secs < 60


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
