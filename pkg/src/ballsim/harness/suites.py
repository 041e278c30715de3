"""Named verification suites behind ``ballsim verify``.

Each suite returns a JSON-ready dict with an overall ``passed`` flag and one
entry per check (counts, violations, worst margins, fitted constants).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .. import framework as fw
from ..couplings import beta_eta_prefix_check, coupled_thinning, gap_dominance
from ..oracle import (random_reachable_states, verify_counterexamples,
                      verify_lambda_change, verify_phi_bound, verify_upsilon_drop, verify_v_drop,
                      worst_cache_two_step)
from ..processes.config import ProcessConfig
from ..processes.simulate import record_trace
from .experiments import parallel_map

SUITES = ("framework", "drift", "counterexamples", "couplings", "caching2step")


def _check(name: str, passed: bool, **info) -> dict:
    return {"name": name, "passed": bool(passed), **info}


def _report(suite: str, checks: list[dict], params: dict) -> dict:
    return {"suite": suite, "passed": all(c["passed"] for c in checks), "params": params, "checks": checks}


def _trace_rows(tr):
    """Pre-round loads of every round plus the final state, with weights and caches."""
    loads = np.vstack([tr.loads, tr.final.load.x[None, :]])
    weights = np.concatenate([tr.weights, [tr.final.load.W]])
    final_cache = -1 if tr.final.cache is None else tr.final.cache
    caches = np.concatenate([tr.caches, [final_cache]])
    return loads, weights, caches


# ---------------------------------------------------------------------------
# framework


def _scan_trace(config: ProcessConfig, n: int, m: int, seed: int, rep: int) -> dict:
    tr = record_trace(config, n, m, seed, rep=rep)
    loads, weights, caches = _trace_rows(tr)
    name = config.label
    out = {"states": 0, "P1_bad": None, "P2_bad": None, "P2_not_equal": None, "P3_bad": None, "delta_bad": None}
    if name == "Caching":
        keep = caches >= 0  # no distribution exists before the first cache is set
        loads, weights, caches = loads[keep], weights[keep], caches[keep]
        num, den, _ = fw.distribution_matrix(config, loads, weights, caches=caches)
    else:
        num, den, _ = fw.distribution_matrix(config, loads, weights)
    out["states"] = int(loads.shape[0])
    bad = np.flatnonzero(fw.check_P1_rows(num, den) >= 0)
    if bad.size:
        out["P1_bad"] = int(bad[0])
    if name in ("MeanThinning", "Twinning"):
        ok, eq = fw.check_P2_rows(num, den, loads, weights)
        if not ok.all():
            out["P2_bad"] = int(np.flatnonzero(~ok)[0])
        if not eq.all():
            out["P2_not_equal"] = int(np.flatnonzero(~eq)[0])
    if name == "MeanThinning":
        ok3 = fw.check_P3_rows(num, den, loads, weights, 1, 1)
        if not ok3.all():
            out["P3_bad"] = int(np.flatnonzero(~ok3)[0])
    if name in ("Packing", "OverPacking"):
        out["delta_bad"] = fw.delta_step_violation(loads, weights)
    return out


def _weights_check(config: ProcessConfig, condition: str, n: int, m: int, seed: int, rep: int):
    tr = record_trace(config, n, m, seed, rep=rep)
    return fw.classify_weights(tr.events(), tr.pre_states(), condition,
                               config=config if condition == "W3" else None)


def _caching_groups(n: int, m: int, seed: int, rep: int):
    tr = record_trace(ProcessConfig.simple("Caching"), n, m, seed, rep=rep, keep_loads=False)
    _, report = fw.group_caching_trace(tr.chosen.tolist(), n=n)
    return report


def framework_suite(n: int = 64, m: int = 10_000, traces: int = 100, caching_traces: int = 1000,
                    caching_n: int = 50, caching_m: int = 5000, weight_traces: int = 5, seed: int = 0,
                    threads: int = 1) -> dict:
    checks = []
    for name in ("Packing", "OverPacking", "Caching", "MeanThinning", "Twinning"):
        cfg = ProcessConfig.simple(name)
        scans = parallel_map(lambda r: _scan_trace(cfg, n, m, seed, r), range(traces), threads)
        states = sum(s["states"] for s in scans)

        def first_bad(key):
            return next(({"trace": r, "row": s[key]} for r, s in enumerate(scans) if s[key] is not None), None)

        bad = first_bad("P1_bad")
        checks.append(_check(f"P1 on {name}", bad is None, states=states, witness=bad))
        if name == "MeanThinning":
            bad = first_bad("P3_bad")
            checks.append(_check("P3(k1=1,k2=1) on MeanThinning", bad is None, states=states, witness=bad))
        if name == "Twinning":
            bad = first_bad("P2_bad")
            checks.append(_check("P2 on Twinning", bad is None, states=states, witness=bad))
            bad = first_bad("P2_not_equal")
            checks.append(_check("P2 with equality on Twinning", bad is None, states=states, witness=bad))
        if name in ("Packing", "OverPacking"):
            bad = first_bad("delta_bad")
            checks.append(_check(f"Delta step <= 4 on {name}", bad is None, states=states, witness=bad))

    for name, cond in (("Packing", "W1"), ("OverPacking", "W1"), ("Twinning", "W3"), ("MeanThinning", "W2")):
        cfg = ProcessConfig.simple(name)
        reports = parallel_map(lambda r: _weights_check(cfg, cond, n, m, seed, r), range(weight_traces), threads)
        bad = next((rep.witness for rep in reports if not rep.holds), None)
        checks.append(_check(f"{cond} on {name}", bad is None, traces=weight_traces, rounds=m, witness=bad))

    reports = parallel_map(lambda r: _caching_groups(caching_n, caching_m, seed, r), range(caching_traces), threads)
    bad = next((rep.witness for rep in reports if not rep.holds), None)
    groups = sum(rep.constants.get("groups", 0) for rep in reports if rep.holds)
    checks.append(_check("W1 on grouped Caching traces", bad is None, traces=caching_traces, n=caching_n,
                         rounds=caching_m, groups=groups, witness=bad))

    # P4 for (1+beta): k4 >= 1 - beta on states with the quantile inside the band.
    beta = Fraction(1, 2)
    cfg = ProcessConfig.one_plus_beta(beta)
    tr = record_trace(cfg, n, m, seed, rep=0)
    worst_k4, vacuous, bad = None, 0, None
    for r in range(0, len(tr), max(1, len(tr) // 500)):
        st = tr.pre_state(r)
        res = fw.check_P4(fw.distribution_vector(cfg, st), st, Fraction(1, 10))
        if res.vacuous:
            vacuous += 1
            continue
        k4 = res.constants["k4"]
        worst_k4 = k4 if worst_k4 is None else min(worst_k4, k4)
        if not res.holds or k4 < 1 - beta:
            bad = {"round": r, "k4": k4}
            break
    checks.append(_check("P4 on (1+beta), beta=1/2", bad is None, worst_k4=worst_k4, vacuous=vacuous,
                         witness=bad))
    return _report("framework", checks, {"n": n, "m": m, "traces": traces, "caching_traces": caching_traces,
                                         "caching_n": caching_n, "caching_m": caching_m, "seed": seed})


# ---------------------------------------------------------------------------
# drift


def drift_suite(n: int = 64, states: int = 1000, eps="1/10", caching_n: int = 100, caching_states: int = 100,
                seed: int = 0, threads: int = 1) -> dict:
    checks = []
    procs = (ProcessConfig.simple("Twinning"), ProcessConfig.simple("MeanThinning"),
             ProcessConfig.one_plus_eta(Fraction(1, 2)))
    for cfg in procs:
        sample = random_reachable_states(cfg, n, states, seed)
        ups = parallel_map(lambda st: verify_upsilon_drop(cfg, st), sample, threads)
        bad = next(({"state": i, "expected": r.expected, "bound": r.bound} for i, r in enumerate(ups)
                    if not r.satisfied), None)
        margin = min(Fraction(r.bound) - Fraction(r.expected) for r in ups)
        checks.append(_check(f"Upsilon drop on {cfg.label}", bad is None, states=states, worst_margin=margin,
                             witness=bad))

        lam = parallel_map(lambda st: verify_lambda_change(cfg, st, eps), sample, threads)
        bad = next(({"state": i, "log_expected": r.log_expected, "log_bound": r.log_bound}
                    for i, r in enumerate(lam) if not r.satisfied), None)
        margin = min(r.log_bound - r.log_expected for r in lam)
        in_band = [r.constants["c3"] for r in lam if r.regime == "in-band"]
        c3 = min(in_band) if in_band else None
        checks.append(_check(f"Lambda increase bound on {cfg.label}", bad is None, states=states,
                             alpha=lam[0].constants["alpha"], c4=lam[0].constants["c4"],
                             worst_log_margin=margin, witness=bad))
        checks.append(_check(f"Lambda drop constant c3 > 0 in band on {cfg.label}", c3 is None or c3 > 0,
                             in_band_states=len(in_band), min_c3=c3))

        vs = parallel_map(lambda st: verify_v_drop(cfg, st), sample, threads)
        c5 = [r.constants["c5"] for r in vs]
        checks.append(_check(f"V drop constant c5 > 0 on {cfg.label}", all(r.satisfied for r in vs),
                             states=states, alpha_tilde=vs[0].constants["alpha_tilde"], min_c5=min(c5)))

    pack = random_reachable_states(ProcessConfig.simple("Packing"), n, states, seed)
    phis = parallel_map(lambda st: verify_phi_bound(st), pack, threads)
    bad = next(({"state": i, "expected": r.expected, "bound": r.bound} for i, r in enumerate(phis)
                if not r.satisfied), None)
    ratio = max(r.log_expected - r.log_bound for r in phis)
    checks.append(_check("Phi bound on Packing", bad is None, states=states, worst_log_ratio=ratio, witness=bad))

    checks.append(caching2step_suite(caching_n, caching_states, seed, threads)["checks"][0])
    return _report("drift", checks, {"n": n, "states": states, "eps": str(eps), "caching_n": caching_n,
                                     "caching_states": caching_states, "seed": seed})


def caching2step_suite(n: int = 100, states: int = 100, seed: int = 0, threads: int = 1) -> dict:
    sample = random_reachable_states(ProcessConfig.simple("Caching"), n, states, seed)
    worst = parallel_map(worst_cache_two_step, sample, threads)
    bad = next(({"state": i, "cache": r.constants["cache"], "expected": r.expected, "bound": r.bound}
                for i, r in enumerate(worst) if not r.satisfied), None)
    margin = min(r.bound - r.expected for r in worst)
    check = _check("Caching two-step Psi bound, every cache position", bad is None, states=states, n=n,
                   worst_margin=margin, witness=bad)
    return _report("caching2step", [check], {"n": n, "states": states, "seed": seed})


# ---------------------------------------------------------------------------
# counterexamples


def counterexamples_suite(n: int = 10_000, alpha: float = 0.5) -> dict:
    b1, b2 = verify_counterexamples(n, alpha)
    checks = [
        _check("B1 Phi increase under Packing", b1.satisfied, **b1.constants),
        _check("B2 Lambda increase under MeanThinning", b2.satisfied, **b2.constants),
    ]
    delta = b2.constants["quantile"]
    checks.append(_check("B2 quantile is 1 - 2/n", delta == 1 - Fraction(2, n), quantile=delta))
    b1_sizes = [s * s for s in (2, 4, 8, 16, 32, 64, 100)]
    b2_sizes = [4, 8, 16, 32, 64, 128, 256, 512, 1024, 10_000]
    smallest = {}
    for kind, sizes in (("B1", b1_sizes), ("B2", b2_sizes)):
        found = None
        for size in sizes:
            pair = verify_counterexamples(size if kind == "B1" else 4, alpha, size if kind == "B2" else 4)
            if pair[0 if kind == "B1" else 1].satisfied:
                found = size
                break
        smallest[kind] = found
    checks.append(_check("smallest tested n where each counterexample holds", True, candidates_b1=b1_sizes,
                         candidates_b2=b2_sizes, smallest_b1=smallest["B1"], smallest_b2=smallest["B2"]))
    return _report("counterexamples", checks, {"n": n, "alpha": alpha})


# ---------------------------------------------------------------------------
# couplings


def couplings_suite(n: int = 50, m: int = 5000, f: int = 3, runs: int = 1000, dom_n: int = 100,
                    dom_m: int = 10_000, dom_reps: int = 1000, prefix_max_n: int = 128, seed: int = 0,
                    threads: int = 1) -> dict:
    checks = []
    traces = parallel_map(lambda r: coupled_thinning(n, m, f, seed, rep=r), range(runs), threads)
    violations = sum(t.violations for t in traces)
    disagreements = sum(t.case_disagreements for t in traces)
    checks.append(_check("pointwise domination under the coupling", violations == 0 and disagreements == 0,
                         runs=runs, violations=violations, case_disagreements=disagreements))

    same = 0
    for r in range(min(runs, 20)):
        t = coupled_thinning(n, m, 0, seed, rep=r, record=True)
        same += int(np.array_equal(t.traj_a, t.traj_b))
    checks.append(_check("f=0 trajectories identical", same == min(runs, 20), runs=min(runs, 20), identical=same))

    dom = gap_dominance(dom_n, dom_m, f, dom_reps, seed)
    checks.append(_check("Gap_f dominated by Gap_0 + f (3 SE slack)", dom.holds, n=dom_n, m=dom_m, reps=dom_reps,
                         worst_margin=dom.worst_margin, worst_gap=dom.worst_gap))

    bad = None
    for beta in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
        for size in range(2, prefix_max_n + 1):
            rep = beta_eta_prefix_check(size, beta)
            if not rep.holds:
                bad = rep.witness
                break
        if bad:
            break
    checks.append(_check("(1+eta) majorizes (1+beta) at every quantile", bad is None, max_n=prefix_max_n,
                         betas=["1/4", "1/2", "3/4", "1"], witness=bad))
    return _report("couplings", checks, {"n": n, "m": m, "f": f, "runs": runs, "dom_n": dom_n, "dom_m": dom_m,
                                         "dom_reps": dom_reps, "prefix_max_n": prefix_max_n, "seed": seed})


def run_suite(name: str, **knobs) -> dict:
    table = {"framework": framework_suite, "drift": drift_suite, "counterexamples": counterexamples_suite,
             "couplings": couplings_suite, "caching2step": caching2step_suite}
    if name not in table:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return table[name](**knobs)
