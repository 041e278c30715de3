import json
import math
from fractions import Fraction

import pytest

from ballsim.harness import ExperimentSpec, GapHistogram, run_suite, start_state
from ballsim.harness.cli import main
from ballsim.processes import ProcessConfig


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_spec_round_trip_and_validation():
    spec = ExperimentSpec("gapdist", ProcessConfig.simple("Caching"), 10, 100, "balls", 3, 7)
    again = ExperimentSpec.from_json(json.loads(json.dumps(spec.to_json())))
    assert again == spec
    with pytest.raises(ValueError):
        ExperimentSpec("gapdist", None, 10, 10, "balls", 0)
    with pytest.raises(ValueError):
        ExperimentSpec("gapdist", None, 10, 10, "steps", 1)


def test_histogram():
    h = GapHistogram.from_gaps([Fraction(2), Fraction(2), Fraction(3), Fraction(5, 2)], 10, 100, "X")
    assert h.repetitions == 4 and h.mean == Fraction(19, 8)
    assert h.fraction_within(2, 3) == 1 and h.fraction_within(3, 3) == Fraction(1, 4)
    assert "2 : 50%" in h.table()
    with pytest.raises(ValueError):
        GapHistogram({Fraction(1): 2}, 3, 10, 10, "X")


def test_start_states():
    assert start_state("empty", 4) is None
    s = start_state("half-split:3", 4)
    assert s.x.tolist() == [6, 6, 0, 0]
    assert start_state("half-split:log", 1000).x[0] == 2 * round(math.log(1000))
    assert start_state("b2", 4).x.tolist() == [26, 14, 0, 0]
    with pytest.raises(ValueError):
        start_state("half-split:2", 5)
    with pytest.raises(ValueError):
        start_state("sideways", 4)


def test_run_with_no_rounds_gives_one_row(capsys):
    code, out, _ = run_cli(capsys, "run", "--process", "MeanThinning", "--n", "8", "--rounds", "0")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# spec: ")
    assert len(lines) == 3 and float(lines[2].split(",")[2]) == 0


def test_run_trajectory_from_half_split(capsys):
    code, out, _ = run_cli(capsys, "run", "--n", "100", "--rounds", "20000", "--trace", "every:2000",
                           "--start", "half-split:log", "--format", "json")
    data = json.loads(out)
    rows = data["rows"]
    assert code == 0 and data["spec"]["start"] == "half-split:log"
    assert rows[0]["delta_norm"] == 1.0
    for key in ("delta", "upsilon"):
        assert Fraction(rows[-1][key]) < Fraction(rows[0][key])


def test_gapdist_json(capsys):
    code, out, _ = run_cli(capsys, "gapdist", "--process", "Caching", "--n", "50", "--balls", "5000",
                           "--reps", "8", "--format", "json", "--threads", "2")
    data = json.loads(out)
    assert code == 0 and data["spec"]["process"]["kind"] == "Caching"
    assert sum(data["histogram"]["counts"].values()) == 8


def test_usage_errors_exit_two(capsys):
    assert run_cli(capsys, "gapdist", "--process", "Nope", "--n", "10")[0] == 2
    assert run_cli(capsys, "run", "--n", "10,20")[0] == 2
    assert run_cli(capsys, "verify", "counterexamples", "--reps", "3")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["gapdist", "--balls", "1", "--rounds", "1"])
    assert exc.value.code == 2


def test_oracle_command(capsys):
    code, out, _ = run_cli(capsys, "oracle", "--process", "Twinning", "--n", "2", "--rounds", "1",
                           "--samples", "1000")
    data = json.loads(out)
    assert code == 0 and data["tv"] == 0
    code, out, _ = run_cli(capsys, "oracle", "--process", "OneChoice", "--n", "2", "--rounds", "2",
                           "--samples", "200", "--tv-max", "0.0000001")
    assert code == 1


def test_scaling_one_rep(capsys):
    code, out, _ = run_cli(capsys, "scaling", "--n", "20", "--reps", "1", "--m-factor", "10")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2 + 4


def test_lowerbound(capsys):
    code, out, _ = run_cli(capsys, "lowerbound", "--process", "MeanThinning", "--n", "100", "--reps", "10",
                           "--k", "10")
    data = json.loads(out)
    assert code == 0 and data["frequency"] == 0


def test_verify_counterexamples_suite(capsys):
    code, out, _ = run_cli(capsys, "verify", "counterexamples", "--n", "10000")
    data = json.loads(out)
    assert code == 0 and data["passed"] and data["spec"]["suite"] == "counterexamples"


def test_small_suites_pass():
    assert run_suite("framework", n=16, m=500, traces=3, caching_traces=5, caching_n=10, caching_m=300,
                     weight_traces=1)["passed"]
    assert run_suite("drift", n=16, states=10, caching_n=10, caching_states=5)["passed"]
    assert run_suite("couplings", n=10, m=300, runs=5, dom_n=10, dom_m=300, dom_reps=20, prefix_max_n=8)["passed"]


@pytest.mark.parametrize("argv", [
    ["gapdist", "--process", "Twinning", "--n", "40", "--balls", "4000", "--reps", "6", "--format", "csv"],
    ["scaling", "--n", "20,40", "--reps", "3", "--m-factor", "20"],
    ["verify", "couplings", "--n", "10", "--rounds", "200", "--reps", "4"],
])
def test_thread_count_does_not_change_output(tmp_path, argv):
    outs = []
    for threads in (1, 3):
        path = tmp_path / f"out{threads}"
        assert main(argv + ["--threads", str(threads), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
