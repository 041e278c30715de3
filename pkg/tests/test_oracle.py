import math
from fractions import Fraction

import numpy as np
import pytest

from ballsim.oracle import (caching_two_step_expectation, counterexample_config, exact_gap_distribution,
                            monte_carlo_gap_distribution, one_step_expectation, random_reachable_states,
                            smallest_holding_n, total_variation, verify_counterexamples, verify_lambda_change,
                            verify_phi_bound, verify_upsilon_drop, verify_v_drop, worst_cache_two_step)
from ballsim.processes import ProcessConfig, ProcessState
from ballsim.state import LoadState, new_state, scaled_loads

TW = ProcessConfig.simple("Twinning")
MT = ProcessConfig.simple("MeanThinning")
PK = ProcessConfig.simple("Packing")
ETA = ProcessConfig.one_plus_eta(Fraction(1, 2))


def PS(*loads, cache=None):
    return ProcessState(LoadState.from_loads(loads), cache)


def test_twinning_upsilon_example():
    res = one_step_expectation(TW, PS(1, 0), "upsilon")
    assert res.exact and res.current == Fraction(1, 2) and res.expected == Fraction(5, 4)
    drop = verify_upsilon_drop(TW, PS(1, 0))
    # Bound: 1/2 - (1/2*2 - 1/2*1)*1 + 4*2^2 = 16.
    assert drop.satisfied and drop.bound == 16 and drop.expected == Fraction(5, 4)


@pytest.mark.parametrize("cfg", [ProcessConfig.one_choice(), TW, PK, MT], ids=lambda c: c.label)
def test_empty_state_delta(cfg):
    n = 5
    res = one_step_expectation(cfg, ProcessState.empty(n), "delta")
    # Every bin sits at y=0 (overloaded), so each process places a single ball.
    assert res.expected == 2 * (1 - Fraction(1, n))


def test_constant_one_functional():
    for cfg in (TW, MT, PK, ETA, ProcessConfig.two_choice(), ProcessConfig.thinning(2)):
        for st in random_reachable_states(cfg, 8, 5, 3):
            assert one_step_expectation(cfg, st, "one").expected == 1


def test_meanthinning_all_overloaded_is_one_choice():
    st = PS(2, 2, 2)
    a = one_step_expectation(MT, st, "upsilon").expected
    b = one_step_expectation(ProcessConfig.one_choice(), st, "upsilon").expected
    assert a == b


def test_unknown_potential():
    with pytest.raises(ValueError):
        one_step_expectation(TW, PS(1, 0), "kappa")


def test_upsilon_drop_empty_and_random():
    assert verify_upsilon_drop(MT, ProcessState.empty(4)).satisfied
    for cfg in (TW, MT):
        for st in random_reachable_states(cfg, 64, 100, 11):
            assert verify_upsilon_drop(cfg, st).satisfied


def test_phi_bound_examples():
    res = verify_phi_bound(new_state(4), alpha=0.01)
    assert res.satisfied and res.expected == 0 and res.bound == pytest.approx(math.exp(0.03))
    assert verify_phi_bound(LoadState.from_loads([5, 3, 2, 2]), alpha=0.01).satisfied
    for st in random_reachable_states(PK, 64, 100, 5):
        assert verify_phi_bound(st.load, alpha=0.01).satisfied


def test_lambda_change():
    for st in random_reachable_states(MT, 64, 100, 2):
        res = verify_lambda_change(MT, st, "1/10")
        assert res.satisfied and res.constants["alpha_ok"]
        if res.regime == "in-band":
            assert res.constants["c3"] > 0
    assert verify_lambda_change(MT, PS(3, 3, 3), "1/10").regime == "out-of-band"


def test_v_drop():
    assert verify_v_drop(MT, ProcessState.empty(6)).satisfied
    for cfg in (TW, MT):
        for st in random_reachable_states(cfg, 64, 50, 8):
            assert verify_v_drop(cfg, st).satisfied


def test_caching_two_step():
    empty = new_state(5)
    for cache in (None, 0, 3):
        res = caching_two_step_expectation(empty, cache)
        assert res.current == 0 and res.expected == 0 and res.bound == 6 and res.satisfied
    # Heaviest bin held in the cache.
    st = LoadState.from_loads([40, 3, 2, 1, 0, 0])
    assert caching_two_step_expectation(st, 0).satisfied
    assert worst_cache_two_step(st).satisfied
    with pytest.raises(ValueError):
        caching_two_step_expectation(new_state(513), None)
    with pytest.raises(ValueError):
        caching_two_step_expectation(empty, 5)


def test_counterexample_configs():
    b1 = counterexample_config("B1", 4)
    assert b1.x.tolist() == [4, 2, 1, 1] and b1.W == 8
    assert (scaled_loads(b1).z // 4).tolist() == [2, 0, -1, -1]
    b2 = counterexample_config("B2", 4)
    assert b2.x.tolist() == [26, 14, 0, 0] and b2.W == 40
    with pytest.raises(ValueError):
        counterexample_config("B1", 5)
    with pytest.raises(ValueError):
        counterexample_config("B2", 5)


def test_counterexamples_at_ten_thousand():
    b1, b2 = verify_counterexamples(10_000, 0.5)
    assert b1.satisfied and b2.satisfied
    assert b2.constants["quantile"] == 1 - Fraction(2, 10_000)


def test_smallest_holding_n():
    assert smallest_holding_n("B2", 0.5, [4, 8, 16, 32]) is not None


def test_exact_dp_examples():
    d = exact_gap_distribution(ProcessConfig.one_choice(), 2, 2).dist
    assert d == {Fraction(0): Fraction(1, 2), Fraction(1): Fraction(1, 2)}
    assert exact_gap_distribution(TW, 2, 1).dist == {Fraction(1, 2): Fraction(1)}
    d = exact_gap_distribution(ProcessConfig.two_choice(), 2, 2).dist
    assert d == {Fraction(0): Fraction(3, 4), Fraction(1): Fraction(1, 4)}
    with pytest.raises(ValueError):
        exact_gap_distribution(TW, 5, 2)
    with pytest.raises(ValueError):
        exact_gap_distribution(TW, 3, 13)


def test_dp_matches_monte_carlo_small():
    for cfg in (ProcessConfig.simple("Caching"), ProcessConfig.thinning(1), ProcessConfig.simple("OverPacking")):
        exact = exact_gap_distribution(cfg, 3, 4).dist
        mc = monte_carlo_gap_distribution(cfg, 3, 4, 50_000, 1)
        assert total_variation(exact, mc) < 0.02


def test_total_variation():
    assert total_variation({0: Fraction(1)}, {1: Fraction(1)}) == 1
    assert total_variation({0: Fraction(1, 2), 1: Fraction(1, 2)}, {0: Fraction(1, 2), 1: Fraction(1, 2)}) == 0


def test_reachable_states_are_seeded():
    a = random_reachable_states(MT, 10, 4, 1)
    b = random_reachable_states(MT, 10, 4, 1)
    assert [s.load for s in a] == [s.load for s in b]
    assert all(int(np.asarray(s.load.x).sum()) == s.load.W for s in a)
