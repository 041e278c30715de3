from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballsim.processes import (Kind, ProcessConfig, ProcessState, parse_process, placements_for, record_trace,
                               run_balls, simulate, step)
from ballsim.rng import RandomStream
from ballsim.state import LoadState, gap, potentials, scaled_loads


class Scripted:
    """Stand-in stream returning preset samples and coin flips."""

    def __init__(self, samples, coins=()):
        self.samples = list(samples)
        self.coins = list(coins)

    def below(self, bound):
        v = self.samples.pop(0)
        assert 0 <= v < bound
        return v

    def bernoulli(self, num, den):
        return self.coins.pop(0)


def PS(*loads, cache=None, t=0):
    return ProcessState(LoadState.from_loads(loads), cache, t)


ALL = [ProcessConfig.one_choice(), ProcessConfig.two_choice(), ProcessConfig.d_choice(3),
       ProcessConfig.one_plus_beta(Fraction(1, 2)), ProcessConfig.simple("Caching"), ProcessConfig.simple("Packing"),
       ProcessConfig.simple("OverPacking"), ProcessConfig.simple("Twinning"), ProcessConfig.thinning(2),
       ProcessConfig.simple("MeanThinning"), ProcessConfig.one_plus_eta(Fraction(1, 2))]


def test_config_validation_and_parsing():
    with pytest.raises(ValueError):
        ProcessConfig(Kind.DChoice)
    with pytest.raises(ValueError):
        ProcessConfig(Kind.OnePlusBeta, beta=Fraction(3, 2))
    with pytest.raises(ValueError):
        ProcessConfig(Kind.Packing, d=2)
    assert parse_process("TwoChoice") == ProcessConfig.two_choice()
    assert parse_process("Thinning(f=3)") == ProcessConfig.thinning(3)
    assert parse_process("OnePlusBeta", beta="1/2").beta == Fraction(1, 2)
    for cfg in ALL:
        assert ProcessConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        parse_process("Quantile")


def test_packing_example():
    new, ev = step(ProcessConfig.simple("Packing"), PS(5, 3, 2, 2), Scripted([2]))
    assert new.load.x.tolist() == [5, 3, 4, 2] and ev.weight == 2 and ev.placements == ((2, 2),)


def test_filling_round_of_six():
    # y_i = -4.x, so ceil(-y_i) + 1 = 6 balls
    x = [9] * 9 + [0]
    assert sum(c for _, c in placements_for(ProcessConfig.simple("Packing"), np.array(x), 81, 9)) == 10
    x = [5] * 9 + [0]  # W=45, y = -4.5
    for name in ("Packing", "OverPacking"):
        pl = placements_for(ProcessConfig.simple(name), np.array(x), 45, 9)
        assert sum(c for _, c in pl) == 6


def test_twinning_example():
    new, ev = step(ProcessConfig.simple("Twinning"), PS(1, 0), Scripted([1]))
    assert new.load.x.tolist() == [1, 2] and new.load.W == 3 and ev.weight == 2


def test_caching_examples():
    cfg = ProcessConfig.simple("Caching")
    new, ev = step(cfg, PS(0, 3, 1, cache=0), Scripted([1]))
    assert new.load.x.tolist() == [1, 3, 1] and new.cache == 0 and ev.chosen == 0
    new, _ = step(cfg, PS(2, 1, 3, cache=0), Scripted([1]))
    assert new.load.x.tolist() == [2, 2, 3] and new.cache == 1
    new, _ = step(cfg, PS(1, 1, 3, cache=0), Scripted([1]))  # equal loads: ball to the sample, cache kept
    assert new.load.x.tolist() == [1, 2, 3] and new.cache == 0
    new, _ = step(cfg, PS(0, 0, 0), Scripted([2]))
    assert new.cache == 2


def test_dchoice_tie_breaks_to_lowest_index():
    new, ev = step(ProcessConfig.two_choice(), PS(1, 0, 0), Scripted([2, 1]))
    assert ev.chosen == 1 and new.load.x.tolist() == [1, 1, 0]


def test_thinning_threshold_uses_round():
    cfg = ProcessConfig.thinning(1)
    # t=4, n=2: threshold t/n + f = 3; x_i1 = 2 < 3 so the first sample wins
    _, ev = step(cfg, PS(2, 2, t=4), Scripted([0, 1]))
    assert ev.chosen == 0
    _, ev = step(cfg, PS(3, 1, t=4), Scripted([0, 1]))
    assert ev.chosen == 1


def test_one_plus_beta_branches():
    cfg = ProcessConfig.one_plus_beta(Fraction(1, 2))
    _, ev = step(cfg, PS(3, 0), Scripted([0, 1], coins=[True]))
    assert ev.chosen == 1
    _, ev = step(cfg, PS(3, 0), Scripted([0], coins=[False]))
    assert ev.chosen == 0


def test_simulate_examples():
    for seed in range(5):
        st_, _ = simulate(ProcessConfig.simple("Twinning"), 2, 1, seed)
        assert gap(st_.load) == Fraction(1, 2)
        st_, _ = simulate(ProcessConfig.one_choice(), 2, 2, seed)
        assert gap(st_.load) in (0, 1)


def test_reproducible_and_meanthinning_is_thinning_zero():
    a, ta = simulate(ProcessConfig.simple("MeanThinning"), 20, 500, 7, "every:50")
    b, tb = simulate(ProcessConfig.thinning(0), 20, 500, 7, "every:50")
    assert a.load == b.load
    assert [p.report for p in ta] == [p.report for p in tb]
    c, _ = simulate(ProcessConfig.simple("MeanThinning"), 20, 500, 8)
    assert c.load != a.load


@pytest.mark.parametrize("cfg", ALL, ids=lambda c: c.label)
def test_compiled_driver_matches_reference_step(cfg):
    n, rounds, seed = 7, 400, 11
    stream = RandomStream(seed, 3)
    state = ProcessState.empty(n)
    for _ in range(rounds):
        state, _ = step(cfg, state, stream)
    fast, _ = simulate(cfg, n, rounds, seed, rep=3)
    assert fast.load == state.load and fast.cache == state.cache and fast.round == rounds


@pytest.mark.parametrize("cfg", ALL, ids=lambda c: c.label)
def test_trace_invariants(cfg):
    tr = record_trace(cfg, 9, 600, 5)
    weights = tr.round_weight()
    assert (weights >= 1).all()
    if cfg.single_ball:
        assert (weights == 1).all()
    for r, ev in enumerate(tr.events()):
        pre = tr.pre_state(r)
        z = scaled_loads(pre.load).z
        if cfg.kind is Kind.Twinning:
            assert ev.weight == (2 if z[ev.chosen] < 0 else 1)
        if cfg.kind is Kind.Packing and z[ev.chosen] < 0:
            assert ev.placements == ((ev.chosen, -(-pre.load.W // 9) + 1 - int(pre.load.x[ev.chosen])),)
        if cfg.kind is Kind.OverPacking and z[ev.chosen] < 0:
            post = pre.load.x.copy()
            for b, c in ev.placements:
                post[b] += c
            W = pre.load.W
            touched = [b for b, _ in ev.placements]
            lifted = [b for b in touched if 9 * post[b] >= W]
            assert len(lifted) == 1
            assert all(9 * post[b] < W for b in touched if b != lifted[0])
            if 9 * post[lifted[0]] >= W + 9:
                # Leftover ball: every other underloaded bin was already full to ceil(W/n) - 1.
                top = -(-W // 9)
                assert post[lifted[0]] == top + 1
                assert all(post[b] == top - 1 for b in range(9) if 9 * pre.load.x[b] < W and b != lifted[0])
    final = tr.final.load
    assert final.W == int(tr.weights[-1] + weights[-1])
    assert int(final.x.sum()) == final.W


def test_overpacking_lifts_heaviest_underloaded_bin():
    cfg = ProcessConfig.simple("OverPacking")
    # n=4, W=10, average 5/2; underloaded bins hold 2, 1, 0 (y = -1/2, -3/2, -5/2)
    x = np.array([7, 2, 1, 0])
    pl = dict(placements_for(cfg, x, 10, 3))
    assert sum(pl.values()) == 4
    assert pl[1] >= 1 and 4 * (2 + pl[1]) >= 10


def test_run_balls_stops_at_first_round_reaching_m():
    s = run_balls(ProcessConfig.simple("Packing"), 10, 1000, 3)
    assert s.W >= 1000 and s.W < 1000 + 12


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(ALL), st.integers(2, 12), st.integers(0, 300), st.integers(0, 2 ** 32))
def test_weight_accounting_property(cfg, n, rounds, seed):
    s, traj = simulate(cfg, n, rounds, seed, "every:37")
    assert int(s.load.x.sum()) == s.load.W
    assert int(scaled_loads(s.load).z.sum()) == 0
    for p in traj:
        assert Fraction(1, n) <= p.report.quantile <= 1
    assert traj[-1].report == potentials(s.load, alpha=0.7, phi_alpha=0.01)


def test_rng_bounded_draws_are_uniformish():
    s = RandomStream(1, 0, block=64)
    counts = np.bincount([s.below(3) for _ in range(30000)], minlength=3)
    assert (abs(counts - 10000) < 400).all()
    with pytest.raises(ValueError):
        s.below(0)
