import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballsim.state import (LoadState, ceil_neg_y, gap, new_state, potentials, quantile, scaled_loads,
                           sorted_order, spread)


def S(*loads):
    return LoadState.from_loads(loads)


def test_new_state():
    s = new_state(4)
    assert s.x.tolist() == [0, 0, 0, 0] and s.W == 0
    assert new_state(2).x.tolist() == [0, 0]
    with pytest.raises(ValueError):
        new_state(1)


def test_validation():
    with pytest.raises(ValueError):
        LoadState(np.array([1, 2]), 4)
    with pytest.raises(ValueError):
        S(-1, 1)
    with pytest.raises(OverflowError):
        S(2 ** 61, 2 ** 61)
    s = S(1, 2)
    with pytest.raises(ValueError):
        s.x[0] = 5  # read-only


def test_scaled_loads_examples():
    assert scaled_loads(S(5, 3, 2, 2)).z.tolist() == [8, 0, -4, -4]
    assert scaled_loads(S(0, 0)).z.tolist() == [0, 0]
    assert scaled_loads(S(1, 0)).z.tolist() == [1, -1]


def test_gap_and_quantile_examples():
    assert gap(S(5, 3, 2, 2)) == 2
    assert gap(S(1, 0)) == Fraction(1, 2)
    assert gap(new_state(4)) == 0
    assert quantile(new_state(4)) == 1
    assert quantile(S(5, 3, 2, 2)) == Fraction(1, 2)
    assert quantile(S(1, 0)) == Fraction(1, 2)
    assert spread(S(5, 3, 2, 2)) == 3


def test_potential_examples():
    r = potentials(new_state(5), alpha=0.3)
    assert (r.delta, r.upsilon, r.phi, r.psi, r.gap, r.quantile) == (0, 0, 0, 0, 0, 1)
    assert r.lam == pytest.approx(5) and r.v == pytest.approx(5)

    r = potentials(S(1, 0), alpha=1)
    assert r.delta == 1 and r.upsilon == Fraction(1, 2) and r.phi == 0
    assert r.lam == pytest.approx(2 * math.exp(0.5))

    r = potentials(S(5, 3, 2, 2), alpha=1, phi_alpha=1)
    assert r.phi == pytest.approx(math.exp(2)) and r.delta == 4 and r.upsilon == 6


def test_potentials_reject_bad_alpha():
    with pytest.raises(ValueError):
        potentials(new_state(3), alpha=0)
    with pytest.raises(ValueError):
        potentials(new_state(3), alpha=1, alpha_tilde=-1)


def test_ceil_neg_y_and_sorted_order():
    # x=2 in a W=12, n=4 state: y=-1, so ceil(-y)=1
    assert ceil_neg_y(-4, 4) == 1
    assert ceil_neg_y(-5, 4) == 2
    assert sorted_order(np.array([1, 3, 3, 0])).tolist() == [1, 2, 0, 3]


loads = st.lists(st.integers(0, 50), min_size=2, max_size=40)


@settings(max_examples=200, deadline=None)
@given(loads)
def test_state_identities(xs):
    s = LoadState.from_loads(xs)
    n = s.n
    z = scaled_loads(s).z
    assert int(z.sum()) == 0
    assert int(z[z >= 0].sum()) == -int(z[z < 0].sum())
    r = potentials(s, alpha=0.5, alpha_tilde=0.5)
    assert Fraction(int(z[z >= 0].sum()), n) * 2 == r.delta
    assert Fraction(1, n) <= r.quantile <= 1
    assert r.lam >= n * (1 - 1e-12) and r.v >= n * (1 - 1e-12)
    assert r.lam == pytest.approx(r.v)
    assert r.gap * n >= int(z.max()) and r.gap >= 0
    assert (r.gap == 0) == (len(set(xs)) == 1)
