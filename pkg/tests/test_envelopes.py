import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from schrokernel.envelopes import (FAMILIES, EnvelopeParams, RegimeLabel, green_envelope,
                                   large_time_exponent, make_family, neg_branch_crossover_radius,
                                   regime, survival_bound_pos, weight_neg, weight_pos,
                                   weight_zhang)
from schrokernel.freekernel import q, t0


def test_large_time_exponent():
    assert large_time_exponent(1.0) == pytest.approx(1 / 3)
    assert large_time_exponent(0.5) == pytest.approx(0.6)


def test_weight_pos_frozen():
    assert float(weight_pos(8.0, [0.0, 0.0], [0.0, 0.0], 1.0)) == pytest.approx(math.exp(-2.0))
    assert float(weight_pos(1.0, [3.0, 0.0], [0.0, 0.0], 1.0)) == pytest.approx(math.exp(-0.25))


@pytest.mark.parametrize("alpha,s", [(0.5, 0.0), (1.0, 8.0), (1.5, 30.0)])
def test_weight_pos_branches_cross_at_t0(alpha, s):
    tt = float(t0(s, alpha))
    a = tt / (1 + s) ** alpha
    b = tt ** large_time_exponent(alpha)
    assert a == pytest.approx(b, rel=1e-12)


def test_weight_neg_and_crossover():
    assert float(weight_neg(2.0, [0.0], [0.0], 1.0)) == pytest.approx(math.exp(2.0))
    m = neg_branch_crossover_radius(10.0, 1.0)
    lhs = 10.0 / (1 + m)
    rhs = 10.0 - (1 + m) ** 2 / 10.0
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_green_envelope_d3_and_d2_log():
    x, y = np.array([0.0, 0, 0]), np.array([2.0, 0, 0])
    assert float(green_envelope(x, y, 1.0, 3)) == pytest.approx(0.5 * math.exp(-2 / math.sqrt(3)))
    g2 = float(green_envelope([0.0, 0.0], [0.1, 0.0], 1.0, 2, c=0.0))
    assert g2 == pytest.approx(1 + math.log(math.sqrt(1.1) / 0.1))
    with pytest.raises(ValueError):
        green_envelope(x, x, 1.0, 3)


def test_regime_labels():
    assert regime(100.0, [8.0, 0], [8.0, 0], 1.0) is RegimeLabel.LARGE_TIME_GLOBAL
    assert regime(2.0, [8.0, 0], [8.0, 0], 1.0) is RegimeLabel.DIAGONAL_LOCAL
    assert regime(2.0, [8.0, 0], [0.0, 8.0], 1.0) is RegimeLabel.OFFDIAG_GAUSSIAN
    assert regime(2.0, [0.0, 0], [0.0, 0], 1.0, "negative") is RegimeLabel.GROWTH_LOCAL
    assert regime(20.0, [10.0, 0], [10.0, 0], 1.0, "negative") is RegimeLabel.GROWTH_SPATIAL


def test_params_validation_and_dict():
    p = EnvelopeParams(0.5, (1.0, 2.0), 3.0, 4.0)
    assert p.to_dict()["arg_lower"] == [1.0, 2.0]
    with pytest.raises(ValueError):
        EnvelopeParams(0.5, (1.0, -2.0), 3.0, 4.0)


def test_make_family_names():
    for name in FAMILIES:
        fam = make_family(name, 1.0, 3)
        assert fam.family == name.replace("dirichlet_ball", "dirichlet_ball")
    with pytest.raises(ValueError):
        make_family("nope")


def test_long_range_check():
    with pytest.raises(ValueError):
        weight_pos(1.0, [0.0], [0.0], 2.5)


@given(t=st.floats(0.01, 1e4), a=st.floats(0, 50), b=st.floats(0, 50),
       alpha=st.floats(0.05, 1.95))
def test_weight_pos_unit_interval_and_monotone(t, a, b, alpha):
    w = float(weight_pos(t, [a], [b], alpha))
    assert 0.0 <= w <= 1.0
    assert float(weight_pos(2 * t, [a], [b], alpha)) <= w


@given(t=st.floats(0.01, 50), a=st.floats(0, 20), alpha=st.floats(0.05, 1.95))
def test_weight_neg_at_least_one(t, a, alpha):
    assert float(weight_neg(t, [a], [a], alpha)) >= 1.0


@given(t=st.floats(0.05, 100), a=st.floats(0, 20), alpha=st.floats(0.05, 1.95))
def test_earlier_weights_order(t, a, alpha):
    # the earlier lower weight never exceeds the earlier upper weight
    lo = float(weight_zhang(t, [a], [a], alpha, "lower"))
    hi = float(weight_zhang(t, [a], [a], alpha, "upper"))
    assert lo <= hi * (1 + 1e-12) or t / (1 + a) ** alpha < 1


@given(t=st.floats(0.05, 100), a=st.floats(0, 20), b=st.floats(0, 20),
       c=st.floats(0.2, 5.0), name=st.sampled_from(FAMILIES))
def test_family_log_matches_value(t, a, b, c, name):
    fam = make_family(name, 1.0, 2)
    if name == "green" and a == b:
        b = a + 1.0
    arg = (c, c) if getattr(fam, "n_args", 1) == 2 else c
    x, y = np.array([a, 0.0]), np.array([b, 0.5])
    v = float(fam(t, x, y, arg))
    lv = float(fam.log(t, x, y, arg))
    if v > 1e-300:
        assert math.log(v) == pytest.approx(lv, rel=1e-12, abs=1e-12)


@given(t=st.floats(0.1, 100), a=st.floats(0, 20), alpha=st.floats(0.1, 1.9))
def test_survival_bound_pos_positive(t, a, alpha):
    assert float(survival_bound_pos(t, [a], alpha)) > 0
