import math

import pytest

from pinnacle_lab.errors import ConfigError
from pinnacle_lab.lattice import INFINITY, ModelParams
from pinnacle_lab.predict import (TailEstimate, analytic_tail,
                                  analytic_tail_estimate, asymptote_H,
                                  asymptote_M, asymptote_M_star, predict_H,
                                  predict_M, predict_M_star, rate_exponent,
                                  ratio_scan)


def test_rate_p1_table_row():
    # -log pi(eta_0 >= h) = 4 beta h, correction dropped
    assert rate_exponent(ModelParams(p=1, beta=1), 3) == pytest.approx(12.0)
    assert analytic_tail(ModelParams(p=1, beta=1), 3) == pytest.approx(
        math.exp(-12.0))


def test_rate_p2_leading_term():
    rate = rate_exponent(ModelParams(p=2, beta=1), 10)
    assert rate == pytest.approx(200 * math.pi / math.log(10), rel=1e-14)
    assert rate == pytest.approx(272.9, abs=0.1)
    with pytest.raises(ConfigError):
        rate_exponent(ModelParams(p=2, beta=1), 1)


def test_rate_rsos_row():
    rate = rate_exponent(ModelParams(p=INFINITY, beta=2), 2)
    assert rate == pytest.approx(4 * (2 + 2 * math.log(27 / 16)) * 4, rel=1e-14)
    assert rate == pytest.approx(48.74, abs=0.01)


def test_rate_intermediate_exponents_need_constants():
    with pytest.raises(ConfigError):
        rate_exponent(ModelParams(p=1.5, beta=1), 2)
    assert rate_exponent(ModelParams(p=1.5, beta=2), 3, c_p=1.25) == \
        pytest.approx(1.25 * 2 * 3 ** 1.5)
    with pytest.raises(ConfigError):
        rate_exponent(ModelParams(p=3, beta=1), 2)
    assert rate_exponent(ModelParams(p=3, beta=1), 2, c_bracket=0.5) == \
        pytest.approx(2.0)


def test_tail_is_one_below_support():
    assert analytic_tail(ModelParams(p=2, beta=1), 0) == 1.0
    assert analytic_tail(ModelParams(p=1, beta=1), -5) == 1.0


def test_analytic_table_is_non_increasing():
    for p in (1.0, 2.0, INFINITY):
        tail = analytic_tail_estimate(ModelParams(p=p, beta=1.0), h_max=20)
        values = [tail(h) for h in range(-2, 21)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert all(0.0 <= v <= 1.0 for v in values)


def hand_tail(table, h_min=1):
    return TailEstimate(backend="empirical", params=ModelParams(p=1, beta=1),
                        table=table, h_min=h_min, n_samples=100)


def test_predict_M_saturated_table_warns():
    tail = hand_tail({1: 1.0, 2: 1.0, 3: 1.0})
    pred = predict_M(100.0, tail)
    assert pred.value == 3
    assert any("not crossed" in w for w in pred.warnings)


def test_threshold_is_inclusive():
    # tail(2) sits exactly on the threshold: >= keeps it
    L = 100.0
    neg_log = 2 * math.log(L) - 5 * math.log(math.log(L))
    tail = TailEstimate(backend="empirical", params=ModelParams(p=1, beta=1),
                        table={1: 0.9, 2: math.exp(-neg_log), 3: 1e-9},
                        log_table={1: -math.log(0.9), 2: neg_log,
                                   3: 9 * math.log(10)},
                        h_min=1, n_samples=100)
    assert predict_M(L, tail).value == 2


def test_predict_H_degenerate_threshold():
    tail = hand_tail({1: 0.5})
    pred = predict_H(3.0, 2.0, tail)       # 5 beta / L > 1
    assert pred.value == 0
    assert any("degenerate" in w for w in pred.warnings)


def test_predict_H_p1_comparison_value():
    tail = analytic_tail_estimate(ModelParams(p=1, beta=1.0), h_max=30)
    pred = predict_H(1e6, 1.0, tail)
    # tail(h) >= 5/L  <=>  4h <= log(L/5) = 12.2: H = 3
    assert pred.value == 3
    assert pred.asymptote == math.ceil(math.log(1e6) / 4.0)


def test_predictors_monotone_in_L():
    tail = analytic_tail_estimate(ModelParams(p=1, beta=1.0), h_max=64)
    Ms = [predict_M(L, tail).value for L in (10 ** k for k in range(2, 10))]
    Hs = [predict_H(L, 1.0, tail).value for L in (10 ** k for k in range(2, 10))]
    assert Ms == sorted(Ms)
    assert Hs == sorted(Hs)


def test_m_star_composition_and_window():
    tail = analytic_tail_estimate(ModelParams(p=2, beta=1.0), h_max=64)
    star = predict_M_star(1e12, 1.0, tail)
    assert star.value == star.M.value + star.H.value
    assert star.window == (star.value, star.value + 1, star.value + 2)
    with pytest.raises(ConfigError):
        predict_M_star(1e12, 1.0, analytic_tail_estimate(ModelParams(p=1, beta=1)))


def test_m_star_beta_scaling():
    # closed form scales as beta^(-1/2): factor 2 between beta and 4 beta
    for L in (1e4, 1e8):
        assert asymptote_M_star(L, 1.0) / asymptote_M_star(L, 4.0) == \
            pytest.approx(2.0, abs=1e-9)


def test_ratio_scan_closed_forms():
    rows = ratio_scan(1.0)
    for row in rows:
        assert row["H_over_M"] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        # coefficient ratio of the floored-maximum and maximum laws
        assert row["M_star_over_M"] == pytest.approx(1 + 1 / math.sqrt(2),
                                                     abs=1e-12)


def test_integer_scan_approaches_its_asymptote_slowly():
    """The integer M(L) trails sqrt(log L loglog L / 2 pi beta) from below
    and closes in only at astronomical L (the leading-order surrogate has no
    finite-L sharpness; at L = 1e12 the gap is still ~50%)."""
    tail = analytic_tail_estimate(ModelParams(p=2, beta=1.0), h_max=200)
    ratios = []
    for L in (1e12, 1e50, 1e120, 1e260):
        pred = predict_M(L, tail)
        ratios.append(pred.value / asymptote_M(L, 1.0))
    assert ratios == sorted(ratios)
    assert ratios[0] == pytest.approx(0.52, abs=0.02)
    assert abs(ratios[-1] - 1.0) <= 0.15


def test_asymptote_relations():
    for L in (1e5, 1e10):
        assert asymptote_H(L, 1.0) == pytest.approx(
            asymptote_M(L, 1.0) / math.sqrt(2), rel=1e-12)
        assert asymptote_M_star(L, 1.0) == pytest.approx(
            asymptote_M(L, 1.0) + asymptote_H(L, 1.0), rel=1e-12)
