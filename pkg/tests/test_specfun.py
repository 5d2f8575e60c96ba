import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from singpot import specfun


def test_value_at_zero():
    assert specfun.bessel_i0_scaled(0.0) == 1.0
    assert specfun.evaluate_i0_scaled(0.0).method == specfun.SERIES


def test_matches_reference_over_wide_range():
    x = np.concatenate([np.linspace(0, 40, 4001), np.logspace(1, 8, 500)])
    ours = specfun.i0_scaled(x)
    ref = special.i0e(x)
    assert np.max(np.abs(ours / ref - 1.0)) <= 1e-13


def test_branch_selection():
    assert specfun.evaluate_i0_scaled(specfun.CROSSOVER).method == specfun.SERIES
    assert specfun.evaluate_i0_scaled(np.nextafter(specfun.CROSSOVER, 50)).method == specfun.ASYMPTOTIC


def test_branches_agree_across_crossover_band():
    band = np.linspace(specfun.CROSSOVER - 4, specfun.CROSSOVER + 4, 16)
    s = specfun.i0_scaled_series(band)
    a = specfun.i0_scaled_asymptotic(band)
    assert np.max(np.abs(s / a - 1.0)) <= 1e-10


def test_monotone_decreasing_in_unit_interval():
    x = np.concatenate([[0.0], np.logspace(-8, 8, 5000)])
    v = specfun.i0_scaled(x)
    assert np.all(v > 0) and np.all(v <= 1)
    assert np.all(np.diff(v) < 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1e6), st.floats(1e-6, 1e3))
def test_monotone_pairs(x, dx):
    assert specfun.bessel_i0_scaled(x + dx) < specfun.bessel_i0_scaled(x)


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_rejects_bad_arguments(bad):
    with pytest.raises(ValueError):
        specfun.bessel_i0_scaled(bad)


def test_ratio_limits():
    assert specfun.ratio_half(1e6) == pytest.approx(1 / math.sqrt(2), abs=1e-4)
    assert specfun.ratio_quarter(1e6) == pytest.approx(math.sqrt(2), abs=1e-4)
    assert specfun.ratio_half(0.0) == 1.0 and specfun.ratio_quarter(0.0) == 1.0


def test_prefactors():
    assert specfun.GRAD_LOWER_PREFACTOR == pytest.approx(math.sqrt(3) / (9 * math.sqrt(2 * math.pi) * math.e))
    assert specfun.GRAD_UPPER_PREFACTOR == pytest.approx(math.sqrt(6 * math.pi) * math.e)
    assert specfun.GRAD_UPPER_PREFACTOR == pytest.approx(11.80171, abs=1e-5)


@pytest.fixture(scope="module")
def constants():
    return specfun.compute_constants()


def test_extrema_are_attained_at_finite_argument(constants):
    # the ratios overshoot their limits before settling
    assert constants.inf_attained and constants.sup_attained
    assert not constants.inf_scan_monotone and not constants.sup_scan_monotone
    assert constants.inf_ratio < specfun.LIMIT_HALF
    assert constants.sup_ratio > specfun.LIMIT_QUARTER
    assert constants.inf_ratio == pytest.approx(0.6589036987, abs=1e-9)
    assert constants.sup_ratio == pytest.approx(1.5176724640, abs=1e-9)


def test_extremum_locations_are_stationary(constants):
    h = 1e-4
    for func, x0 in ((specfun.ratio_half, constants.inf_at), (specfun.ratio_quarter, constants.sup_at)):
        slope = (func(x0 + h) - func(x0 - h)) / (2 * h)
        assert abs(slope) <= 1e-6


def test_constant_invariants(constants):
    assert constants.c_grad_lower > 0
    assert constants.c_grad_upper >= math.sqrt(6 * math.pi) * math.e
    assert 0 < constants.inf_ratio <= 1 and constants.sup_ratio >= 1
    assert constants.c_grad_lower == pytest.approx(0.0186104, abs=1e-7)
    assert constants.c_grad_upper == pytest.approx(17.91113, abs=1e-5)


def test_ratios_stay_in_measured_bands(constants):
    x = np.concatenate([[0.0], np.logspace(-6, 6, 4000)])
    half = specfun.ratio_half(x)
    quarter = specfun.ratio_quarter(x)
    assert np.all(half >= constants.inf_ratio - 1e-12) and np.all(half <= 1.0)
    assert np.all(quarter >= 1.0) and np.all(quarter <= constants.sup_ratio + 1e-12)


def test_scan_resolution_does_not_move_constants(constants):
    coarse = specfun.compute_constants(n_scan=512)
    assert coarse.c_grad_lower == pytest.approx(constants.c_grad_lower, rel=1e-10)
    assert coarse.c_grad_upper == pytest.approx(constants.c_grad_upper, rel=1e-10)
