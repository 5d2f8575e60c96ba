import math

import numpy as np
import pytest

from singpot import bounds, potential
from singpot.bounds import BoundReport, OutOfRegime
from singpot.dualsolver import NonPhysicalInput
from singpot.moments import NuCoords

THIRD = 1.0 / 3.0


def test_constants():
    assert bounds.C_F_LOWER == pytest.approx(-25.5114, abs=1e-4)
    c = bounds.TheoremConstants.compute()
    assert c.c_f_lower == bounds.C_F_LOWER
    assert 0.0 < c.c_grad_lower < c.c_grad_upper


def test_upper_bound_formula():
    assert bounds.thm11_upper(0.0, 0.0) == pytest.approx(-math.log(8 / math.sqrt(3)), abs=1e-14)
    assert bounds.thm11_upper(0.0, 0.0) == pytest.approx(-1.53014, abs=1e-5)
    assert potential.evaluate_eigenvalues(0.0, 0.0).f <= bounds.thm11_upper(0.0, 0.0)


def test_lower_bound_formula_and_fixed_gap():
    l = -THIRD + 1e-4
    assert bounds.thm11_lower(l, l) == pytest.approx(bounds.C_F_LOWER + math.log(1e4), rel=1e-12)
    assert bounds.thm11_lower(l, l) == pytest.approx(-16.30, abs=5e-3)
    rng = np.random.default_rng(0)
    gap = -math.log(8 * math.sqrt(3)) - bounds.C_F_LOWER
    assert gap == pytest.approx(22.88, abs=5e-3)
    for _ in range(10):
        a, b = rng.uniform(-0.33, 0.0, 2)
        assert bounds.thm11_upper(a, b) - bounds.thm11_lower(a, b) == pytest.approx(gap, abs=1e-12)


def test_bound_formulas_reject_unphysical():
    with pytest.raises(NonPhysicalInput):
        bounds.thm11_upper(-0.4, 0.0)
    with pytest.raises(NonPhysicalInput):
        bounds.thm11_lower(0.5, 0.3)
    with pytest.raises(NonPhysicalInput):
        bounds.comparison_bounds(-THIRD)


def test_sandwich_at_small_margins():
    for e in (1e-4, 1e-6, 1e-8):
        l = e - THIRD
        f = potential.evaluate_eigenvalues(l, l).f
        assert bounds.thm11_lower(l, l) <= f <= bounds.thm11_upper(l, l)


def test_comparison_bounds():
    f_lo, f_hi, g_lo, g_hi = bounds.comparison_bounds(1e-3 - THIRD)
    assert f_lo == pytest.approx(0.5 * math.log(1 / ((2 * math.pi) ** 3 * math.e * 1e-3)), rel=1e-14)
    assert f_lo == pytest.approx(0.19706, abs=1e-5)
    f_hi0 = bounds.comparison_bounds(0.0)[1]
    assert f_hi0 == pytest.approx(math.log(3), abs=1e-14)
    assert f_hi0 >= potential.evaluate_eigenvalues(0.0, 0.0).f
    assert g_lo < g_hi


def test_band_report_regimes():
    c = bounds.TheoremConstants.compute()
    lo, hi = bounds.thm15_band(1e-4 - THIRD, 1.0 / 1e-4)
    assert lo.holds is True and hi.holds is True
    assert lo.slack == pytest.approx(1.0 - c.c_grad_lower)
    lo, hi = bounds.thm15_band(0.0, 0.0)
    assert lo.holds is None and hi.holds is None and "outside eps0" in lo.regime_note
    lo, _ = bounds.thm15_band(1e-4 - THIRD, 1e4, lambda2=0.3 - THIRD)
    assert "delta not small" in lo.regime_note
    lo, hi = bounds.thm15_band(1e-4 - THIRD, 1e7)
    assert lo.holds is True and hi.holds is False and hi.failed


def test_band_on_a_uniaxial_point():
    l = 1e-4 - THIRD
    grad = potential.gradient(potential.QTensor.from_eigenvalues(l, l))
    lo, hi = bounds.thm15_band(l, grad.norm)
    assert lo.holds and hi.holds


def test_report_tolerance():
    assert bounds.make_report("x", 0, 0, 1.0, 1.0 - 5e-10).holds is True
    assert bounds.make_report("x", 0, 0, 1.0, 1.0 - 2e-9).holds is False
    assert bounds.make_report("x", 0, 0, 1.0, 0.0, in_regime=False).holds is None


def test_lemma23():
    assert bounds.LEMMA23_PREFACTOR == pytest.approx((2 * math.e - 5) / (24 * math.e), rel=1e-15)
    l = 1e-3 - THIRD
    from singpot.dualsolver import solve_multipliers

    res = solve_multipliers((l, l, -2 * l))
    rep = bounds.lemma23_check(1e-3, res.nu.nu2, lambda1=l)
    assert rep.holds is True
    rep = bounds.lemma23_check(0.3, 0.1)
    assert rep.holds is None and "precondition unmet" in rep.regime_note


@pytest.mark.parametrize("nu", [(50.0, 20.0), (100.0, 100.0)])
def test_lemma24_holds(nu):
    reps = bounds.lemma24_sandwiches(NuCoords(*nu))
    assert len(reps) == 6
    assert all(r.holds is True for r in reps)


def test_lemma24_regime_marking_and_errors():
    reps = bounds.lemma24_sandwiches(NuCoords(5.0, 0.1))
    assert all(r.holds is None for r in reps)
    assert all("precondition unmet" in r.regime_note for r in reps)
    with pytest.raises(ValueError):
        bounds.lemma24_sandwiches(NuCoords(1.0, 2.0))
    with pytest.raises(ValueError):
        bounds.lemma24_sandwiches(NuCoords(1.0, 0.0))


def test_lemma25_reports():
    assert all(r.holds for r in bounds.lemma25_check(NuCoords(40.0, 3.0)))


def test_asymptotic_form():
    mid = 0.5 * (-math.log(8 * math.sqrt(3)) + bounds.C_F_LOWER)
    assert bounds.asymptotic_f(1e-8, 1e-8) == pytest.approx(-0.5 * math.log(1e-16) + mid, rel=1e-14)
    assert -0.5 * math.log(1e-16) == pytest.approx(18.42, abs=5e-3)
    l = 1e-4 - THIRD
    est = bounds.asymptotic_f(1e-4, 1e-4)
    assert bounds.thm11_lower(l, l) <= est <= bounds.thm11_upper(l, l)
    f = potential.evaluate_eigenvalues(l, l).f
    assert abs(est - f) <= bounds.thm11_upper(l, l) - bounds.thm11_lower(l, l)
    values = [bounds.asymptotic_f(e, 1e-5) for e in (1e-5, 1e-6, 1e-7)]
    assert values[0] < values[1] < values[2]
    assert bounds.asymptotic_f(1e-6, 1e-6, "laplace") == pytest.approx(
        math.log(1e6) - math.log(4 * math.pi) - 1.0, rel=1e-14
    )
    with pytest.raises(OutOfRegime):
        bounds.asymptotic_f(1e-2, 1e-6)


def test_laplace_constant_is_the_observed_limit():
    l = 1e-8 - THIRD
    assert potential.evaluate_eigenvalues(l, l).g == pytest.approx(bounds.LAPLACE_CONST, abs=1e-3)


def test_family_paths():
    for fam in bounds.FAMILIES:
        path = bounds.family_path(fam, 10)
        assert path[0][0] == pytest.approx(0.3) and path[-1][0] == pytest.approx(1e-8)
        for e, d in path:
            assert e <= d <= 0.5 * (1 - e) + 1e-15
    with pytest.raises(ValueError):
        bounds.family_delta("helical", 0.1)


def test_sweep_points(sweep):
    pts, _ = sweep
    assert len(pts) == 3 * 40
    for p in pts:
        assert p.residual <= 1e-10
        assert p.mu[0] <= p.mu[1] <= p.mu[2]
        assert p.radial**2 + p.tangential**2 == pytest.approx(p.grad_norm**2, rel=1e-9)


def test_thm11_suite(sweep):
    reports, summary = bounds.run_suite("thm11", sweep[0])
    assert not any(r.failed for r in reports)
    assert all(r.holds is True for r in reports if r.name == "thm11.upper")
    assert summary["thm11"]["empirical_delta0"] > 0.0


def test_thm15_suite(sweep):
    reports, summary = bounds.run_suite("thm15", sweep[0])
    assert not any(r.failed for r in reports)
    band = [r for r in reports if r.name.startswith("thm15") and r.in_regime]
    assert band and all(r.epsilon <= bounds.EPS0_MARKER for r in band)
    s = summary["thm15"]
    assert s["c_grad_lower"] <= s["scaled_gradient_min"] <= s["scaled_gradient_max"] <= s["c_grad_upper"]


def test_lemma_suite(sweep):
    reports, summary = bounds.run_suite("lemmas", sweep[0])
    assert not any(r.failed for r in reports)
    assert 0.0 < summary["lemmas"]["empirical_nu2_threshold"] <= bounds.NU2_MARKER


def test_reports_sorted_and_unknown_suite(sweep):
    reports, _ = bounds.run_suite("thm11", sweep[0])
    assert reports == bounds.sort_reports(reversed(reports))
    with pytest.raises(ValueError):
        bounds.run_suite("thm99", sweep[0])


def _sample_reports():
    return [
        bounds.make_report("a", -0.1, 0.05, 1.0, 2.0, True, "note, with comma"),
        bounds.make_report("b", math.nan, math.nan, 0.5, math.inf, False, ""),
        BoundReport("c", 0.1, -0.2, 0.1 + THIRD, -0.2 + THIRD, -math.inf, 1e-300, math.inf, False, "q\"uote"),
    ]


def test_csv_round_trip():
    reps = _sample_reports()
    back = bounds.reports_from_csv(bounds.reports_to_csv(reps))
    assert bounds.reports_to_csv(back) == bounds.reports_to_csv(reps)
    assert back[0] == reps[0] and back[2] == reps[2]
    assert math.isnan(back[1].lambda1) and back[1].holds is None
    with pytest.raises(ValueError):
        bounds.reports_from_csv("x,y\n")


def test_json_round_trip(sweep):
    reps = _sample_reports() + bounds.run_suite("thm15", sweep[0])[0][:20]
    back = bounds.reports_from_json(bounds.reports_to_json(reps))
    assert bounds.reports_to_json(back) == bounds.reports_to_json(reps)
    assert back[2] == reps[2] and back[5:] == reps[5:]
