"""Inequalities bracketing f and its gradient, with sweep-based verification.

Every check produces a :class:`BoundReport`. The smallness thresholds in the
underlying estimates are only known to exist, so each report states whether
its point is inside an empirically determined regime; ``holds`` is ``None``
outside it and a pass/fail flag inside.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import dualsolver, oracle, specfun
from .moments import NuCoords, angular_integrals, lemma25_closed_forms, reduced_integrals
from .potential import dual_value
from .qtensor import THIRD

SLACK_TOL = 1e-9
EPS0_MARKER = 1e-3
DELTA0_MARKER = 1e-2
NU2_MARKER = 0.5

C_F_LOWER = math.log(16.0) - 8.0 * math.log(math.pi) - math.pi**5 / 16.0
UPPER_CONST = -math.log(8.0 * math.sqrt(3.0))
ASYMPTOTIC_MIDPOINT = 0.5 * (UPPER_CONST + C_F_LOWER)
LAPLACE_CONST = -math.log(4.0 * math.pi) - 1.0
LEMMA23_PREFACTOR = (2.0 * math.e - 5.0) / (24.0 * math.e)
RATE_LOWER = 8.0 / math.pi**5
RATE_UPPER = math.pi**5 / 32.0
ASYMPTOTIC_MAX = 1e-4

CSV_COLUMNS = ("name", "lambda1", "lambda2", "epsilon", "delta", "lhs", "rhs", "slack", "holds", "regime_note")


class OutOfRegime(ValueError):
    """Input outside the range where the formula is meant to be used."""


@dataclass(frozen=True)
class TheoremConstants:
    c_f_lower: float
    c_grad_lower: float
    c_grad_upper: float

    @classmethod
    def compute(cls) -> "TheoremConstants":
        c = _blowup_constants()
        return cls(C_F_LOWER, c.c_grad_lower, c.c_grad_upper)


@lru_cache(maxsize=1)
def _blowup_constants() -> specfun.BlowupConstants:
    return specfun.compute_constants()


@dataclass(frozen=True)
class BoundReport:
    """One inequality lhs <= rhs at one point; slack = rhs - lhs."""

    name: str
    lambda1: float
    lambda2: float
    epsilon: float
    delta: float
    lhs: float
    rhs: float
    slack: float
    holds: bool | None
    regime_note: str

    @property
    def in_regime(self) -> bool:
        return self.holds is not None

    @property
    def failed(self) -> bool:
        return self.holds is False


def make_report(name, lambda1, lambda2, lhs, rhs, in_regime=True, note="") -> BoundReport:
    lhs, rhs = float(lhs), float(rhs)
    slack = rhs - lhs
    holds = bool(slack >= -SLACK_TOL) if in_regime else None
    return BoundReport(
        name,
        float(lambda1),
        float(lambda2),
        float(lambda1) + THIRD,
        float(lambda2) + THIRD,
        lhs,
        rhs,
        slack,
        holds,
        note,
    )


def _margins(lambda1: float, lambda2: float) -> tuple[float, float]:
    eps, delta = float(lambda1) + THIRD, float(lambda2) + THIRD
    lam3 = -float(lambda1) - float(lambda2)
    if not (eps > 0.0 and delta > 0.0 and -THIRD < lam3 < 2.0 * THIRD):
        raise dualsolver.NonPhysicalInput(f"({lambda1}, {lambda2}) is not strictly physical")
    return eps, delta


# formulas


def thm11_upper(lambda1: float, lambda2: float) -> float:
    """-ln(8 sqrt 3) - (ln eps + ln delta)/2."""
    eps, delta = _margins(lambda1, lambda2)
    return UPPER_CONST - 0.5 * math.log(eps) - 0.5 * math.log(delta)


def thm11_lower(lambda1: float, lambda2: float) -> float:
    """c_f_lower - (ln eps + ln delta)/2 (meaningful for small delta)."""
    eps, delta = _margins(lambda1, lambda2)
    return C_F_LOWER - 0.5 * math.log(eps) - 0.5 * math.log(delta)


def comparison_bounds(lambda1: float) -> tuple[float, float, float, float]:
    """Reference bounds in eps alone: (f_lower, f_upper, grad_lower, grad_upper)."""
    eps = float(lambda1) + THIRD
    if not (0.0 < eps <= THIRD + 1e-15):
        raise dualsolver.NonPhysicalInput(f"lambda1 = {lambda1} is not strictly physical")
    f_lo = 0.5 * math.log(1.0 / ((2.0 * math.pi) ** 3 * math.e * eps))
    f_hi = math.log(1.0 / eps)
    g_lo = 0.5 * math.sqrt(1.5) * math.log(2.0 / (math.pi * math.e * eps))
    g_hi = math.log(1.0 / (2.0 * math.pi**3 * math.e * eps)) / eps
    return f_lo, f_hi, g_lo, g_hi


def asymptotic_f(epsilon: float, delta: float, variant: str = "midpoint") -> float:
    """Near-boundary estimate -(ln eps + ln delta)/2 + const.

    ``midpoint`` uses the centre of the two-sided bracket; ``laplace`` uses
    -ln(4 pi) - 1, the limit of the regularized potential observed as both
    margins vanish.
    """
    eps, delta = float(epsilon), float(delta)
    if not (0.0 < eps <= ASYMPTOTIC_MAX and 0.0 < delta <= ASYMPTOTIC_MAX):
        raise OutOfRegime(f"asymptotic form needs 0 < eps, delta <= {ASYMPTOTIC_MAX}")
    const = {"midpoint": ASYMPTOTIC_MIDPOINT, "laplace": LAPLACE_CONST}[variant]
    return -0.5 * math.log(eps) - 0.5 * math.log(delta) + const


# single-point checks


def thm15_band(
    lambda1: float,
    grad_norm: float,
    lambda2: float = math.nan,
    eps0: float = EPS0_MARKER,
    constants: TheoremConstants | None = None,
) -> tuple[BoundReport, BoundReport]:
    """c_grad_lower <= |grad f| eps and |grad f| eps <= c_grad_upper."""
    c = constants or TheoremConstants.compute()
    eps = float(lambda1) + THIRD
    scaled = float(grad_norm) * eps
    in_regime = 0.0 < eps <= eps0
    note = "" if in_regime else f"outside eps0 (eps > {eps0:g})"
    if in_regime and math.isfinite(lambda2) and lambda2 + THIRD >= DELTA0_MARKER:
        note = f"delta not small (delta >= {DELTA0_MARKER:g})"
    lo = make_report("thm15.lower", lambda1, lambda2, c.c_grad_lower, scaled, in_regime, note)
    hi = make_report("thm15.upper", lambda1, lambda2, scaled, c.c_grad_upper, in_regime, note)
    return lo, hi


def gradient_ratio_band(lambda1: float, lambda2: float, ratio: float) -> tuple[BoundReport, BoundReport]:
    """1 <= |grad f| / |radial| <= 2."""
    return (
        make_report("cor31.lower", lambda1, lambda2, 1.0, ratio),
        make_report("cor31.upper", lambda1, lambda2, ratio, 2.0),
    )


def lemma23_check(delta: float, nu2: float, delta0: float = DELTA0_MARKER, lambda1: float = math.nan) -> BoundReport:
    """delta >= (2e - 5)/(24 e) exp(-nu2)."""
    in_regime = float(delta) < delta0
    note = "" if in_regime else f"precondition unmet (delta >= {delta0:g})"
    return make_report(
        "lemma23", lambda1, float(delta) - THIRD, LEMMA23_PREFACTOR * math.exp(-float(nu2)), delta, in_regime, note
    )


def lemma24_sandwiches(nu: NuCoords, nu2_min: float = NU2_MARKER) -> list[BoundReport]:
    """Sphere integrals against multiples of their azimuthal closed forms.

    Ratio form: lower reports read  k_lo <= integral / closed form, upper
    reports read  integral / closed form <= k_hi.
    """
    n1, n2 = float(nu.nu1), float(nu.nu2)
    if not (n1 > 0.0 and n2 > 0.0):
        raise ValueError("sandwich checks need nu1, nu2 > 0")
    if n1 < n2:
        raise ValueError("sandwich checks need nu1 >= nu2")
    den, num_x, num_y = reduced_integrals(nu)
    a_inv, sin_w, cos_w = lemma25_closed_forms(nu)
    eps, delta = num_x / den, num_y / den
    in_regime = n2 >= nu2_min
    note = f"nu1={n1:.6g} nu2={n2:.6g}"
    if not in_regime:
        note += f"; precondition unmet (nu2 < {nu2_min:g})"
    l1, l2 = eps - THIRD, delta - THIRD
    out = []
    for label, ratio, k_lo, k_hi in (
        ("denominator", den / a_inv, 1.0 / math.pi, math.pi**2 / 4.0),
        ("numerator_x", num_x / cos_w, 4.0 / math.pi**3, math.pi**4 / 16.0),
        ("numerator_y", num_y / sin_w, 4.0 / math.pi**3, math.pi**4 / 16.0),
    ):
        out.append(make_report(f"lemma24.{label}.lower", l1, l2, k_lo, ratio, in_regime, note))
        out.append(make_report(f"lemma24.{label}.upper", l1, l2, ratio, k_hi, in_regime, note))
    return out


def lemma25_check(nu: NuCoords) -> list[BoundReport]:
    """Closed forms against direct quadrature, as |rel. difference| <= 1e-9."""
    closed = lemma25_closed_forms(nu)
    quad = angular_integrals(nu)
    note = f"nu1={nu.nu1:.6g} nu2={nu.nu2:.6g}"
    names = ("inverse", "sin2", "cos2")
    return [
        make_report(f"lemma25.{n}", math.nan, math.nan, abs(q / c - 1.0), 1e-9, True, note)
        for n, q, c in zip(names, quad, closed)
    ]


# sweeps

FAMILIES = ("uniaxial", "biaxial", "skew")
BIAXIAL_DELTA = 0.3


def family_delta(family: str, eps: float) -> float:
    if family == "uniaxial":
        return eps
    if family == "biaxial":
        return BIAXIAL_DELTA
    if family == "skew":
        return min(math.sqrt(eps), 0.5 * (1.0 - eps))
    raise ValueError(f"unknown path family {family!r}")


def family_path(family: str, n: int, eps_min: float = 1e-8, eps_max: float = 0.3) -> list[tuple[float, float]]:
    """(eps, delta) pairs with eps geometrically decreasing from eps_max."""
    eps = np.geomspace(eps_max, eps_min, n)
    return [(float(e), family_delta(family, float(e))) for e in eps]


@dataclass(frozen=True)
class SweepPoint:
    family: str
    epsilon: float
    delta: float
    lam: tuple[float, float, float]
    f: float
    g: float
    mu: tuple[float, float, float]
    grad_norm: float
    radial: float
    tangential: float
    residual: float
    iterations: int
    nu_exact: tuple[float, float] | None = None

    @property
    def nu(self) -> tuple[float, float]:
        if self.nu_exact is not None:
            return self.nu_exact
        return self.mu[2] - self.mu[0], self.mu[2] - self.mu[1]


def lambdas_from_margins(eps: float, delta: float) -> tuple[float, float, float]:
    l1, l2 = eps - THIRD, delta - THIRD
    return tuple(sorted((l1, l2, -l1 - l2)))  # type: ignore[return-value]


def sweep_family(family: str, n: int = 40, eps_min: float = 1e-8, eps_max: float = 0.3) -> list[SweepPoint]:
    """Solve along one path family with continuation."""
    pairs = family_path(family, n, eps_min, eps_max)
    lams = [lambdas_from_margins(e, d) for e, d in pairs]
    results = dualsolver.continuation_solve(lams)
    pts = []
    for (e, d), lam, res in zip(pairs, lams, results):
        f = dual_value(lam, res)
        mu1, mu2, mu3 = res.mu.mu
        eps_s, delta_s = lam[0] + THIRD, lam[1] + THIRD
        pts.append(
            SweepPoint(
                family,
                eps_s,
                delta_s,
                lam,
                f,
                f + 0.5 * math.log(eps_s) + 0.5 * math.log(delta_s),
                res.mu.mu,
                math.sqrt(mu1 * mu1 + mu2 * mu2 + mu3 * mu3),
                -math.sqrt(1.5) * mu1,
                math.sqrt(0.5) * (mu1 + 2.0 * mu2),
                res.residual,
                res.iterations,
                (res.nu.nu1, res.nu.nu2),
            )
        )
    return pts


def default_sweep(n_per_family: int = 40) -> list[SweepPoint]:
    return [p for fam in FAMILIES for p in sweep_family(fam, n_per_family)]


def empirical_delta0(points: Sequence[SweepPoint]) -> tuple[float, bool]:
    """delta of the first lower-bound failure in delta order.

    Returns (delta0, failure_seen). Without failures delta0 is the largest
    delta sampled, and every sampled point counts as inside the regime.
    """
    ordered = sorted(points, key=lambda p: p.delta)
    for p in ordered:
        if thm11_lower(p.lam[0], p.lam[1]) - p.f > SLACK_TOL:
            return p.delta, True
    return ordered[-1].delta, False


def thm11_reports(points: Sequence[SweepPoint]) -> tuple[list[BoundReport], dict]:
    delta0, failed = empirical_delta0(points)
    reports = []
    for p in points:
        l1, l2 = p.lam[0], p.lam[1]
        tag = f"{p.family} path"
        reports.append(make_report("thm11.upper", l1, l2, p.f, thm11_upper(l1, l2), True, tag))
        in_regime = p.delta < delta0 if failed else True
        note = tag if in_regime else f"{tag}; delta >= empirical delta0 {delta0:.6g}"
        reports.append(make_report("thm11.lower", l1, l2, thm11_lower(l1, l2), p.f, in_regime, note))
        f_lo, f_hi, _, _ = comparison_bounds(l1)
        up, lo = thm11_upper(l1, l2), thm11_lower(l1, l2)
        reports.append(
            make_report("ref.f_upper", l1, l2, p.f, f_hi, True, "tighter: " + ("thm11" if up < f_hi else "ref"))
        )
        reports.append(
            make_report("ref.f_lower", l1, l2, f_lo, p.f, True, "tighter: " + ("thm11" if lo > f_lo else "ref"))
        )
    summary = {
        "empirical_delta0": delta0,
        "lower_bound_failure_seen": failed,
        "note": (
            "delta0 = delta of the first lower-bound failure"
            if failed
            else "no lower-bound failure observed; delta0 = largest sampled delta"
        ),
    }
    return reports, summary


def thm15_reports(points: Sequence[SweepPoint], eps0: float = EPS0_MARKER) -> tuple[list[BoundReport], dict]:
    c = TheoremConstants.compute()
    reports = []
    scaled = []
    for p in points:
        l1, l2 = p.lam[0], p.lam[1]
        reports.extend(thm15_band(l1, p.grad_norm, l2, eps0, c))
        reports.extend(gradient_ratio_band(l1, l2, p.grad_norm / abs(p.radial)))
        if p.epsilon <= eps0:
            scaled.append(p.grad_norm * p.epsilon)
            _, _, g_lo, g_hi = comparison_bounds(l1)
            tight = "thm15" if c.c_grad_upper / p.epsilon < g_hi else "ref"
            reports.append(make_report("ref.grad_upper", l1, l2, p.grad_norm, g_hi, True, "tighter: " + tight))
            tight = "thm15" if c.c_grad_lower / p.epsilon > g_lo else "ref"
            reports.append(make_report("ref.grad_lower", l1, l2, g_lo, p.grad_norm, True, "tighter: " + tight))
    summary = {
        "eps0_marker": eps0,
        "c_grad_lower": c.c_grad_lower,
        "c_grad_upper": c.c_grad_upper,
        "scaled_gradient_min": min(scaled) if scaled else math.nan,
        "scaled_gradient_max": max(scaled) if scaled else math.nan,
    }
    return reports, summary


def empirical_nu2_threshold(
    nu2_grid: Iterable[float] | None = None, ratios: Sequence[float] = (1.0, 2.0, 10.0, 100.0, 1e3)
) -> float:
    """Smallest sampled nu2 above which every sandwich of the integral lemma holds."""
    grid = sorted(nu2_grid if nu2_grid is not None else np.geomspace(0.01, 1e4, 49))
    threshold = math.inf
    for n2 in reversed(grid):
        ok = all(r.slack >= -SLACK_TOL for k in ratios for r in lemma24_sandwiches(NuCoords(n2 * k, n2), 0.0))
        if not ok:
            break
        threshold = float(n2)
    return threshold


def lemma_reports(points: Sequence[SweepPoint], seed: int = 0) -> tuple[list[BoundReport], dict]:
    nu2_threshold = empirical_nu2_threshold()
    reports: list[BoundReport] = []
    for p in points:
        nu1, nu2 = p.nu
        reports.append(lemma23_check(p.delta, nu2, lambda1=p.lam[0]))
        # nu scaling of the margins where both are small
        small = p.delta < DELTA0_MARKER
        note = f"{p.family} path" + ("" if small else "; delta not small")
        reports.append(make_report("rate.eps_nu1.lower", p.lam[0], p.lam[1], RATE_LOWER, p.epsilon * nu1, small, note))
        reports.append(make_report("rate.eps_nu1.upper", p.lam[0], p.lam[1], p.epsilon * nu1, RATE_UPPER, small, note))
        if small and nu2 > 0:
            reports.append(make_report("rate.delta_nu2.lower", p.lam[0], p.lam[1], RATE_LOWER, p.delta * nu2, True, note))
            reports.append(make_report("rate.delta_nu2.upper", p.lam[0], p.lam[1], p.delta * nu2, RATE_UPPER, True, note))
    rng = np.random.default_rng(seed)
    for _ in range(20):
        n2 = float(10 ** rng.uniform(-1, 3))
        n1 = n2 * float(10 ** rng.uniform(0, 2))
        reports.extend(lemma24_sandwiches(NuCoords(n1, n2), nu2_threshold))
        reports.extend(lemma25_check(NuCoords(n1, n2)))
    summary = {"empirical_nu2_threshold": nu2_threshold}
    return reports, summary


def oracle_reports(n_points: int = 4, seed: int = 0, grid: tuple[int, int] = (128, 256)) -> tuple[list[BoundReport], dict]:
    """Dual value against the discrete primal oracle and the wedge density."""
    rng = np.random.default_rng(seed)
    sphere = oracle.SphereGrid.product(*grid)
    reports = []
    gaps = []
    for _ in range(n_points):
        eps = float(rng.uniform(0.02, 0.3))
        delta = float(rng.uniform(eps, 0.5 * (1.0 - eps)))
        lam = lambdas_from_margins(eps, delta)
        res = dualsolver.solve_multipliers(lam)
        f = dual_value(lam, res)
        val, cert = oracle.primal_minimize(lam, sphere)
        gaps.append(cert.gap)
        reports.append(make_report("oracle.primal_match", lam[0], lam[1], abs(val - f), 2e-4, True, cert.grid))
        reports.append(make_report("oracle.duality_gap", lam[0], lam[1], cert.gap, 1e-8, True, cert.grid))
    for _ in range(n_points):
        et = float(rng.uniform(0.05, 1.0))
        eps = et * et / 3.0
        delta = float(rng.uniform(eps, 0.5 * (1.0 - eps)))
        td = oracle.construct_test_density(eps, delta - THIRD)
        lam = lambdas_from_margins(eps, delta)
        res = dualsolver.solve_multipliers(lam)
        f = dual_value(lam, res)
        err = max(abs(a - b) for a, b in zip(td.achieved_moments, td.target))
        reports.append(make_report("oracle.wedge_moments", lam[0], lam[1], err, 1e-8, True, f"b={td.b:.6g}"))
        reports.append(make_report("oracle.wedge_entropy", lam[0], lam[1], f, td.entropy, True, f"b={td.b:.6g}"))
        reports.append(make_report("oracle.wedge_width", lam[0], lam[1], 3.0 * delta, td.b**2, True, f"b={td.b:.6g}"))
    return reports, {"max_duality_gap": max(gaps) if gaps else math.nan}


SUITES = ("thm11", "thm15", "lemmas", "oracle")


def run_suite(name: str, points: Sequence[SweepPoint] | None = None) -> tuple[list[BoundReport], dict]:
    """Run one named suite (or ``all``); reports are sorted by inputs."""
    names = SUITES if name == "all" else (name,)
    for n in names:
        if n not in SUITES:
            raise ValueError(f"unknown suite {name!r}")
    if points is None and any(n in ("thm11", "thm15", "lemmas") for n in names):
        points = default_sweep()
    reports: list[BoundReport] = []
    summary: dict = {}
    for n in names:
        if n == "thm11":
            r, s = thm11_reports(points)
        elif n == "thm15":
            r, s = thm15_reports(points)
        elif n == "lemmas":
            r, s = lemma_reports(points)
        else:
            r, s = oracle_reports()
        reports.extend(r)
        summary[n] = s
    return sort_reports(reports), summary


def sort_reports(reports: Iterable[BoundReport]) -> list[BoundReport]:
    def key(r: BoundReport):
        return (r.name, _nan_last(r.epsilon), _nan_last(r.delta), r.regime_note)

    return sorted(reports, key=key)


def _nan_last(x: float) -> tuple[int, float]:
    return (1, 0.0) if math.isnan(x) else (0, x)


# serialization


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_holds(s: str) -> bool | None:
    return {"true": True, "false": False, "": None}[s]


def reports_to_csv(reports: Iterable[BoundReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def reports_from_csv(text: str) -> list[BoundReport]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("unexpected report CSV header")
    out = []
    for row in rows[1:]:
        d = dict(zip(CSV_COLUMNS, row))
        out.append(
            BoundReport(
                d["name"],
                *(float(d[k]) for k in ("lambda1", "lambda2", "epsilon", "delta", "lhs", "rhs", "slack")),
                _parse_holds(d["holds"]),
                d["regime_note"],
            )
        )
    return out


def _json_float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def reports_to_json(reports: Iterable[BoundReport]) -> str:
    rows = []
    for r in reports:
        d = asdict(r)
        for f in fields(BoundReport):
            if f.type == "float":
                d[f.name] = _json_float(d[f.name])
        rows.append(d)
    return json.dumps(rows, indent=1)


def reports_from_json(text: str) -> list[BoundReport]:
    out = []
    for d in json.loads(text):
        vals = {}
        for f in fields(BoundReport):
            v = d[f.name]
            vals[f.name] = float(v) if f.type == "float" else v
        out.append(BoundReport(**vals))
    return out
