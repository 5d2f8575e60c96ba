"""Partition function and second moments of the quadratic exponential family.

For multipliers mu (summing to zero) the density on the unit sphere is
rho(n) = exp(mu1 x^2 + mu2 y^2 + mu3 z^2) / Z(mu). Every sphere integral is
reduced to one dimension: with axis i as the polar variable t and (b, c) the
two remaining multipliers, integrating out the azimuth gives

    Z = 4 pi exp(p) int_0^1 exp(-kappa t^2) S(sigma (1 - t^2) / 2) dt,

where p = max(b, c), sigma = |b - c|, kappa = p - mu_i and
S(xi) = exp(-xi) I0(xi). Adding weights t^2, t^4 and t^2 (1 - t^2) yields the
moments needed for the covariance of (x^2, y^2, z^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import quadrature
from .specfun import i0_scaled

FOUR_PI = 4.0 * math.pi
SUM_TOL = 1e-12
QUAD_RTOL = 1e-12

# exp(-EXP_CUT) is far below double precision relative to any retained term
EXP_CUT = 75.0


class MomentError(ValueError):
    """Invalid input to a moment computation."""


@dataclass(frozen=True)
class Multipliers:
    """Lagrange multipliers summing to zero.

    ``nu_exact`` optionally keeps (mu3 - mu1, mu3 - mu2) at full precision;
    near the boundary the multipliers are O(1/epsilon) while nu2 can be O(1),
    so the rounded triple alone cannot resolve it. Moment evaluations then
    use the equivalent shifted exponent (-nu1, -nu2, 0).
    """

    mu: tuple[float, float, float]
    nu_exact: tuple[float, float] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        mu = tuple(float(v) for v in self.mu)
        if len(mu) != 3 or not all(math.isfinite(v) for v in mu):
            raise MomentError("multipliers must be three finite reals")
        scale = max(1.0, max(abs(v) for v in mu))
        if abs(sum(mu)) > SUM_TOL * scale:
            raise MomentError(f"multipliers must sum to zero, got {sum(mu):.3e}")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def from_pair(cls, mu1: float, mu2: float) -> "Multipliers":
        return cls((mu1, mu2, -mu1 - mu2))

    @classmethod
    def from_nu(cls, nu1: float, nu2: float) -> "Multipliers":
        n1, n2 = float(nu1), float(nu2)
        # subtracting from a common mu3 keeps the rounded triple ordered like nu
        mu3 = (n1 + n2) / 3.0
        return cls((mu3 - n1, mu3 - n2, mu3), (n1, n2))

    @property
    def nu(self) -> "NuCoords":
        if self.nu_exact is not None:
            return NuCoords(*self.nu_exact)
        m1, m2, _ = self.mu
        return NuCoords(-(2.0 * m1 + m2), -(m1 + 2.0 * m2))

    def exponents(self) -> tuple[float, float, float]:
        """Coefficients equivalent to mu up to a common shift, at best precision."""
        if self.nu_exact is not None:
            return (-self.nu_exact[0], -self.nu_exact[1], 0.0)
        return self.mu

    def as_array(self) -> np.ndarray:
        return np.array(self.mu)


@dataclass(frozen=True)
class NuCoords:
    """nu1 = mu3 - mu1, nu2 = mu3 - mu2."""

    nu1: float
    nu2: float

    def __post_init__(self):
        if not (math.isfinite(self.nu1) and math.isfinite(self.nu2)):
            raise MomentError("nu coordinates must be finite")

    def to_multipliers(self) -> Multipliers:
        n1, n2 = float(self.nu1), float(self.nu2)
        return Multipliers.from_pair((-2.0 * n1 + n2) / 3.0, (n1 - 2.0 * n2) / 3.0)


@dataclass(frozen=True)
class MomentVector:
    m: tuple[float, float, float]

    @property
    def lambdas(self) -> tuple[float, float, float]:
        return tuple(v - 1.0 / 3.0 for v in self.m)  # type: ignore[return-value]


@dataclass(frozen=True)
class AxialIntegrals:
    """Reduced sphere integrals with axis ``axis`` as the polar variable.

    Z = 4 pi exp(log_scale) * base; the other fields are expectations.
    """

    axis: int
    log_scale: float
    base: float
    second: float  # E[x_i^2]
    fourth: float  # E[x_i^4]
    mixed: float  # E[x_i^2 (1 - x_i^2)]

    @property
    def log_z_shifted(self) -> float:
        """ln Z - log_scale, free of the cancellation in ln Z for large mu."""
        return math.log(FOUR_PI * self.base)

    @property
    def log_z(self) -> float:
        return self.log_scale + self.log_z_shifted


def _geometric_points(scale: float, upper: float, ratio: float = 4.0) -> list[float]:
    """Points scale/4, scale, 4 scale, ... below ``upper``."""
    pts = []
    if not math.isfinite(scale) or scale <= 0.0:
        return pts
    x = 0.25 * scale
    while x < upper:
        pts.append(x)
        x *= ratio
    return pts


def axial_integrals(a: float, b: float, c: float, axis: int = 0, rtol: float = QUAD_RTOL) -> AxialIntegrals:
    """1-D reduced integrals for exponent a t^2 + b y^2 + c z^2 on the sphere."""
    p = max(b, c)
    sigma = abs(b - c)
    kappa = p - a
    half_s = 0.5 * sigma

    if kappa >= 0.0:
        log_scale = p

        def envelope_t(t):
            return np.exp(-kappa * t * t)

        def envelope_u(u):
            return np.exp(-kappa * (1.0 - u) ** 2)

        use_t, use_u = True, kappa <= 4.0 * EXP_CUT
    else:
        log_scale = a
        k = -kappa

        def envelope_t(t):
            return np.exp(-k * (1.0 - t * t))

        def envelope_u(u):
            return np.exp(-k * u * (2.0 - u))

        use_t, use_u = 0.75 * k <= EXP_CUT, True

    def on_t(t):
        s = 1.0 - t * t
        h = envelope_t(t) * i0_scaled(half_s * s)
        t2 = t * t
        return np.stack([h, h * t2, h * t2 * t2, h * t2 * s])

    def on_u(u):
        s = u * (2.0 - u)
        h = envelope_u(u) * i0_scaled(half_s * s)
        t2 = (1.0 - u) ** 2
        return np.stack([h, h * t2, h * t2 * t2, h * t2 * s])

    total = np.zeros(4)
    if use_t:
        upper = 0.5
        pts = [0.0]
        if kappa > 0.0:
            width = 1.0 / math.sqrt(kappa)
            upper = min(0.5, math.sqrt(EXP_CUT / kappa))
            pts += _geometric_points(width, upper, ratio=2.0)
        pts.append(upper)
        total += quadrature.integrate(on_t, pts, rtol=rtol).value
    if use_u:
        upper = 0.5
        pts = [0.0]
        if kappa < 0.0:
            upper = min(0.5, EXP_CUT / -kappa)
            pts += _geometric_points(1.0 / -kappa, upper)
        elif kappa > 0.0:
            # exp(-kappa (1-u)^2) grows toward u = 1/2 on the scale 1/kappa
            pts += [0.5 - d for d in _geometric_points(1.0 / kappa, 0.5)]
        if sigma > 0.0:
            pts += _geometric_points(1.0 / sigma, upper)
        pts.append(upper)
        pts = sorted(x for x in pts if 0.0 <= x <= upper)
        total += quadrature.integrate(on_u, pts, rtol=rtol).value
    base = total[0]
    return AxialIntegrals(axis, log_scale, base, total[1] / base, total[2] / base, total[3] / base)


def _axis_integrals(mu: tuple[float, float, float], axis: int) -> AxialIntegrals:
    others = [mu[j] for j in range(3) if j != axis]
    return axial_integrals(mu[axis], others[0], others[1], axis=axis)


def _as_multipliers(mu) -> Multipliers:
    if isinstance(mu, Multipliers):
        return mu
    return Multipliers(tuple(mu))


@dataclass(frozen=True)
class MomentState:
    """Everything one moment evaluation produces, in original axis order.

    ``exponents`` are the coefficients of (x^2, y^2, z^2); they need not sum
    to zero since moments are invariant under a common shift, which only
    moves ln Z.
    """

    exponents: tuple[float, float, float]
    log_z: float
    m: tuple[float, float, float]
    covariance: np.ndarray
    log_shift: float = 0.0
    log_z_shifted: float = math.nan

    @cached_property
    def jacobian(self) -> np.ndarray:
        """d(m1, m2)/d(mu1, mu2) with mu3 = -mu1 - mu2."""
        c = self.covariance
        return np.array(
            [
                [c[0, 0] - c[0, 2], c[0, 1] - c[0, 2]],
                [c[1, 0] - c[1, 2], c[1, 1] - c[1, 2]],
            ]
        )

    @property
    def jacobian_nu(self) -> np.ndarray:
        """d(m1, m2)/d(nu1, nu2) = -covariance block of (x^2, y^2)."""
        return -self.covariance[:2, :2]


def _state(vals: tuple[float, float, float]) -> MomentState:
    order = sorted(range(3), key=lambda i: (vals[i], i))
    s0, s1, s2 = order
    r0 = _axis_integrals(vals, s0)
    r1 = _axis_integrals(vals, s1)
    r2 = _axis_integrals(vals, s2)
    m = [0.0, 0.0, 0.0]
    m[s0], m[s1] = r0.second, r1.second
    m[s2] = 1.0 - r0.second - r1.second

    # E[x_a^2 x_b^2] from the three directly integrated E[x_i^2 (1 - x_i^2)]
    p01 = 0.5 * (r0.mixed + r1.mixed - r2.mixed)
    c = np.zeros((3, 3))
    c[s0, s0] = r0.fourth - r0.second**2
    c[s1, s1] = r1.fourth - r1.second**2
    c[s0, s1] = c[s1, s0] = p01 - r0.second * r1.second
    c[s0, s2] = c[s2, s0] = -c[s0, s0] - c[s0, s1]
    c[s1, s2] = c[s2, s1] = -c[s1, s1] - c[s0, s1]
    c[s2, s2] = -c[s0, s2] - c[s1, s2]
    return MomentState(vals, r0.log_z, (m[0], m[1], m[2]), c, r0.log_scale, r0.log_z_shifted)


def moment_state(mu) -> MomentState:
    """Log partition function, moments and covariance of (x^2, y^2, z^2).

    The two axes with the smallest multipliers are integrated directly, the
    third moment follows from normalization.
    """
    mu = _as_multipliers(mu)
    if mu.nu_exact is None:
        return _state(mu.mu)
    st = _state(mu.exponents())
    shift = mu.mu[2]
    return replace(st, exponents=mu.mu, log_z=st.log_z + shift, log_shift=st.log_shift + shift)


def moment_state_nu(nu1: float, nu2: float) -> MomentState:
    """State for exponent (-nu1 x^2 - nu2 y^2); its log_z is ln of the reduced integral.

    Working with differences avoids resolving an O(1) nu from two
    multipliers of size 1/epsilon.
    """
    n1, n2 = float(nu1), float(nu2)
    if not (math.isfinite(n1) and math.isfinite(n2)):
        raise MomentError("nu coordinates must be finite")
    return _state((-n1, -n2, 0.0))


def log_partition(mu) -> float:
    mu = _as_multipliers(mu)
    e = mu.exponents()
    s0 = min(range(3), key=lambda i: (e[i], i))
    return _axis_integrals(e, s0).log_z + (mu.mu[2] - e[2])


def moments_of(mu) -> MomentVector:
    return MomentVector(moment_state(mu).m)


def axial_moment(mu, axis: int) -> float:
    """E[x_axis^2] integrated directly with that axis as polar variable."""
    mu = _as_multipliers(mu)
    return _axis_integrals(mu.exponents(), axis).second


def moment_jacobian(mu) -> np.ndarray:
    """d(m1, m2)/d(mu1, mu2) with mu3 = -mu1 - mu2.

    Equals C K with C the covariance of (x^2, y^2) and K = [[2, 1], [1, 2]];
    that product has positive eigenvalues but is symmetric only when
    C11 = C22.
    """
    return moment_state(mu).jacobian


def reduced_integrals(nu: NuCoords) -> tuple[float, float, float]:
    """Sphere integrals of (1, x^2, y^2) times exp(-nu1 x^2 - nu2 y^2)."""
    n1, n2 = float(nu.nu1), float(nu.nu2)
    rx = axial_integrals(-n1, -n2, 0.0, axis=0)
    ry = axial_integrals(-n2, -n1, 0.0, axis=1)
    z = FOUR_PI * math.exp(rx.log_scale) * rx.base
    return z, z * rx.second, z * ry.second


def partition_reduced(nu: NuCoords) -> float:
    """int_{S^2} exp(-nu1 x^2 - nu2 y^2) dS (may overflow to inf for very negative nu)."""
    r = axial_integrals(-float(nu.nu1), -float(nu.nu2), 0.0, axis=0)
    try:
        return FOUR_PI * math.exp(r.log_scale) * r.base
    except OverflowError:
        return math.inf


def lemma25_closed_forms(nu: NuCoords) -> tuple[float, float, float]:
    """Closed forms of int_0^{2 pi} (1/A, sin^2/A^2, cos^2/A^2) dphi.

    A(phi) = nu1 cos^2 phi + nu2 sin^2 phi.
    """
    n1, n2 = float(nu.nu1), float(nu.nu2)
    if not (n1 > 0.0 and n2 > 0.0):
        raise MomentError("closed forms need nu1, nu2 > 0")
    root = math.sqrt(n1 * n2)
    return 2.0 * math.pi / root, math.pi / (n2 * root), math.pi / (n1 * root)


def angular_integrals(nu: NuCoords, rtol: float = 1e-13) -> tuple[float, float, float]:
    """The three azimuthal integrals by adaptive quadrature on [0, pi/2], times 4."""
    n1, n2 = float(nu.nu1), float(nu.nu2)

    def f(phi):
        c2 = np.cos(phi) ** 2
        s2 = 1.0 - c2
        a = n1 * c2 + n2 * s2
        return np.stack([1.0 / a, s2 / a**2, c2 / a**2])

    # A varies on the angular scale sqrt(nu_small/nu_large) near the small axis
    ratio = math.sqrt(min(n1, n2) / max(n1, n2))
    pts = [0.0, 0.5 * math.pi]
    near = _geometric_points(ratio, 0.5 * math.pi)
    pts += near if n1 < n2 else [0.5 * math.pi - x for x in near]
    res = quadrature.integrate(f, sorted(pts), rtol=rtol)
    v = 4.0 * res.value
    return float(v[0]), float(v[1]), float(v[2])
