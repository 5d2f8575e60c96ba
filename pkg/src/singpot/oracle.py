"""Independent primal checks of the potential.

Two oracles that share no code with the moment quadrature or the dual
solver:

* a discrete entropy minimization over densities on a sphere grid, solved
  through its own exact discrete dual, with a duality-gap certificate;
* the explicit piecewise-constant test density supported on four thin
  wedges around the z axis, whose entropy is an upper bound for f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THIRD = 1.0 / 3.0


class InfeasibleMoments(RuntimeError):
    """The discrete moment problem has no solution on this grid (or diverged)."""


class NoAdmissibleWidth(ValueError):
    """The wedge-width equation has no root in (0, pi/2]."""


@dataclass(frozen=True)
class SphereGrid:
    """Quadrature nodes on the unit sphere, closed under n -> -n."""

    nodes: np.ndarray  # (N, 3)
    weights: np.ndarray  # (N,)
    antipode: np.ndarray  # (N,) index of -n
    label: str = ""

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @classmethod
    def product(cls, n_theta: int, n_phi: int) -> "SphereGrid":
        """Gauss-Legendre in cos(theta) times the uniform midpoint rule in phi."""
        if n_phi % 2:
            raise ValueError("n_phi must be even for antipodal pairing")
        c, wc = np.polynomial.legendre.leggauss(n_theta)
        phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
        s = np.sqrt(1.0 - c * c)
        nodes = np.stack(
            [
                np.repeat(s, n_phi) * np.tile(np.cos(phi), n_theta),
                np.repeat(s, n_phi) * np.tile(np.sin(phi), n_theta),
                np.repeat(c, n_phi),
            ],
            axis=1,
        )
        weights = np.repeat(wc, n_phi) * (2.0 * math.pi / n_phi)
        # c_i -> c_{n-1-i} and phi_k -> phi_{k + n_phi/2}
        i = np.repeat(np.arange(n_theta), n_phi)
        k = np.tile(np.arange(n_phi), n_theta)
        antipode = (n_theta - 1 - i) * n_phi + (k + n_phi // 2) % n_phi
        return cls(nodes, weights, antipode, f"product {n_theta}x{n_phi}")

    @classmethod
    def lebedev26(cls) -> "SphereGrid":
        """Degree-7 Lebedev rule with 26 nodes."""
        pts, w = [], []
        for axis in range(3):
            for sign in (1.0, -1.0):
                v = np.zeros(3)
                v[axis] = sign
                pts.append(v)
                w.append(1.0 / 21.0)
        r2 = 1.0 / math.sqrt(2.0)
        for a, b in ((0, 1), (0, 2), (1, 2)):
            for sa in (1.0, -1.0):
                for sb in (1.0, -1.0):
                    v = np.zeros(3)
                    v[a], v[b] = sa * r2, sb * r2
                    pts.append(v)
                    w.append(4.0 / 105.0)
        r3 = 1.0 / math.sqrt(3.0)
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                for sz in (1.0, -1.0):
                    pts.append(np.array([sx, sy, sz]) * r3)
                    w.append(9.0 / 280.0)
        nodes = np.array(pts)
        antipode = np.array([int(np.argmin(np.sum((nodes + p) ** 2, axis=1))) for p in nodes])
        return cls(nodes, 4.0 * math.pi * np.array(w), antipode, "lebedev 26")


@dataclass(frozen=True)
class PrimalCertificate:
    dual_value: float
    primal_value: float
    gap: float
    feasibility: float
    iterations: int
    mu: tuple[float, float, float]
    grid: str


def primal_minimize(
    lam, grid: SphereGrid, tol: float = 1e-12, max_iter: int = 200
) -> tuple[float, PrimalCertificate]:
    """Minimal discrete entropy sum_i w_i rho_i ln rho_i with prescribed moments.

    The discrete optimum is rho_i = exp(mu . n_i^2) / Z_grid; the concave
    discrete dual mu . t - ln Z_grid(mu) is maximized by Newton ascent in the
    two independent directions x^2 - z^2 and y^2 - z^2.
    """
    lam = np.asarray(lam, dtype=float)
    t = lam + THIRD
    if lam.shape != (3,) or np.any(t <= 0.0) or abs(lam.sum()) > 1e-12:
        raise InfeasibleMoments(f"target {tuple(lam)} is not an interior moment triple")
    sq = grid.nodes**2
    feat = np.stack([sq[:, 0] - sq[:, 2], sq[:, 1] - sq[:, 2]], axis=1)
    goal = np.array([t[0] - t[2], t[1] - t[2]])
    w = grid.weights

    def dual(theta):
        e = feat @ theta
        top = e.max()
        p = w * np.exp(e - top)
        z = p.sum()
        p /= z
        return theta @ goal - (math.log(z) + top), p

    theta = np.zeros(2)
    val, p = dual(theta)
    for it in range(1, max_iter + 1):
        mean = p @ feat
        grad = goal - mean
        if np.max(np.abs(grad)) <= tol:
            break
        cen = feat - mean
        hess = (cen * p[:, None]).T @ cen
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise InfeasibleMoments("discrete covariance is singular") from exc
        s = 1.0
        while s > 1e-12:
            cand = theta + s * step
            cval, cp = dual(cand)
            if cval >= val + 1e-4 * s * (grad @ step) or (s < 1e-3 and cval >= val):
                break
            s *= 0.5
        else:
            raise InfeasibleMoments("dual ascent stalled")
        theta, val, p = cand, cval, cp
        if np.max(np.abs(theta)) > 1e7:
            raise InfeasibleMoments("discrete dual diverges; refine the grid")
    else:
        raise InfeasibleMoments(f"dual ascent did not converge in {max_iter} iterations")
    mean = p @ feat
    rho = p / w
    primal = float(np.sum(p * np.log(rho)))
    feas = float(np.max(np.abs(sq.T @ p - t)))
    gap = abs(float(theta @ (mean - goal))) + feas
    mu = (float(theta[0]), float(theta[1]), float(-theta[0] - theta[1]))
    return val, PrimalCertificate(float(val), primal, gap, feas, it, mu, grid.label)


@dataclass(frozen=True)
class TestDensityResult:
    """Wedge width, entropy and second moments (E x^2, E y^2, E z^2) vs target."""

    __test__ = False  # not a pytest class

    b: float
    entropy: float
    achieved_moments: tuple[float, float, float]
    epsilon_tilde: float
    target: tuple[float, float, float]
    b_residual: float


def _sinc2(b: float) -> float:
    return math.sin(2.0 * b) / (2.0 * b)


def solve_wedge_width(rhs: float, max_iter: int = 200, tol: float = 1e-14) -> float:
    """Root b in (0, pi/2] of sin(2b)/(2b) = rhs by bisection."""
    if not (0.0 <= rhs < 1.0):
        raise NoAdmissibleWidth(f"right-hand side {rhs} outside [0, 1)")
    lo, hi = 0.0, 0.5 * math.pi
    if abs(_sinc2(hi) - rhs) <= tol:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = _sinc2(mid) - rhs
        if abs(val) <= tol or hi - lo <= 1e-16:
            return mid
        if val > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def wedge_moments(epsilon_tilde: float, b: float, n: int = 24) -> tuple[float, float, float]:
    """E[x^2], E[y^2], E[z^2] of the uniform density on the four wedges.

    Integrates in x = cos(theta) over [-eps~, eps~] and phi over each wedge
    with Gauss-Legendre, using the chart x = cos(theta),
    y = sin(theta) sin(phi), z = sin(theta) cos(phi).
    """
    g, wg = np.polynomial.legendre.leggauss(n)
    x = epsilon_tilde * g
    wx = epsilon_tilde * wg
    totals = np.zeros(4)
    for a, c in ((0.0, b), (math.pi - b, math.pi), (math.pi, math.pi + b), (2.0 * math.pi - b, 2.0 * math.pi)):
        phi = 0.5 * (a + c) + 0.5 * (c - a) * g
        wphi = 0.5 * (c - a) * wg
        xx, pp = np.meshgrid(x, phi, indexing="ij")
        ww = np.outer(wx, wphi)
        s2 = 1.0 - xx**2
        totals += [ww.sum(), (ww * xx**2).sum(), (ww * s2 * np.sin(pp) ** 2).sum(), (ww * s2 * np.cos(pp) ** 2).sum()]
    area = totals[0]
    return (totals[1] / area, totals[2] / area, totals[3] / area)


def construct_test_density(epsilon_sq_over3: float, lambda2: float) -> TestDensityResult:
    """Wedge density for lambda1 + 1/3 = epsilon_sq_over3 and the given lambda2.

    The density equals 1/(8 b eps~) on four wedges of half-width b around
    phi = 0 and phi = pi with |x| <= eps~, where eps~^2 = 3 (lambda1 + 1/3).
    """
    eps = float(epsilon_sq_over3)
    if not (0.0 < eps <= THIRD):
        raise NoAdmissibleWidth("need 0 < lambda1 + 1/3 <= 1/3")
    et = math.sqrt(3.0 * eps)
    delta = float(lambda2) + THIRD
    rhs = 1.0 - 2.0 * delta / (1.0 - eps)
    b = solve_wedge_width(rhs)
    target = (eps, delta, 1.0 - eps - delta)
    achieved = wedge_moments(et, b)
    return TestDensityResult(
        b=b,
        entropy=-math.log(8.0 * b * et),
        achieved_moments=achieved,
        epsilon_tilde=et,
        target=target,
        b_residual=abs(_sinc2(b) - rhs),
    )
