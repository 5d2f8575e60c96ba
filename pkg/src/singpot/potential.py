"""The singular bulk potential, its regularized form and its gradient.

f(Q) is the minimal entropy of an antipodally symmetric density on the
sphere with second moment Q + I/3. It is evaluated through the dual
formula f = -ln Z(mu) + sum_i mu_i (lambda_i + 1/3) with the multipliers
from the dual solver, written relative to max(mu) so that no large
cancelling terms appear near the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dualsolver
from .moments import Multipliers
from .qtensor import THIRD, INTERIOR, QTensor, Spectrum, classify, decompose

LOG_4PI = math.log(4.0 * math.pi)
SQRT_3_2 = math.sqrt(1.5)
SQRT_1_2 = math.sqrt(0.5)


@dataclass(frozen=True)
class PotentialValue:
    """Potential values at one Q; infinite (tagged) outside the interior."""

    f: float
    g: float
    psi_b: float
    alpha: float
    classification: str
    eigenvalues: tuple[float, float, float]
    mu: Multipliers | None = None
    solve: dualsolver.SolveResult | None = field(default=None, repr=False, compare=False)
    spectrum: Spectrum | None = field(default=None, repr=False, compare=False)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.f)


@dataclass(frozen=True)
class GradientValue:
    radial: float
    tangential: float
    full: QTensor
    norm: float
    mu: Multipliers

    @property
    def ratio(self) -> float:
        """|grad f| / |radial component|, between 1 and 2."""
        return self.norm / abs(self.radial) if self.radial != 0.0 else math.nan


def _as_qtensor(q) -> QTensor:
    return q if isinstance(q, QTensor) else QTensor(np.asarray(q, dtype=float))


def dual_value(lam, result: dualsolver.SolveResult) -> float:
    """-ln Z + mu . (lambda + 1/3) = -ln int exp(-nu1 x^2 - nu2 y^2) dS - eps nu1 - delta nu2."""
    nu = result.nu
    eps, delta = float(lam[0]) + THIRD, float(lam[1]) + THIRD
    return -result.log_z_reduced - eps * nu.nu1 - delta * nu.nu2


def evaluate_eigenvalues(lambda1: float, lambda2: float, alpha: float = 0.0, **solver_kw) -> PotentialValue:
    return evaluate(QTensor.from_eigenvalues(lambda1, lambda2), alpha, **solver_kw)


def evaluate(q, alpha: float = 0.0, **solver_kw) -> PotentialValue:
    """f, the regularized g = f + (ln eps + ln delta)/2 and psi_B = f - alpha |Q|^2."""
    if alpha < 0.0 or not math.isfinite(alpha):
        raise ValueError("alpha must be finite and non-negative")
    q = _as_qtensor(q)
    sp = decompose(q)
    report = classify(q)
    lam = sp.eigenvalues
    if report.classification != INTERIOR:
        return PotentialValue(math.inf, math.inf, math.inf, alpha, report.classification, lam, spectrum=sp)
    res = dualsolver.solve_multipliers(lam, **solver_kw)
    f = dual_value(lam, res)
    g = f + 0.5 * math.log(lam[0] + THIRD) + 0.5 * math.log(lam[1] + THIRD)
    psi = f - alpha * q.frobenius() ** 2
    return PotentialValue(f, g, psi, alpha, report.classification, lam, res.mu, res, sp)


def gradient_from(value: PotentialValue) -> GradientValue:
    if not value.finite or value.mu is None:
        raise dualsolver.NonPhysicalInput("gradient needs an interior Q-tensor")
    mu1, mu2, mu3 = value.mu.mu
    full = QTensor(value.spectrum.recompose((mu1, mu2, mu3)))
    radial = -SQRT_3_2 * mu1
    tangential = SQRT_1_2 * (mu1 + 2.0 * mu2)
    return GradientValue(radial, tangential, full, math.sqrt(mu1 * mu1 + mu2 * mu2 + mu3 * mu3), value.mu)


def gradient(q, **solver_kw) -> GradientValue:
    """Analytic gradient frame . diag(mu) . frame^T with its radial/tangential split."""
    return gradient_from(evaluate(q, **solver_kw))


def bulk_polynomial(q, a: float, b: float, c: float) -> float:
    """(a/2) tr Q^2 - (b/3) tr Q^3 + (c/4) (tr Q^2)^2."""
    m = _as_qtensor(q).entries
    tr2 = float(np.trace(m @ m))
    tr3 = float(np.trace(m @ m @ m))
    return 0.5 * a * tr2 - b * tr3 / 3.0 + 0.25 * c * tr2 * tr2


def eigenframe_directions(spectrum: Spectrum) -> list[np.ndarray]:
    """The five mutually orthogonal perturbation directions in the eigenframe.

    Radial (-1, 1/2, 1/2), tangential (0, 1, -1) and the three off-diagonal
    shears (12), (13), (23).
    """
    r = spectrum.frame
    local = [np.diag([-1.0, 0.5, 0.5]), np.diag([0.0, 1.0, -1.0])]
    for i, j in ((0, 1), (0, 2), (1, 2)):
        e = np.zeros((3, 3))
        e[i, j] = e[j, i] = 1.0
        local.append(e)
    return [r @ d @ r.T for d in local]
