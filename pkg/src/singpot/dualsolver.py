"""Inversion of the moment map by damped Newton iteration.

Given sorted physical eigenvalues lambda, find multipliers mu (summing to
zero) whose Boltzmann density has second moments lambda + 1/3. The unknowns
are the gaps nu = (mu3 - mu1, mu3 - mu2). The Newton direction J^{-1} r coincides
with the Newton direction of the strictly convex dual objective
ln Z(mu) - mu . (lambda + 1/3), so the iteration is globally well posed; an
Armijo backtracking on the relative moment mismatch keeps aggressive steps
from overshooting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .moments import MomentState, Multipliers, NuCoords, moment_state_nu

THIRD = 1.0 / 3.0
DEFAULT_TOL = 1e-11
DEFAULT_REL_TOL = 1e-9
DEFAULT_MAX_ITER = 100
MAX_HALVINGS = 30
ARMIJO_C = 1e-4
CONDITION_LIMIT = 1e14
MIN_EPSILON = 1e-8
SEED_EPSILON = 0.05
SEED_C = 0.5  # geometric mean of the sandwich constants 8/pi^5 and pi^5/32


class SolverError(RuntimeError):
    """Base class; ``path_index`` is set by continuation sweeps."""

    path_index: int | None = None


class NonPhysicalInput(SolverError, ValueError):
    """Target eigenvalues are not strictly inside the physical triangle."""


class DegenerateJacobian(SolverError):
    """Moment Jacobian is numerically singular (near-boundary breakdown)."""


class MaxIterations(SolverError):
    """Iteration budget exhausted; ``result`` holds the best iterate."""

    def __init__(self, message: str, result: "SolveResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class SolveResult:
    mu: Multipliers
    residual: float
    iterations: int
    condition_estimate: float
    relative_residual: float = math.nan
    converged: bool = True
    state: MomentState | None = field(default=None, repr=False, compare=False)

    @property
    def nu(self) -> NuCoords:
        return self.mu.nu

    @property
    def log_z_reduced(self) -> float:
        """ln of int exp(-nu1 x^2 - nu2 y^2) dS, i.e. ln Z - mu3."""
        return self.state.log_z if self.state is not None else math.nan

    @property
    def log_z(self) -> float:
        return self.log_z_reduced + self.mu.mu[2]


def _validate(lam: Sequence[float], min_epsilon: float) -> np.ndarray:
    lam = np.asarray([float(v) for v in lam])
    if lam.shape != (3,) or not np.all(np.isfinite(lam)):
        raise NonPhysicalInput("eigenvalues must be three finite reals")
    if abs(lam.sum()) > 1e-12:
        raise NonPhysicalInput(f"eigenvalues must sum to zero, got {lam.sum():.3e}")
    if np.any(np.diff(lam) < -1e-13):
        raise NonPhysicalInput("eigenvalues must be sorted ascending")
    lam = np.sort(lam)
    eps = lam[0] + THIRD
    if not (eps > 0.0 and lam[2] < 2.0 * THIRD):
        raise NonPhysicalInput(f"eigenvalues {tuple(float(v) for v in lam)} are not strictly physical")
    if eps < min_epsilon * (1.0 - 1e-6):
        raise DegenerateJacobian(
            f"epsilon = {eps:.3e} is below the solver limit {min_epsilon:.1e}; use the asymptotic form"
        )
    return lam


def initial_guess(lam: Sequence[float]) -> Multipliers:
    """Starting multipliers from the 1/epsilon, 1/delta scaling of nu."""
    eps = float(lam[0]) + THIRD
    delta = float(lam[1]) + THIRD
    if eps >= SEED_EPSILON or eps <= 0.0 or delta <= 0.0:
        return Multipliers((0.0, 0.0, 0.0))
    nu1, nu2 = SEED_C / eps, SEED_C / delta
    return Multipliers.from_pair((-2.0 * nu1 + nu2) / 3.0, (nu1 - 2.0 * nu2) / 3.0)


def _residuals(state: MomentState, target: np.ndarray) -> tuple[np.ndarray, float, float]:
    r = np.asarray(state.m) - target
    return r, float(np.max(np.abs(r))), float(np.max(np.abs(r) / target))


def equilibrated_condition(state: MomentState) -> float:
    """Condition number of the correlation matrix of (x1^2, x2^2).

    The Jacobian is that covariance block times a fixed well-conditioned
    matrix, so it is singular exactly when the block is; diagonal scaling
    removes the trivial epsilon^2 versus O(1) disparity of its entries.
    """
    c = state.covariance[:2, :2]
    d = np.sqrt(np.diag(c))
    if not np.all(np.isfinite(c)) or np.any(d <= 0.0):
        return math.inf
    return float(np.linalg.cond(c / np.outer(d, d)))


def _start_nu(mu0) -> np.ndarray:
    if isinstance(mu0, SolveResult):
        mu0 = mu0.mu
    if isinstance(mu0, NuCoords):
        return np.array([mu0.nu1, mu0.nu2])
    if not isinstance(mu0, Multipliers):
        mu0 = Multipliers(tuple(mu0))
    nu = mu0.nu
    return np.array([nu.nu1, nu.nu2])


def _symmetrize(nu: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Project onto nu1 >= nu2 >= 0, the ordering of the exact solution.

    Equal eigenvalues pin the matching multipliers together exactly; in
    between, rounding near a coincidence cannot flip the order.
    """
    n2 = 0.0 if lam[1] == lam[2] else max(float(nu[1]), 0.0)
    n1 = n2 if lam[0] == lam[1] else max(float(nu[0]), n2)
    return np.array([n1, n2])


def solve_multipliers(
    lam: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    rel_tol: float = DEFAULT_REL_TOL,
    mu0=None,
    min_epsilon: float = MIN_EPSILON,
) -> SolveResult:
    """Multipliers reproducing the moments lambda + 1/3.

    Converged when the absolute sup-norm mismatch is at most ``tol`` and the
    mismatch relative to each target moment is at most ``rel_tol``.

    The iteration runs in nu = (mu3 - mu1, mu3 - mu2), an affine change of
    the unknowns (mu1, mu2) that leaves Newton steps unchanged but keeps
    nu2 resolvable when mu2 and mu3 are both of order 1/epsilon.
    """
    lam = _validate(lam, min_epsilon)
    target = lam + THIRD

    def evaluate(nu):
        nu = _symmetrize(nu, lam)
        st = moment_state_nu(nu[0], nu[1])
        return (st,) + _residuals(st, target)

    nu = _symmetrize(_start_nu(initial_guess(lam)), lam)
    state, r, res, rel = evaluate(nu)
    if mu0 is not None:
        # keep the warm start only if it beats the generic seed
        warm = _symmetrize(_start_nu(mu0), lam)
        w_state, w_r, w_res, w_rel = evaluate(warm)
        if w_rel < rel:
            nu, state, r, res, rel = warm, w_state, w_r, w_res, w_rel

    cond = equilibrated_condition(state)
    it = 0
    while not (res <= tol and rel <= rel_tol):
        if it >= max_iter:
            best = _result(nu, res, it, cond, rel, False, state)
            raise MaxIterations(f"no convergence in {max_iter} iterations (residual {res:.3e})", best)
        cond = equilibrated_condition(state)
        if cond > CONDITION_LIMIT:
            raise DegenerateJacobian(f"moment Jacobian condition {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")
        step = -np.linalg.solve(state.jacobian_nu, r[:2])
        accepted = None
        s = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = _symmetrize(nu + s * step, lam)
            c_state, cr, cres, crel = evaluate(cand)
            if np.all(np.isfinite(cr)) and crel <= (1.0 - ARMIJO_C * s) * rel:
                accepted = (cand, c_state, cr, cres, crel)
                break
            s *= 0.5
        it += 1
        if accepted is None:
            if res <= 10.0 * tol and rel <= 10.0 * rel_tol:
                # at the quadrature noise floor; no further descent possible
                break
            best = _result(nu, res, it, cond, rel, False, state)
            raise MaxIterations(f"line search stalled at residual {res:.3e}", best)
        nu, state, r, res, rel = accepted

    cond = equilibrated_condition(state)
    return _result(nu, res, it, cond, rel, True, state)


def _result(nu, res, it, cond, rel, converged, state) -> SolveResult:
    return SolveResult(Multipliers.from_nu(nu[0], nu[1]), res, it, cond, rel, converged, state)


def continuation_solve(
    lambda_path: Iterable[Sequence[float]],
    tol: float = DEFAULT_TOL,
    **kwargs,
) -> list[SolveResult]:
    """Solve along a path, warm-starting every point from its predecessor."""
    results: list[SolveResult] = []
    prev: SolveResult | None = None
    for i, lam in enumerate(lambda_path):
        try:
            res = solve_multipliers(lam, tol, mu0=prev, **kwargs)
        except SolverError as exc:
            exc.path_index = i
            exc.args = (f"path point {i} {tuple(lam)}: {exc.args[0]}",) + exc.args[1:]
            raise
        results.append(res)
        prev = res
    return results
