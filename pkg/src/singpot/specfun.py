"""Exponentially scaled modified Bessel function I0 and derived constants.

Everything is computed in the scaled form exp(-x) I0(x), which never
overflows and is all the potential calculations need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

CROSSOVER = 20.0
SERIES_TERMS = 40
ASYMPTOTIC_TERMS = 30

SERIES = "series"
ASYMPTOTIC = "asymptotic"

LIMIT_HALF = 1.0 / math.sqrt(2.0)
LIMIT_QUARTER = math.sqrt(2.0)

GRAD_LOWER_PREFACTOR = math.sqrt(3.0) / (9.0 * math.sqrt(2.0 * math.pi) * math.e)
GRAD_UPPER_PREFACTOR = math.sqrt(6.0 * math.pi) * math.e


def _asymptotic_coefficients(n: int) -> np.ndarray:
    # a_k = ((2k-1)!!)^2 / (k! 8^k)
    coef = np.empty(n)
    coef[0] = 1.0
    for k in range(1, n):
        coef[k] = coef[k - 1] * (2 * k - 1) ** 2 / (8.0 * k)
    return coef


_ASYM_COEF = _asymptotic_coefficients(ASYMPTOTIC_TERMS)


def _check(xi) -> np.ndarray:
    x = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("argument must be finite")
    if np.any(x < 0):
        raise ValueError("argument must be non-negative")
    return x


def i0_scaled_series(xi, terms: int = SERIES_TERMS) -> np.ndarray:
    """Power series sum (x/2)^(2m)/(m!)^2 times exp(-x), Kahan-summed."""
    x = np.asarray(xi, dtype=float)
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    carry = np.zeros_like(x)
    for m in range(1, terms):
        term = term * q / (m * m)
        y = term - carry
        t = total + y
        carry = (t - total) - y
        total = t
    return total * np.exp(-x)


def i0_scaled_asymptotic(xi, terms: int = ASYMPTOTIC_TERMS) -> np.ndarray:
    """Large-argument expansion (2 pi x)^(-1/2) sum a_k x^(-k)."""
    x = np.asarray(xi, dtype=float)
    inv = 1.0 / x
    coef = _ASYM_COEF[:terms]
    # Horner from the smallest term upward
    acc = np.zeros_like(x)
    for c in coef[::-1]:
        acc = acc * inv + c
    return acc / np.sqrt(2.0 * math.pi * x)


def i0_scaled(xi) -> np.ndarray:
    """Vectorized exp(-x) I0(x) for x >= 0."""
    x = _check(xi)
    out = np.empty_like(x)
    small = x <= CROSSOVER
    if np.any(small):
        out[small] = i0_scaled_series(x[small])
    if not np.all(small):
        out[~small] = i0_scaled_asymptotic(x[~small])
    return out


def bessel_i0_scaled(xi: float) -> float:
    """exp(-xi) I0(xi) for a single non-negative xi."""
    return float(i0_scaled(np.array([xi], dtype=float))[0])


@dataclass(frozen=True)
class BesselEval:
    xi: float
    scaled_value: float
    method: str


def evaluate_i0_scaled(xi: float) -> BesselEval:
    value = bessel_i0_scaled(xi)
    return BesselEval(float(xi), value, SERIES if xi <= CROSSOVER else ASYMPTOTIC)


def ratio_half(xi):
    """exp(-x) I0(x) / (exp(-x/2) I0(x/2)); tends to 1/sqrt(2)."""
    x = _check(xi)
    r = i0_scaled(x) / i0_scaled(0.5 * x)
    return float(r) if r.ndim == 0 else r


def ratio_quarter(xi):
    """exp(-x/4) I0(x/4) / (exp(-x/2) I0(x/2)); tends to sqrt(2)."""
    x = _check(xi)
    r = i0_scaled(0.25 * x) / i0_scaled(0.5 * x)
    return float(r) if r.ndim == 0 else r


@dataclass(frozen=True)
class BlowupConstants:
    """Constants of the gradient blow-up band, with where the extrema sit.

    ``inf_at``/``sup_at`` are ``math.inf`` when the extremum is only reached
    in the large-argument limit.
    """

    c_grad_lower: float
    c_grad_upper: float
    inf_ratio: float
    sup_ratio: float
    inf_at: float
    sup_at: float
    inf_scan_monotone: bool
    sup_scan_monotone: bool

    @property
    def inf_attained(self) -> bool:
        return math.isfinite(self.inf_at)

    @property
    def sup_attained(self) -> bool:
        return math.isfinite(self.sup_at)


def _extremum(func, limit: float, sign: float, n_scan: int, xi_max: float):
    """Minimize sign*func over [0, xi_max] plus the xi -> inf limit."""
    grid = np.concatenate([[0.0], np.logspace(-6, math.log10(xi_max), n_scan - 1)])
    values = sign * func(grid)
    k = int(np.argmin(values))
    diffs = np.diff(values)
    monotone = bool(np.all(diffs <= 0.0))
    best_x, best_v = float(grid[k]), float(values[k])
    if 0 < k < len(grid) - 1:
        res = optimize.minimize_scalar(
            lambda t: sign * float(func(t)),
            bracket=(grid[k - 1], grid[k], grid[k + 1]),
            method="golden",
            tol=1e-12,
        )
        if res.fun <= best_v:
            best_x, best_v = float(res.x), float(res.fun)
    if sign * limit < best_v:
        return limit, math.inf, monotone
    return sign * best_v, best_x, monotone


def compute_constants(n_scan: int = 2048, xi_max: float = 1e4) -> BlowupConstants:
    inf_ratio, inf_at, inf_mono = _extremum(ratio_half, LIMIT_HALF, 1.0, n_scan, xi_max)
    sup_ratio, sup_at, sup_mono = _extremum(ratio_quarter, LIMIT_QUARTER, -1.0, n_scan, xi_max)
    return BlowupConstants(
        c_grad_lower=GRAD_LOWER_PREFACTOR * inf_ratio,
        c_grad_upper=GRAD_UPPER_PREFACTOR * sup_ratio,
        inf_ratio=inf_ratio,
        sup_ratio=sup_ratio,
        inf_at=inf_at,
        sup_at=sup_at,
        inf_scan_monotone=inf_mono,
        sup_scan_monotone=sup_mono,
    )
