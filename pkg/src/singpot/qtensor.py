"""Q-tensors: construction, spectral decomposition and physicality.

A Q-tensor is a symmetric traceless 3x3 matrix. It is physical when all of
its eigenvalues lie strictly inside (-1/3, 2/3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

THIRD = 1.0 / 3.0
DEFAULT_MARGIN_TOL = 1e-12

INTERIOR = "interior"
BOUNDARY = "boundary"
UNPHYSICAL = "unphysical"


class NonInteriorError(ValueError):
    """Raised when an operation needs a strictly physical Q-tensor."""


@dataclass(frozen=True)
class QTensor:
    """Symmetric traceless 3x3 matrix.

    The constructor symmetrizes and removes the trace instead of rejecting
    slightly inconsistent input (e.g. parsed from text).
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"Q-tensor must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("Q-tensor entries must be finite")
        m = 0.5 * (m + m.T)
        m = m - (np.trace(m) / 3.0) * np.eye(3)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_upper(cls, values: Sequence[float]) -> "QTensor":
        """Build from the upper triangle row (q11, q12, q13, q22, q23, q33)."""
        if len(values) != 6:
            raise ValueError("expected 6 components q11,q12,q13,q22,q23,q33")
        q11, q12, q13, q22, q23, q33 = (float(v) for v in values)
        return cls(np.array([[q11, q12, q13], [q12, q22, q23], [q13, q23, q33]]))

    @classmethod
    def from_eigenvalues(cls, lambda1: float, lambda2: float) -> "QTensor":
        """Diagonal tensor with lambda3 = -lambda1 - lambda2 in the identity frame."""
        return cls(np.diag([lambda1, lambda2, -lambda1 - lambda2]))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "QTensor":
        return cls(np.diag([float(v) for v in values]))

    def upper(self) -> tuple[float, ...]:
        m = self.entries
        return (m[0, 0], m[0, 1], m[0, 2], m[1, 1], m[1, 2], m[2, 2])

    def rotated(self, rotation: np.ndarray) -> "QTensor":
        r = np.asarray(rotation, dtype=float)
        return QTensor(r @ self.entries @ r.T)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))

    def __add__(self, other: "QTensor") -> "QTensor":
        return QTensor(self.entries + other.entries)

    def __sub__(self, other: "QTensor") -> "QTensor":
        return QTensor(self.entries - other.entries)

    def __mul__(self, scalar: float) -> "QTensor":
        return QTensor(float(scalar) * self.entries)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues and matching orthonormal frame (column i <-> lambda[i])."""

    eigenvalues: tuple[float, float, float]
    frame: np.ndarray = field(repr=False)

    @property
    def epsilon(self) -> float:
        return self.eigenvalues[0] + THIRD

    @property
    def delta(self) -> float:
        return self.eigenvalues[1] + THIRD

    def recompose(self, values: Sequence[float] | None = None) -> np.ndarray:
        """frame . diag(values) . frame^T (defaults to the eigenvalues)."""
        d = self.eigenvalues if values is None else values
        return self.frame @ np.diag(d) @ self.frame.T


@dataclass(frozen=True)
class PhysicalityReport:
    classification: str
    epsilon: float
    delta: float

    @property
    def interior(self) -> bool:
        return self.classification == INTERIOR


def _sorted_eigenvalues(a: np.ndarray) -> np.ndarray:
    """Closed-form eigenvalues of a symmetric 3x3 matrix, ascending."""
    q = np.trace(a) / 3.0
    b = a - q * np.eye(3)
    p2 = float(np.sum(b * b)) / 6.0
    if p2 == 0.0:
        return np.array([q, q, q])
    p = math.sqrt(p2)
    r = np.linalg.det(b / p) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    top = q + 2.0 * p * math.cos(phi)
    bottom = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    middle = 3.0 * q - top - bottom
    lam = np.array([bottom, middle, top])
    return np.sort(_polish(a, lam))


def _polish(a: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # one Newton step on det(A - x I), kept only where it lowers the residual
    c1 = np.trace(a)
    c2 = 0.5 * (c1 * c1 - np.trace(a @ a))
    c3 = np.linalg.det(a)
    out = lam.copy()
    for i, x in enumerate(lam):
        p = -x**3 + c1 * x**2 - c2 * x + c3
        dp = -3.0 * x**2 + 2.0 * c1 * x - c2
        if dp == 0.0:
            continue
        y = x - p / dp
        py = -y**3 + c1 * y**2 - c2 * y + c3
        if abs(py) < abs(p):
            out[i] = y
    return out


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _isolated_eigenvector(a: np.ndarray, lam: float) -> np.ndarray:
    m = a - lam * np.eye(3)
    candidates = [np.cross(m[0], m[1]), np.cross(m[0], m[2]), np.cross(m[1], m[2])]
    best = max(candidates, key=lambda c: float(c @ c))
    return best / np.linalg.norm(best)


def _complement_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of v's orthogonal complement by Gram-Schmidt on x, y, z."""
    # the projected axes carry squared norms summing to 2 (then 1 after the
    # first pick), so these thresholds are always met by some axis
    basis: list[np.ndarray] = []
    for threshold in (0.5, 0.25):
        for axis in np.eye(3):
            u = axis - (axis @ v) * v
            for w in basis:
                u = u - (u @ w) * w
            n2 = float(u @ u)
            if n2 >= threshold:
                basis.append(u / math.sqrt(n2))
                break
    return np.column_stack(basis)


def decompose(q: QTensor | np.ndarray) -> Spectrum:
    """Sorted eigenvalues with a deterministic orthonormal frame."""
    a = q.entries if isinstance(q, QTensor) else np.asarray(q, dtype=float)
    lam = _sorted_eigenvalues(a)
    scale = max(1.0, float(np.max(np.abs(lam))))
    gap_low, gap_high = lam[1] - lam[0], lam[2] - lam[1]
    if max(gap_low, gap_high) <= 1e-14 * scale:
        mean = float(np.mean(lam))
        return Spectrum((mean, mean, mean), np.eye(3))

    # eigenvector of the best separated extreme eigenvalue first
    iso = 0 if gap_low >= gap_high else 2
    v_iso = _canonical_sign(_isolated_eigenvector(a, lam[iso]))
    basis = _complement_basis(v_iso)
    sub = basis.T @ a @ basis
    theta = 0.5 * math.atan2(2.0 * sub[0, 1], sub[0, 0] - sub[1, 1])
    c, s = math.cos(theta), math.sin(theta)
    w_big = basis @ np.array([c, s])
    w_small = basis @ np.array([-s, c])
    pair = [_canonical_sign(w_small), _canonical_sign(w_big)]
    if iso == 0:
        frame = np.column_stack([v_iso, pair[0], pair[1]])
    else:
        frame = np.column_stack([pair[0], pair[1], v_iso])
    lam = np.array([frame[:, i] @ a @ frame[:, i] for i in range(3)])
    order = np.argsort(lam, kind="stable")
    lam, frame = lam[order], frame[:, order]
    lam = lam - np.mean(lam) + np.trace(a) / 3.0
    return Spectrum((float(lam[0]), float(lam[1]), float(lam[2])), frame)


def classify(q: QTensor, margin_tol: float = DEFAULT_MARGIN_TOL) -> PhysicalityReport:
    lam = decompose(q).eigenvalues
    eps, delta = lam[0] + THIRD, lam[1] + THIRD
    upper_margin = 2.0 * THIRD - lam[2]
    if eps > margin_tol and upper_margin > margin_tol:
        kind = INTERIOR
    elif eps >= -margin_tol and upper_margin >= -margin_tol:
        kind = BOUNDARY
    else:
        kind = UNPHYSICAL
    return PhysicalityReport(kind, eps, delta)


def boundary_projection(q: QTensor) -> tuple[QTensor, float]:
    """Nearest point on the physical boundary and the distance to it."""
    sp = decompose(q)
    l1, l2, l3 = sp.eigenvalues
    eps = l1 + THIRD
    if classify(q).classification != INTERIOR or l1 >= 0.0:
        raise NonInteriorError("projection needs an interior Q-tensor with lambda1 < 0")
    projected = sp.recompose((-THIRD, l2 + 0.5 * eps, l3 + 0.5 * eps))
    return QTensor(projected), math.sqrt(6.0) / 2.0 * eps


def sorted_triple(lambda1: float, lambda2: float) -> tuple[float, float, float]:
    lam = sorted((float(lambda1), float(lambda2), -float(lambda1) - float(lambda2)))
    return (lam[0], lam[1], lam[2])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation from a QR factorization."""
    z = rng.standard_normal((3, 3))
    qmat, r = np.linalg.qr(z)
    qmat = qmat * np.sign(np.diag(r))
    if np.linalg.det(qmat) < 0:
        qmat[:, 0] = -qmat[:, 0]
    return qmat
