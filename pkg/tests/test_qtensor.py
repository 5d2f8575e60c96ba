import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singpot.qtensor import (
    BOUNDARY,
    INTERIOR,
    UNPHYSICAL,
    NonInteriorError,
    QTensor,
    boundary_projection,
    classify,
    decompose,
    random_rotation,
)

THIRD = 1.0 / 3.0


def interior_lambdas():
    """Strictly physical sorted spectra, drawn through their margins."""
    return st.tuples(
        st.floats(1e-6, THIRD - 1e-6), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1)
    ).map(_margins_to_lambdas)


def _margins_to_lambdas(args):
    eps, frac, seed = args
    delta = eps + frac * ((1.0 - eps) / 2.0 - eps)
    return (eps - THIRD, delta - THIRD, 2.0 * THIRD - eps - delta), seed


def test_construction_recenters_and_symmetrizes():
    q = QTensor(np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    assert abs(np.trace(q.entries)) <= 1e-12
    assert np.array_equal(q.entries, q.entries.T)


def test_upper_row_roundtrip():
    vals = (0.1, 0.02, -0.03, -0.05, 0.01, -0.05)
    assert np.allclose(QTensor.from_upper(vals).upper(), vals, atol=1e-15)
    with pytest.raises(ValueError):
        QTensor.from_upper(vals[:5])


def test_rejects_bad_shapes_and_nan():
    with pytest.raises(ValueError):
        QTensor(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        QTensor(np.full((3, 3), np.nan))


def test_zero_matrix_gives_identity_frame():
    sp = decompose(QTensor(np.zeros((3, 3))))
    assert sp.eigenvalues == (0.0, 0.0, 0.0)
    assert np.array_equal(sp.frame, np.eye(3))


def test_diagonal_input_frame_is_a_permutation():
    e = 1e-3
    lam = (-THIRD + e, -THIRD + e, 2 * THIRD - 2 * e)
    sp = decompose(QTensor.diag(lam))
    assert np.allclose(sp.eigenvalues, sorted(lam), atol=1e-15)
    assert np.allclose(np.abs(sp.frame) @ np.ones(3), np.ones(3))
    assert set(np.round(np.abs(sp.frame).ravel(), 12)) <= {0.0, 1.0}


def test_rotated_spectrum_recovered():
    rng = np.random.default_rng(3)
    r = random_rotation(rng)
    sp = decompose(QTensor.diag((-0.2, 0.05, 0.15)).rotated(r))
    assert np.allclose(sp.eigenvalues, (-0.2, 0.05, 0.15), atol=1e-10)


def test_decompose_matches_lapack():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = rng.standard_normal((3, 3))
        q = QTensor(a)
        ref = np.linalg.eigvalsh(q.entries)
        assert np.allclose(decompose(q).eigenvalues, ref, atol=1e-13)


@settings(max_examples=200, deadline=None)
@given(interior_lambdas())
def test_reconstruction_and_orthonormality(args):
    lam, seed = args
    q = QTensor.diag(lam).rotated(random_rotation(np.random.default_rng(seed)))
    sp = decompose(q)
    assert abs(sum(sp.eigenvalues)) <= 1e-12
    assert list(sp.eigenvalues) == sorted(sp.eigenvalues)
    assert np.allclose(sp.frame.T @ sp.frame, np.eye(3), atol=1e-10)
    assert np.linalg.norm(sp.recompose() - q.entries) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(0.0, 1e-9), st.integers(0, 2**32 - 1))
def test_nearly_repeated_eigenvalues_stay_accurate(a, gap, seed):
    q = QTensor.diag((a, a + gap, -2 * a - gap)).rotated(random_rotation(np.random.default_rng(seed)))
    sp = decompose(q)
    assert np.linalg.norm(sp.recompose() - q.entries) <= 1e-10
    assert np.allclose(sp.frame.T @ sp.frame, np.eye(3), atol=1e-10)


def test_repeated_eigenvalue_frame_is_deterministic():
    q = QTensor.diag((0.1, 0.1, -0.2)).rotated(random_rotation(np.random.default_rng(9)))
    assert np.array_equal(decompose(q).frame, decompose(q).frame)


def test_classify_examples():
    rep = classify(QTensor(np.zeros((3, 3))))
    assert rep.classification == INTERIOR
    assert rep.epsilon == pytest.approx(THIRD) and rep.delta == pytest.approx(THIRD)
    assert classify(QTensor.diag((-THIRD, 1 / 6, 1 / 6))).classification == BOUNDARY
    assert classify(QTensor.diag((-0.4, 0.2, 0.2))).classification == UNPHYSICAL
    # the upper wall l3 = 2/3 counts too
    assert classify(QTensor.diag((-THIRD, -THIRD, 2 * THIRD))).classification == BOUNDARY


def test_margin_tolerance_is_configurable():
    q = QTensor.diag((-THIRD + 1e-9, 1 / 6, 1 / 6 - 1e-9))
    assert classify(q).classification == INTERIOR
    assert classify(q, margin_tol=1e-8).classification == BOUNDARY


def test_boundary_projection_example():
    qp, d = boundary_projection(QTensor.diag((-0.3, 0.1, 0.2)))
    assert np.allclose(np.diag(qp.entries), (-THIRD, 0.1 + 1 / 60, 0.2 + 1 / 60), atol=1e-14)
    assert d == pytest.approx(math.sqrt(6) / 2 / 30, rel=1e-14)


def test_boundary_projection_commutes_with_rotation():
    r = random_rotation(np.random.default_rng(4))
    q = QTensor.diag((-0.3, 0.1, 0.2))
    qp, _ = boundary_projection(q)
    qr, _ = boundary_projection(q.rotated(r))
    assert np.allclose(qr.entries, r @ qp.entries @ r.T, atol=1e-12)


def test_projection_lands_on_boundary():
    qp, _ = boundary_projection(QTensor.diag((-0.3, 0.1, 0.2)))
    assert decompose(qp).epsilon == pytest.approx(0.0, abs=1e-14)
    assert classify(qp).classification == BOUNDARY


@settings(max_examples=100, deadline=None)
@given(interior_lambdas())
def test_projection_distance_is_frobenius(args):
    lam, seed = args
    if lam[0] >= 0:
        return
    q = QTensor.diag(lam).rotated(random_rotation(np.random.default_rng(seed)))
    qp, d = boundary_projection(q)
    assert abs(d - (q - qp).frobenius()) <= 1e-10


def test_projection_rejects_non_interior():
    with pytest.raises(NonInteriorError):
        boundary_projection(QTensor.diag((-0.4, 0.2, 0.2)))
    with pytest.raises(NonInteriorError):
        boundary_projection(QTensor(np.zeros((3, 3))))
