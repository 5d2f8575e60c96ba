import json
import math

import numpy as np
import pytest

from singpot import bounds, potential, tables
from singpot.tables import OutOfCoverage, TableError

THIRD = 1.0 / 3.0


def direct_f(eps, delta):
    return potential.evaluate_eigenvalues(eps - THIRD, delta - THIRD).f


def random_in_coverage(rng, eta, count):
    out = []
    while len(out) < count:
        eps = rng.uniform(eta, THIRD)
        delta = rng.uniform(eps, 0.5 * (1 - eps))
        out.append((eps, delta))
    return out


def test_small_build(table16):
    t = table16
    assert t.n_nodes == 136
    inside = tables.lattice_mask(16)
    assert inside.sum() == 136
    assert np.all(np.isfinite(t.values[inside])) and np.all(np.isnan(t.values[~inside]))
    assert t.solver_stats["nodes"] == 136
    assert t.solver_stats["max_residual"] <= 1e-10


def test_vertex_values(table16):
    # the isotropic corner
    assert table16.values[0, 15] == pytest.approx(-math.log(4 * math.pi) + math.log(THIRD), abs=1e-12)
    assert table16.values[0, 15] == pytest.approx(-3.6297, abs=1e-4)
    assert table16.node_margins(0, 15) == pytest.approx((THIRD, THIRD))
    assert table16.node_margins(0, 0) == pytest.approx((1e-3, 1e-3))
    assert table16.node_margins(15, 0) == pytest.approx((1e-3, 0.5 * (1 - 1e-3)))


def test_node_queries_exact(table16):
    for i, j in [(0, 0), (3, 7), (15, 0), (0, 15), (8, 7), (5, 0)]:
        eps, delta = table16.node_margins(i, j)
        g = table16.values[i, j]
        for method in tables.METHODS:
            assert tables.interpolate_g(table16, eps - THIRD, delta - THIRD, method) == pytest.approx(g, abs=1e-12)
        f = tables.interpolate_f(table16, eps - THIRD, delta - THIRD)
        assert f == pytest.approx(direct_f(eps, delta), abs=1e-12)


def test_stored_derivatives_match_finite_differences(table16):
    i, j = 4, 6
    eps, delta = table16.node_margins(i, j)
    h = 1e-5

    def g(e, d):
        return potential.evaluate_eigenvalues(e - THIRD, d - THIRD).g

    fd = [
        (g(eps + h, delta) - g(eps - h, delta)) / (2 * h),
        (g(eps, delta + h) - g(eps, delta - h)) / (2 * h),
        (g(eps + h, delta) - 2 * g(eps, delta) + g(eps - h, delta)) / h**2,
        (g(eps + h, delta + h) - g(eps + h, delta - h) - g(eps - h, delta + h) + g(eps - h, delta - h)) / (4 * h * h),
        (g(eps, delta + h) - 2 * g(eps, delta) + g(eps, delta - h)) / h**2,
    ]
    stored = table16.derivatives[:, i, j]
    assert np.allclose(stored[:2], fd[:2], rtol=1e-7)
    assert np.allclose(stored[2:], fd[2:], rtol=1e-3, atol=1e-3)


def test_rebuild_is_byte_identical(table16):
    again = tables.build_table(16, 1e-3)
    assert again == table16
    assert tables.table_to_json(again) == tables.table_to_json(table16)


def test_parallel_build_identical():
    serial = tables.build_table(8, 0.01)
    parallel = tables.build_table(8, 0.01, workers=2)
    assert tables.table_to_json(serial) == tables.table_to_json(parallel)


def test_json_round_trip(table16, tmp_path):
    path = tmp_path / "t.json"
    tables.save_table(table16, path)
    back = tables.load_table(path)
    assert back == table16
    doc = json.loads(path.read_text())
    assert doc["format"] == tables.FORMAT_NAME and doc["version"] == tables.FORMAT_VERSION
    assert doc["grid"]["n"] == 16 and len(doc["values"]) == 256
    assert set(doc["derivatives"]) == set(tables.DERIVATIVE_NAMES)
    assert doc["values"][15 * 16 + 15] is None


def test_csv_round_trip(table16):
    text = tables.table_to_csv(table16)
    assert text.splitlines()[1].split(",") == list(tables.CSV_COLUMNS)
    assert len(text.splitlines()) == 2 + 136 and text.endswith("\n")
    assert tables.table_from_csv(text) == table16


def test_bad_documents(table16):
    doc = tables.table_to_dict(table16)
    with pytest.raises(TableError):
        tables.table_from_dict({**doc, "version": 99})
    with pytest.raises(TableError):
        tables.table_from_dict({**doc, "format": "other"})
    with pytest.raises(TableError):
        tables.table_from_dict({**doc, "values": doc["values"][:-1]})
    broken = list(doc["values"])
    broken[0] = None
    with pytest.raises(TableError):
        tables.table_from_dict({**doc, "values": broken})
    with pytest.raises(TableError):
        tables.table_from_json("{not json")
    with pytest.raises(TableError):
        tables.table_from_csv("i,j\n")


def test_build_errors():
    with pytest.raises(TableError):
        tables.build_table(7)
    with pytest.raises(TableError):
        tables.build_table(16, 0.0)
    with pytest.raises(TableError):
        tables.build_table(16, 0.06)


def test_query_errors(table16):
    with pytest.raises(OutOfCoverage):
        tables.interpolate_f(table16, 1e-4 - THIRD, 0.1)
    with pytest.raises(TableError):
        tables.interpolate_f(table16, -0.4, 0.1)
    with pytest.raises(TableError):
        tables.interpolate_f(table16, 0.0, 0.0, method="spline")
    assert issubclass(OutOfCoverage, TableError)


def test_queries_are_permutation_invariant(table16):
    lam = (-0.25, 0.05, 0.2)
    ref = tables.interpolate_f(table16, lam[0], lam[1])
    for a, b in [(lam[1], lam[0]), (lam[2], lam[0]), (lam[1], lam[2])]:
        assert tables.interpolate_f(table16, a, b) == ref


def test_continuous_across_cells(table16):
    # either side of a cell edge, and across the hypotenuse
    eps, delta = table16.node_margins(4, 5)
    e2, _ = table16.node_margins(4, 6)
    for method in tables.METHODS:
        below = tables.interpolate_g(table16, eps - THIRD, delta - THIRD + 1e-12, method)
        mid = tables.interpolate_g(table16, 0.5 * (eps + e2) - THIRD, delta - THIRD + 1e-3, method)
        assert math.isfinite(below) and math.isfinite(mid)


def test_bilinear_accuracy(table64):
    table, _ = table64
    rng = np.random.default_rng(21)
    errs = [abs(tables.interpolate_f(table, e - THIRD, d - THIRD) - direct_f(e, d)) for e, d in random_in_coverage(rng, 1e-3, 60)]
    assert max(errs) <= 2e-4


def test_bicubic_accuracy(table64):
    table, _ = table64
    rng = np.random.default_rng(22)
    for e, d in random_in_coverage(rng, 1e-3, 60):
        f = direct_f(e, d)
        assert tables.interpolate_f(table, e - THIRD, d - THIRD, "bicubic") == pytest.approx(f, rel=1e-5, abs=1e-6)


def test_near_boundary_query_on_fine_collar():
    table = tables.build_table(12, 1e-6)
    eps, delta = 1e-6, 0.01
    f = tables.interpolate_f(table, eps - THIRD, delta - THIRD)
    l1, l2 = eps - THIRD, delta - THIRD
    assert math.isfinite(f)
    assert bounds.thm11_lower(l1, l2) <= f <= bounds.thm11_upper(l1, l2)
    assert f == pytest.approx(direct_f(eps, delta), abs=1e-2)
