"""Interpolation tables of the regularized potential g over the ordered sector.

Nodes live on a triangular lattice in the margin plane (eps, delta) with
eps = lambda1 + 1/3 and delta = lambda2 + 1/3. The ordered sector
lambda1 <= lambda2 <= lambda3 is the triangle with vertices

    A = (eta, eta)            uniaxial, next to the boundary
    B = (eta, (1 - eta)/2)    lambda2 = lambda3, next to the boundary
    C = (1/3, 1/3)            the isotropic point Q = 0

and node (i, j) sits at A + s (B - A) + t (C - A) with s = i/(n-1),
t = j/(n-1), i + j <= n - 1. Storing g instead of f keeps the logarithmic
blowup out of the interpolant; it is restored exactly at query time.

Every node also stores the exact first and second derivatives of g in
(eps, delta). They come for free from the solve: grad f = -nu and the
Hessian of f is the inverse covariance of (x^2, y^2). The bicubic method
uses them for Hermite interpolation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dualsolver
from .potential import dual_value
from .qtensor import THIRD

FORMAT_NAME = "singpot-g-table"
FORMAT_VERSION = 1
DEFAULT_ETA = 1e-3
MAX_ETA = 0.05
MIN_N = 8
COVERAGE_TOL = 1e-12
METHODS = ("bilinear", "bicubic")
DERIVATIVE_NAMES = ("g_eps", "g_delta", "g_eps_eps", "g_eps_delta", "g_delta_delta")
CSV_COLUMNS = ("i", "j", "s", "t", "epsilon", "delta", "lambda1", "lambda2", "g") + DERIVATIVE_NAMES


class TableError(ValueError):
    pass


class OutOfCoverage(TableError):
    """Query outside the tabulated part of the ordered sector."""


class NodeSolveError(RuntimeError):
    """Solver failure at a table node; carries the node coordinates."""

    def __init__(self, message: str, node: tuple[int, int], margins: tuple[float, float]):
        super().__init__(message)
        self.node = node
        self.margins = margins


def _vertices(eta: float) -> np.ndarray:
    return np.array([[eta, eta], [eta, 0.5 * (1.0 - eta)], [THIRD, THIRD]])


def lattice_mask(n: int) -> np.ndarray:
    i, j = np.indices((n, n))
    return i + j <= n - 1


def node_margins(n: int, eta: float, i: int, j: int) -> tuple[float, float]:
    a, b, c = _vertices(eta)
    s, t = i / (n - 1), j / (n - 1)
    p = a + s * (b - a) + t * (c - a)
    return float(p[0]), float(p[1])


@dataclass(frozen=True, eq=False)
class InterpTable:
    """g on the lattice; ``values[i, j]`` is NaN outside the triangle.

    ``derivatives[k]`` holds the k-th entry of DERIVATIVE_NAMES on the same
    layout.
    """

    n: int
    eta: float
    values: np.ndarray
    derivatives: np.ndarray
    tolerances: dict = field(default_factory=dict)
    solver_stats: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        d = np.asarray(self.derivatives, dtype=float)
        if v.shape != (self.n, self.n):
            raise TableError(f"values must be {self.n}x{self.n}, got {v.shape}")
        if d.shape != (len(DERIVATIVE_NAMES), self.n, self.n):
            raise TableError(f"derivatives must have shape {(len(DERIVATIVE_NAMES), self.n, self.n)}")
        inside = lattice_mask(self.n)
        if not (np.all(np.isfinite(v[inside])) and np.all(np.isfinite(d[:, inside]))):
            raise TableError("table contains non-finite entries inside the triangle")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "derivatives", d)

    @property
    def vertices(self) -> np.ndarray:
        return _vertices(self.eta)

    @property
    def n_nodes(self) -> int:
        return self.n * (self.n + 1) // 2

    def node_margins(self, i: int, j: int) -> tuple[float, float]:
        return node_margins(self.n, self.eta, i, j)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InterpTable):
            return NotImplemented
        return (
            self.n == other.n
            and self.eta == other.eta
            and self.version == other.version
            and self.tolerances == other.tolerances
            and self.solver_stats == other.solver_stats
            and np.array_equal(self.values, other.values, equal_nan=True)
            and np.array_equal(self.derivatives, other.derivatives, equal_nan=True)
        )


# building


def _lambdas(eps: float, delta: float) -> tuple[float, float, float]:
    l1, l2 = eps - THIRD, delta - THIRD
    return l1, l2, -l1 - l2


def node_jet(lam, res: dualsolver.SolveResult) -> tuple[float, ...]:
    """g and its derivatives in (eps, delta) from one solve."""
    eps, delta = lam[0] + THIRD, lam[1] + THIRD
    g = dual_value(lam, res) + 0.5 * math.log(eps) + 0.5 * math.log(delta)
    nu = res.nu
    hess = np.linalg.inv(res.state.covariance[:2, :2])
    return (
        g,
        -nu.nu1 + 0.5 / eps,
        -nu.nu2 + 0.5 / delta,
        float(hess[0, 0]) - 0.5 / eps**2,
        float(0.5 * (hess[0, 1] + hess[1, 0])),
        float(hess[1, 1]) - 0.5 / delta**2,
    )


def _build_row(args) -> tuple[np.ndarray, dict]:
    """One lattice row (fixed s), swept from the interior towards eps = eta."""
    n, eta, i, tol, rel_tol = args
    js = list(range(n - 1 - i, -1, -1))
    lams = [_lambdas(*node_margins(n, eta, i, j)) for j in js]
    try:
        results = dualsolver.continuation_solve(lams, tol, rel_tol=rel_tol)
    except dualsolver.SolverError as exc:
        j = js[exc.path_index or 0]
        m = node_margins(n, eta, i, j)
        raise NodeSolveError(f"solver failed at node ({i}, {j}) with margins {m}: {exc}", (i, j), m) from exc
    row = np.full((1 + len(DERIVATIVE_NAMES), n), math.nan)
    for j, lam, res in zip(js, lams, results):
        row[:, j] = node_jet(lam, res)
    stats = {
        "max_iterations": max(r.iterations for r in results),
        "max_residual": max(r.residual for r in results),
        "max_condition": max(r.condition_estimate for r in results),
    }
    return row, stats


def build_table(
    n: int,
    eta: float = DEFAULT_ETA,
    *,
    tol: float = dualsolver.DEFAULT_TOL,
    rel_tol: float = dualsolver.DEFAULT_REL_TOL,
    workers: int = 1,
) -> InterpTable:
    """Solve for g at every lattice node.

    Rows are independent continuation sweeps, so ``workers > 1`` spreads
    them over processes without changing a single bit of the output.
    """
    if int(n) != n or n < MIN_N:
        raise TableError(f"n must be an integer >= {MIN_N}")
    if not (0.0 < eta <= MAX_ETA):
        raise TableError(f"eta must lie in (0, {MAX_ETA}]")
    n = int(n)
    jobs = [(n, float(eta), i, tol, rel_tol) for i in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_build_row, jobs))
    else:
        rows = [_build_row(job) for job in jobs]
    data = np.stack([r for r, _ in rows], axis=1)  # (6, n, n)
    stats = {
        "nodes": n * (n + 1) // 2,
        "max_iterations": max(s["max_iterations"] for _, s in rows),
        "max_residual": max(s["max_residual"] for _, s in rows),
        "max_condition": max(s["max_condition"] for _, s in rows),
    }
    return InterpTable(n, float(eta), data[0], data[1:], {"tol": tol, "rel_tol": rel_tol}, stats)


# queries


def sector_margins(lambda1: float, lambda2: float) -> tuple[float, float]:
    """Sort (lambda1, lambda2, -lambda1-lambda2) and return (eps, delta)."""
    lam = sorted((float(lambda1), float(lambda2), -float(lambda1) - float(lambda2)))
    if not all(math.isfinite(v) for v in lam):
        raise TableError("eigenvalues must be finite")
    if not (lam[0] > -THIRD and lam[2] < 2.0 * THIRD):
        raise TableError(f"eigenvalues {tuple(lam)} are not strictly physical")
    return lam[0] + THIRD, lam[1] + THIRD


def lattice_coordinates(table: InterpTable, eps: float, delta: float) -> tuple[float, float]:
    """(u, v) = (n-1)(s, t) of a point in the margin plane."""
    # eps = eta + t (1/3 - eta), delta = eps + s (1 - 3 eta)/2
    t = (eps - table.eta) / (THIRD - table.eta)
    s = (delta - eps) / (0.5 * (1.0 - 3.0 * table.eta))
    scale = table.n - 1
    return s * scale, t * scale


def _check_coverage(table: InterpTable, u: float, v: float) -> tuple[float, float]:
    tol = COVERAGE_TOL * table.n
    top = table.n - 1
    if u < -tol or v < -tol or u + v > top + tol:
        raise OutOfCoverage(f"lattice point ({u:.6g}, {v:.6g}) lies outside the table")
    u = min(max(u, 0.0), top)
    v = min(max(v, 0.0), top - u)
    return u, v


def _cell(table: InterpTable, u: float, v: float) -> tuple[int, int, float, float]:
    top = table.n - 1
    i0 = max(min(int(math.floor(u)), top - 1), 0)
    j0 = max(min(int(math.floor(v)), top - 1 - i0), 0)
    return i0, j0, u - i0, v - j0


def _bilinear(table: InterpTable, u: float, v: float) -> float:
    i0, j0, fu, fv = _cell(table, u, v)
    g = table.values
    if i0 + j0 + 2 <= table.n - 1:
        return float(
            (1 - fu) * (1 - fv) * g[i0, j0]
            + fu * (1 - fv) * g[i0 + 1, j0]
            + (1 - fu) * fv * g[i0, j0 + 1]
            + fu * fv * g[i0 + 1, j0 + 1]
        )
    # cell cut by the hypotenuse: linear on its lower-left triangle
    return float((1 - fu - fv) * g[i0, j0] + fu * g[i0 + 1, j0] + fv * g[i0, j0 + 1])


def _lattice_jet(table: InterpTable, i: int, j: int) -> tuple[float, float, float, float]:
    """(g, g_u, g_v, g_uv) at a node, continued past the lambda2 = lambda3 edge.

    f is symmetric under lambda2 <-> lambda3, i.e. under the reflection
    R(eps, delta) = (eps, 1 - eps - delta), which maps lattice node (i, j)
    to (2(n-1) - i - 2j, j). Outside the triangle the ghost is
    f(R x) + (ln eps + ln delta)/2 with derivatives from the chain rule.
    """
    top = table.n - 1
    if i + j <= top:
        g = table.values[i, j]
        ge, gd, gee, ged, gdd = table.derivatives[:, i, j]
    else:
        im = 2 * top - i - 2 * j
        if im < 0:
            raise IndexError("no ghost node")
        eps, dm = table.node_margins(im, j)
        dq = 1.0 - eps - dm
        pe, pd, pee, ped, pdd = table.derivatives[:, im, j]
        # derivatives of f at the mirror node
        fe, fd = pe - 0.5 / eps, pd - 0.5 / dm
        fed, fdd = ped, pdd + 0.5 / dm**2
        # f o R with R = [[1, 0], [-1, -1]]
        g = table.values[im, j] + 0.5 * math.log(dq) - 0.5 * math.log(dm)
        ge = fe - fd + 0.5 / eps
        gd = -fd + 0.5 / dq
        gee = pee - 2.0 * fed + fdd
        ged = fdd - fed
        gdd = fdd - 0.5 / dq**2
    # u moves delta only; v moves eps and delta together
    su = 0.5 * (1.0 - 3.0 * table.eta) / top
    sv = (THIRD - table.eta) / top
    return float(g), float(su * gd), float(sv * (ge + gd)), float(su * sv * (ged + gdd))


def _hermite(x: float) -> tuple[tuple[float, float], tuple[float, float]]:
    x2, x3 = x * x, x * x * x
    return (2 * x3 - 3 * x2 + 1, -2 * x3 + 3 * x2), (x3 - 2 * x2 + x, x3 - x2)


def _bicubic(table: InterpTable, u: float, v: float) -> float:
    i0, j0, fu, fv = _cell(table, u, v)
    try:
        corners = [[_lattice_jet(table, i0 + a, j0 + b) for b in (0, 1)] for a in (0, 1)]
    except IndexError:
        # only the corner cell at Q = 0 lacks a mirror; g is flat there
        return _bilinear(table, u, v)
    hu, ku = _hermite(fu)
    hv, kv = _hermite(fv)
    total = 0.0
    for a in (0, 1):
        for b in (0, 1):
            g, gu, gv, guv = corners[a][b]
            total += g * hu[a] * hv[b] + gu * ku[a] * hv[b] + gv * hu[a] * kv[b] + guv * ku[a] * kv[b]
    return float(total)


def interpolate_g(table: InterpTable, lambda1: float, lambda2: float, method: str = "bilinear") -> float:
    if method not in METHODS:
        raise TableError(f"unknown interpolation method {method!r}")
    eps, delta = sector_margins(lambda1, lambda2)
    u, v = _check_coverage(table, *lattice_coordinates(table, eps, delta))
    if method == "bilinear":
        return _bilinear(table, u, v)
    return _bicubic(table, u, v)


def interpolate_f(table: InterpTable, lambda1: float, lambda2: float, method: str = "bilinear") -> float:
    """Interpolated g with the singular part -(ln eps + ln delta)/2 added back."""
    eps, delta = sector_margins(lambda1, lambda2)
    g = interpolate_g(table, lambda1, lambda2, method)
    return g - 0.5 * math.log(eps) - 0.5 * math.log(delta)


# serialization


def _flat(a: np.ndarray) -> list:
    return [float(x) if math.isfinite(x) else None for x in a.ravel()]


def _unflat(xs, n: int, what: str) -> np.ndarray:
    if len(xs) != n * n:
        raise TableError(f"expected {n * n} entries in {what}, got {len(xs)}")
    return np.array([math.nan if x is None else float(x) for x in xs]).reshape(n, n)


def table_metadata(table: InterpTable) -> dict:
    a, b, c = table.vertices
    return {
        "format": FORMAT_NAME,
        "version": table.version,
        "grid": {
            "n": table.n,
            "eta": table.eta,
            "parameterization": "barycentric",
            "vertices": {"A": a.tolist(), "B": b.tolist(), "C": c.tolist()},
            "layout": "row-major",
        },
        "quantity": "g",
        "tolerances": dict(table.tolerances),
        "solver_stats": dict(table.solver_stats),
    }


def table_to_dict(table: InterpTable) -> dict:
    out = table_metadata(table)
    out["values"] = _flat(table.values)
    out["derivatives"] = {name: _flat(table.derivatives[k]) for k, name in enumerate(DERIVATIVE_NAMES)}
    return out


def table_from_dict(data: dict) -> InterpTable:
    if data.get("format") != FORMAT_NAME:
        raise TableError("not a g-table document")
    version = data.get("version")
    if version != FORMAT_VERSION:
        raise TableError(f"unsupported table version {version!r}")
    try:
        n = int(data["grid"]["n"])
        eta = float(data["grid"]["eta"])
        values = _unflat(data["values"], n, "values")
        derivs = np.stack([_unflat(data["derivatives"][name], n, name) for name in DERIVATIVE_NAMES])
    except (KeyError, TypeError) as exc:
        raise TableError(f"malformed table document: {exc}") from exc
    return InterpTable(
        n, eta, values, derivs, dict(data.get("tolerances", {})), dict(data.get("solver_stats", {})), version
    )


def table_to_json(table: InterpTable) -> str:
    return json.dumps(table_to_dict(table), indent=1, sort_keys=True) + "\n"


def table_from_json(text: str) -> InterpTable:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableError(f"invalid table JSON: {exc}") from exc
    return table_from_dict(data)


def save_table(table: InterpTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table_to_json(table))


def load_table(path) -> InterpTable:
    with open(path, encoding="utf-8") as fh:
        return table_from_json(fh.read())


def table_to_csv(table: InterpTable) -> str:
    """One row per node; the JSON envelope without the arrays goes in a leading '#' line."""
    buf = io.StringIO()
    buf.write("# " + json.dumps(table_metadata(table), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    top = table.n - 1
    for i in range(table.n):
        for j in range(table.n - i):
            eps, delta = table.node_margins(i, j)
            head = [i, j, repr(i / top), repr(j / top), repr(eps), repr(delta), repr(eps - THIRD), repr(delta - THIRD)]
            jet = [repr(float(table.values[i, j]))] + [repr(float(x)) for x in table.derivatives[:, i, j]]
            w.writerow(head + jet)
    return buf.getvalue()


def table_from_csv(text: str) -> InterpTable:
    first, _, body = text.partition("\n")
    if not first.startswith("# "):
        raise TableError("missing CSV metadata line")
    meta = json.loads(first[2:])
    n = int(meta["grid"]["n"])
    values = np.full((n, n), math.nan)
    derivs = np.full((len(DERIVATIVE_NAMES), n, n), math.nan)
    for row in csv.DictReader(io.StringIO(body)):
        i, j = int(row["i"]), int(row["j"])
        values[i, j] = float(row["g"])
        for k, name in enumerate(DERIVATIVE_NAMES):
            derivs[k, i, j] = float(row[name])
    meta["values"] = _flat(values)
    meta["derivatives"] = {name: _flat(derivs[k]) for k, name in enumerate(DERIVATIVE_NAMES)}
    return table_from_dict(meta)
