"""3-adic cube complexes ``I(n, j)``: cells, boundary, vertex metric, rounding and ``r_m(j)``.

Vertices are integer tuples at a level ``j`` (coordinate ``c`` means
``c / 3^j``). A cell stores one ``(start, dim)`` pair per axis, ``dim`` 0
for a vertex ``[start]`` and 1 for the interval ``[start, start + 1]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Iterable

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True, order=True)
class GridVertex:
    j: int
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        top = 3**self.j
        if self.j < 0 or any(c < 0 or c > top for c in self.coords):
            raise InvalidInputError(f"vertex {self.coords} outside I(n, {self.j})")

    @property
    def n(self) -> int:
        return len(self.coords)

    def value(self) -> tuple:
        return tuple(c / 3**self.j for c in self.coords)

    def on_boundary(self) -> bool:
        top = 3**self.j
        return any(c == 0 or c == top for c in self.coords)


@dataclass(frozen=True, order=True)
class Cell:
    j: int
    axes: tuple  # ((start, dim), ...)

    def __post_init__(self):
        axes = tuple((int(a), int(d)) for a, d in self.axes)
        top = 3**self.j
        for a, d in axes:
            if d not in (0, 1) or a < 0 or a + d > top:
                raise InvalidInputError(f"bad cell axis {(a, d)} at level {self.j}")
        object.__setattr__(self, "axes", axes)

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def dim(self) -> int:
        return sum(d for _, d in self.axes)

    def vertices(self) -> list:
        ranges = [(a,) if d == 0 else (a, a + 1) for a, d in self.axes]
        return [GridVertex(self.j, c) for c in itertools.product(*ranges)]

    def in_boundary(self) -> bool:
        """Support contained in ``I^n_0``: some axis is a vertex at 0 or 3^j."""
        top = 3**self.j
        return any(d == 0 and a in (0, top) for a, d in self.axes)


def vertex_cell(v: GridVertex) -> Cell:
    return Cell(v.j, tuple((c, 0) for c in v.coords))


class Chain:
    """Sparse integer combination of cells of one dimension."""

    def __init__(self, terms: dict | None = None, n: int | None = None, j: int | None = None):
        clean = {c: int(k) for c, k in (terms or {}).items() if k != 0}
        dims = {c.dim for c in clean}
        if len(dims) > 1:
            raise InvalidInputError("chain cells must share one dimension")
        if any(c.n != next(iter(clean)).n or c.j != next(iter(clean)).j for c in clean):
            raise InvalidInputError("chain cells must share one complex")
        self.terms = dict(sorted(clean.items()))
        first = next(iter(self.terms), None)
        self.n = first.n if first is not None else n
        self.j = first.j if first is not None else j
        self.dim = first.dim if first is not None else None

    @classmethod
    def of(cls, cell: Cell, coeff: int = 1) -> "Chain":
        return cls({cell: coeff})

    def __add__(self, other: "Chain") -> "Chain":
        out = dict(self.terms)
        for c, k in other.terms.items():
            out[c] = out.get(c, 0) + k
        return Chain(out, self.n, self.j)

    def __mul__(self, k: int) -> "Chain":
        return Chain({c: k * v for c, v in self.terms.items()}, self.n, self.j)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Chain) and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        return f"Chain({len(self.terms)} cells, dim={self.dim})"


def enumerate_cells(n: int, j: int, p: int, boundary_only: bool = False) -> list:
    """All ``p``-cells of ``I(n, j)`` in canonical order."""
    if not (0 <= p <= n):
        raise InvalidInputError(f"p = {p} must lie in [0, {n}]")
    top = 3**j
    out = []
    for dims in itertools.combinations(range(n), p):
        ranges = [range(top) if i in dims else range(top + 1) for i in range(n)]
        for starts in itertools.product(*ranges):
            c = Cell(j, tuple((a, int(i in dims)) for i, a in enumerate(starts)))
            if not boundary_only or c.in_boundary():
                out.append(c)
    return sorted(out)


def cell_count(n: int, j: int, p: int) -> int:
    return comb(n, p) * 3 ** (j * p) * (3**j + 1) ** (n - p)


def boundary_cell(cell: Cell) -> Chain:
    terms: dict = {}
    sigma = 0
    for i, (a, d) in enumerate(cell.axes):
        if d == 1:
            sign = -1 if sigma % 2 else 1
            for end, s in ((a + 1, 1), (a, -1)):
                axes = cell.axes[:i] + ((end, 0),) + cell.axes[i + 1 :]
                f = Cell(cell.j, axes)
                terms[f] = terms.get(f, 0) + sign * s
        sigma += d
    return Chain(terms, cell.n, cell.j)


def boundary(chain: Chain | Cell) -> Chain:
    """Signed boundary with ``sigma(i) = sum_{p<i} dim(theta^p)`` and ``d[a,b] = [b] - [a]``."""
    if isinstance(chain, Cell):
        chain = Chain.of(chain)
    out = Chain({}, chain.n, chain.j)
    for c, k in chain.terms.items():
        out = out + boundary_cell(c) * k
    return out


def vertex_distance(x: GridVertex, y: GridVertex) -> int:
    """``3^j sum |x_i - y_i|`` on the shared level."""
    if x.j != y.j or x.n != y.n:
        raise InvalidInputError("vertices live on different grids; refine first")
    return sum(abs(a - b) for a, b in zip(x.coords, y.coords))


def _round_down_levels(c, k: int):
    """Nearest multiple of ``3^k`` divided by ``3^k``; no ties since ``3^k`` is odd."""
    s = 3**k
    return (2 * c + s) // (2 * s)


def nearest_map(i: int, j: int) -> Callable[[GridVertex], GridVertex]:
    """``n(i, j)``: nearest level-``j`` vertex, identity when ``i <= j``."""

    def f(x: GridVertex) -> GridVertex:
        if x.j != i:
            raise InvalidInputError(f"vertex is at level {x.j}, expected {i}")
        if i <= j:
            return GridVertex(j, tuple(c * 3 ** (j - i) for c in x.coords))
        return GridVertex(j, tuple(_round_down_levels(c, i - j) for c in x.coords))

    return f


def nearest_coords(coords: np.ndarray, i: int, j: int) -> np.ndarray:
    if i <= j:
        return coords * 3 ** (j - i)
    return _round_down_levels(coords, i - j)


def grid_vertices(n: int, j: int) -> np.ndarray:
    """All vertices of ``I(n, j)`` as an integer array, lexicographic order."""
    axis = np.arange(3**j + 1)
    return np.stack(np.meshgrid(*([axis] * n), indexing="ij"), -1).reshape(-1, n)


@dataclass
class DiscreteMap:
    n: int
    j: int
    values: dict
    norm: Callable = field(default=abs)

    def __post_init__(self):
        expected = 3**self.j + 1
        if len(self.values) != expected**self.n:
            raise InvalidInputError("discrete map must be defined on every vertex")

    def diff_norm(self, x, y) -> float:
        return float(self.norm(self.values[x] - self.values[y]))


def random_real_map(n: int, j: int, rng: np.random.Generator) -> DiscreteMap:
    verts = [GridVertex(j, tuple(c)) for c in grid_vertices(n, j)]
    vals = rng.normal(size=len(verts))
    return DiscreteMap(n, j, dict(zip(verts, vals)))


def fineness(phi: DiscreteMap, adjacent_only: bool = False) -> float:
    """``sup M(phi(x) - phi(y)) / d(x, y)`` over distinct pairs, or adjacent pairs only."""
    verts = sorted(phi.values)
    best = 0.0
    if adjacent_only:
        top = 3**phi.j
        for x in verts:
            for i in range(phi.n):
                if x.coords[i] < top:
                    c = list(x.coords)
                    c[i] += 1
                    best = max(best, phi.diff_norm(x, GridVertex(phi.j, c)))
        return best
    for x, y in itertools.combinations(verts, 2):
        best = max(best, phi.diff_norm(x, y) / vertex_distance(x, y))
    return best


# ---------------------------------------------------------------------------
# the map r_m(j)
# ---------------------------------------------------------------------------


def R_box(x: np.ndarray) -> np.ndarray:
    """Radial projection from ``(centre, -1)`` onto ``(I_0^m x [0,1]) u (I^m x {1})``.

    Fixes ``(x, 0)`` for ``x`` on the boundary of the cube.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.max(np.abs(x - 0.5), axis=1)
    lam = np.where(u > 0.25, 0.5 / np.where(u > 0, u, 1.0), 2.0)
    lam = np.minimum(lam, 2.0)
    base = 0.5 + lam[:, None] * (x - 0.5)
    return np.column_stack([base, lam - 1.0])


def lipschitz_estimate(m: int, samples_per_axis: int = 81) -> float:
    """Largest difference quotient of ``R_box`` over a dense grid and its axis neighbours."""
    axis = np.linspace(0.0, 1.0, samples_per_axis)
    g = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), -1).reshape(-1, m)
    rx = R_box(g)
    h = axis[1] - axis[0]
    best = 0.0
    for step in itertools.product((-1, 0, 1), repeat=m):
        step = np.array(step, dtype=float)
        if not np.any(step):
            continue
        y = g + h * step
        ok = np.all((y >= -1e-15) & (y <= 1 + 1e-15), axis=1)
        ry = R_box(np.clip(y[ok], 0.0, 1.0))
        q = np.linalg.norm(ry - rx[ok], axis=1) / (h * np.linalg.norm(step))
        best = max(best, float(q.max()))
    return best


def choose_q(m: int, lipschitz: float | None = None) -> int:
    """Smallest ``q`` with ``3^(q-2) >= 1.1 L``."""
    L = lipschitz_estimate(m) if lipschitz is None else lipschitz
    q = 2
    while 3 ** (q - 2) < 1.1 * L:
        q += 1
    return q


def target_set(m: int, j: int) -> np.ndarray:
    """Vertices of ``S(m+1, j) u T(m+1, j)`` as integer rows, lexicographic."""
    top = 3**j
    g = grid_vertices(m + 1, j)
    side = np.any((g[:, :m] == 0) | (g[:, :m] == top), axis=1)
    return g[side | (g[:, m] == top)]


def restriction_coords(m: int, j: int, q: int, coords: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """``r_m(j)`` on integer level-``(j+q)`` coordinates; ties go to the lowest lexicographic vertex."""
    K = target_set(m, j)
    Kf = K / 3**j
    x = np.atleast_2d(coords) / 3 ** (j + q)
    out = np.empty((len(x), m + 1), dtype=np.int64)
    for s in range(0, len(x), chunk):
        r = R_box(x[s : s + chunk])
        d2 = np.sum((r[:, None, :] - Kf[None, :, :]) ** 2, axis=2)
        near = d2 <= d2.min(axis=1, keepdims=True) + 1e-12
        out[s : s + chunk] = K[np.argmax(near, axis=1)]
    return out


def restriction_map_r(m: int, j: int, q: int | None = None) -> Callable[[GridVertex], GridVertex]:
    q = choose_q(m) if q is None else q

    def r(x: GridVertex) -> GridVertex:
        if x.n != m or x.j != j + q:
            raise InvalidInputError(f"r_m(j) takes vertices of I({m}, {j + q})")
        return GridVertex(j, tuple(restriction_coords(m, j, q, np.array([x.coords]))[0]))

    r.q = q
    return r


# ---------------------------------------------------------------------------
# exhaustive audits
# ---------------------------------------------------------------------------


@dataclass
class AuditResult:
    name: str
    checked: int
    failures: int
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.checked > 0

    def to_dict(self) -> dict:
        return {"name": self.name, "checked": self.checked, "failures": self.failures, "pass": self.passed, **self.detail}


def audit_boundary_squared(n_max: int = 3, j: int = 1) -> AuditResult:
    checked = failures = 0
    for n in range(1, n_max + 1):
        for p in range(n + 1):
            for c in enumerate_cells(n, j, p):
                checked += 1
                failures += bool(boundary(boundary(c)))
    return AuditResult("boundary_squared", checked, failures, {"n_max": n_max, "j": j})


def audit_cell_counts(n_max: int = 4, j_max: int = 2) -> AuditResult:
    checked = failures = 0
    for n in range(1, n_max + 1):
        for j in range(j_max + 1):
            for p in range(n + 1):
                if cell_count(n, j, p) > 200000:
                    continue
                checked += 1
                failures += len(enumerate_cells(n, j, p)) != cell_count(n, j, p)
    return AuditResult("cell_counts", checked, failures)


def audit_fineness(trials: int = 200, seed: int = 0) -> AuditResult:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(trials):
        n = int(rng.integers(1, 3))
        j = int(rng.integers(1, 3)) if n == 1 else 1
        phi = random_real_map(n, j, rng)
        failures += fineness(phi) != fineness(phi, adjacent_only=True)
    return AuditResult("fineness_adjacent", trials, failures, {"seed": seed})


def audit_nearest_composition(n: int = 2, levels: Iterable[int] = range(4)) -> AuditResult:
    levels = sorted(levels)
    checked = failures = 0
    for i, j, k in itertools.combinations_with_replacement(levels, 3):
        x = grid_vertices(n, k)
        direct = nearest_coords(x, k, i)
        via = nearest_coords(nearest_coords(x, k, j), j, i)
        checked += len(x)
        failures += int(np.sum(np.any(direct != via, axis=1)))
    return AuditResult("nearest_composition", checked, failures, {"n": n, "levels": levels})


def audit_restriction(m: int, j: int, q: int | None = None) -> AuditResult:
    """Boundary agreement with the nearest map and the adjacent-pair distance bound, exhaustively."""
    q = choose_q(m) if q is None else q
    lvl = j + q
    top = 3**lvl
    g = grid_vertices(m, lvl)
    r = restriction_coords(m, j, q, g)
    on_bd = np.any((g == 0) | (g == top), axis=1)
    expect = np.column_stack([nearest_coords(g[on_bd], lvl, j), np.zeros(int(on_bd.sum()), dtype=np.int64)])
    c2_fail = int(np.sum(np.any(r[on_bd] != expect, axis=1)))
    c1_fail = pairs = 0
    worst = 0
    strides = (top + 1) ** np.arange(m - 1, -1, -1)
    for ax in range(m):
        ok = g[:, ax] < top
        a = np.flatnonzero(ok)
        b = a + strides[ax]
        d = np.sum(np.abs(r[a] - r[b]), axis=1)
        pairs += len(a)
        worst = max(worst, int(d.max()))
        c1_fail += int(np.sum(d > m))
    return AuditResult(
        f"restriction_m{m}_j{j}",
        int(on_bd.sum()) + pairs,
        c1_fail + c2_fail,
        {"m": m, "j": j, "q": q, "c1_failures": c1_fail, "c2_failures": c2_fail, "max_adjacent_distance": worst},
    )


def run_all_audits(seed: int = 0) -> list:
    return [
        audit_boundary_squared(3, 1),
        audit_cell_counts(),
        audit_fineness(200, seed),
        audit_nearest_composition(2, range(3)),
        audit_restriction(1, 1),
        audit_restriction(2, 1),
        audit_restriction(1, 2),
    ]
