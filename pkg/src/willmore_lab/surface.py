"""Closed oriented surfaces in S^3: parametric generators, meshes, quadrature.

Orientation convention: ``N`` points into ``A*``, the component of the
complement not called ``A``, and principal curvatures use
``dN(e_i) = -k_i e_i``. With this sign the point ``cos t x + sin t N`` has
Jacobian ``(cos t - k1 sin t)(cos t - k2 sin t)``.

Which solid is ``A`` for each generator:

* geodesic sphere ``dB_r(p)``: ``A = B_r(p)``, so ``N`` is outward and
  ``k1 = k2 = -cot r``;
* flat torus: ``A = {|x12| > a}``, the solid torus around the circle in the
  (x1, x2) plane; ``N`` points into the other one and ``k = (b/a, -a/b)``;
* revolution torus: ``A`` is the image of the solid tube, ``N`` points to
  the projection pole ``e4``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from . import kernels
from .errors import InvalidInputError, SelfIntersectionError
from .s3 import geodesic_radius, normalize, stereographic

# ---------------------------------------------------------------------------
# mesh container
# ---------------------------------------------------------------------------


def _project_normals(points: np.ndarray, normals: np.ndarray) -> np.ndarray:
    n = normals - np.sum(normals * points, axis=1, keepdims=True) * points
    return n / np.linalg.norm(n, axis=1, keepdims=True)


def triangle_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    a, b, c = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    ab, ac = b - a, c - a
    g = np.sum(ab * ab, 1) * np.sum(ac * ac, 1) - np.sum(ab * ac, 1) ** 2
    return 0.5 * np.sqrt(np.maximum(g, 0.0))


def mixed_vertex_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Mixed Voronoi areas on the chord triangles.

    Obtuse triangles give half their area to the obtuse corner and a quarter
    to each other corner, which agrees with the Voronoi split at a right
    angle, so the weights are continuous in the vertex positions.
    """
    a, b, c = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    area = triangle_areas(vertices, faces)
    dot_a = np.sum((b - a) * (c - a), 1)
    dot_b = np.sum((a - b) * (c - b), 1)
    dot_c = np.sum((a - c) * (b - c), 1)
    la2 = np.sum((b - c) ** 2, 1)
    lb2 = np.sum((c - a) ** 2, 1)
    lc2 = np.sum((a - b) ** 2, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        two_area = 2.0 * area
        cot_a, cot_b, cot_c = dot_a / two_area, dot_b / two_area, dot_c / two_area
        va = (lb2 * cot_b + lc2 * cot_c) / 8.0
        vb = (la2 * cot_a + lc2 * cot_c) / 8.0
        vc = (la2 * cot_a + lb2 * cot_b) / 8.0
    obtuse = (dot_a < 0) | (dot_b < 0) | (dot_c < 0)
    half, quarter = area / 2.0, area / 4.0
    va = np.where(obtuse, np.where(dot_a < 0, half, quarter), va)
    vb = np.where(obtuse, np.where(dot_b < 0, half, quarter), vb)
    vc = np.where(obtuse, np.where(dot_c < 0, half, quarter), vc)
    n = vertices.shape[0]
    return np.bincount(faces[:, 0], va, n) + np.bincount(faces[:, 1], vb, n) + np.bincount(faces[:, 2], vc, n)


def face_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Unnormalised face normals, length about twice the triangle area."""
    a, b, c = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    centroid = normalize(a + b + c)
    return -kernels.cross4(b - a, c - a, centroid)


def estimate_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area-weighted vertex normals, projected to the tangent space of S^3."""
    fn = face_normals(vertices, faces)
    acc = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(acc, faces[:, k], fn)
    return _project_normals(vertices, acc)


def unique_edges(faces: np.ndarray) -> np.ndarray:
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def ring_neighbours(n: int, faces: np.ndarray, rings: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """CSR ``(indptr, indices)`` of the k-ring neighbourhoods, excluding the vertex itself."""
    e = unique_edges(faces)
    adj = sparse.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n))
    adj = adj.tocsr()
    reach = adj.copy()
    power = adj
    for _ in range(rings - 1):
        power = power @ adj
        reach = reach + power
    reach = reach.tocsr()
    reach.setdiag(0)
    reach.eliminate_zeros()
    reach.sort_indices()
    return reach.indptr.astype(np.int64), reach.indices.astype(np.int64)


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Triangulated closed surface on S^3. Treated as immutable.

    ``curvature_source`` is ``"chart"`` (exact, from a parametric surface),
    ``"pushed"`` (exact data carried through a conformal map),
    ``"estimated"`` (quadric fit) or ``None``.
    """

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray
    k1: Optional[np.ndarray] = None
    k2: Optional[np.ndarray] = None
    vertex_area: Optional[np.ndarray] = None
    genus: Optional[int] = None
    chart: Optional["ParametricSurface"] = None
    uv: Optional[np.ndarray] = None
    conformal: Optional[np.ndarray] = None
    curvature_source: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 4:
            raise InvalidInputError("vertices must have shape (V, 4)")
        faces = np.asarray(self.faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise InvalidInputError("faces must have shape (F, 3)")
        if faces.size and (faces.min() < 0 or faces.max() >= len(verts)):
            raise InvalidInputError("face index out of range")
        verts = normalize(verts)
        normals = _project_normals(verts, np.asarray(self.normals, dtype=float))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "normals", normals)
        chi = self.euler_characteristic
        if chi % 2:
            raise InvalidInputError(f"odd Euler characteristic {chi}: not a closed orientable surface")
        genus = (2 - chi) // 2
        if self.genus is not None and int(self.genus) != genus:
            raise InvalidInputError(f"declared genus {self.genus} but V - E + F gives genus {genus}")
        object.__setattr__(self, "genus", genus)
        if self.vertex_area is None:
            object.__setattr__(self, "vertex_area", mixed_vertex_areas(verts, faces))
        for name in ("k1", "k2"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=float).reshape(len(verts)))

    # -- counts -----------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def edges(self) -> np.ndarray:
        return unique_edges(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    # -- curvature --------------------------------------------------------
    @property
    def has_curvature(self) -> bool:
        return self.k1 is not None and self.k2 is not None

    def _require_curvature(self):
        if not self.has_curvature:
            raise InvalidInputError("mesh carries no curvature data; call estimate_curvatures first")

    @property
    def H(self) -> np.ndarray:
        self._require_curvature()
        return 0.5 * (self.k1 + self.k2)

    @property
    def K(self) -> np.ndarray:
        self._require_curvature()
        return 1.0 + self.k1 * self.k2

    @property
    def exact_curvature(self) -> bool:
        return self.curvature_source in ("chart", "pushed")

    def replace(self, **changes) -> "SurfaceMesh":
        return dataclasses.replace(self, **changes)

    def orientation_defects(self) -> int:
        """Directed edges that are not matched by exactly one reversed twin."""
        f = self.faces
        d = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        n = self.n_vertices
        key = d[:, 0] * n + d[:, 1]
        rkey = d[:, 1] * n + d[:, 0]
        uniq, counts = np.unique(key, return_counts=True)
        dup = int(np.sum(counts > 1))
        missing = int(np.sum(~np.isin(rkey, key)))
        return dup + missing


# ---------------------------------------------------------------------------
# parametric surfaces
# ---------------------------------------------------------------------------


def _shape_from_forms(Xu, Xv, Xuu, Xuv, Xvv, N):
    E = np.sum(Xu * Xu, -1)
    F = np.sum(Xu * Xv, -1)
    G = np.sum(Xv * Xv, -1)
    e = np.sum(Xuu * N, -1)
    f = np.sum(Xuv * N, -1)
    g = np.sum(Xvv * N, -1)
    det = E * G - F * F
    mean = (e * G - 2 * f * F + g * E) / (2 * det)
    gauss = (e * g - f * f) / det
    disc = np.sqrt(np.maximum(mean * mean - gauss, 0.0))
    return mean + disc, mean - disc


def _grid_faces(rows: int, cols: int, index, points: np.ndarray) -> np.ndarray:
    """Split grid quads along the shorter diagonal; any wrap-around lives in ``index``."""
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    idx = np.vectorize(index, otypes=[np.int64])
    a, b = idx(ii, jj), idx(ii + 1, jj)
    c, d = idx(ii + 1, jj + 1), idx(ii, jj + 1)
    l_ac = np.sum((points[a] - points[c]) ** 2, axis=1)
    l_bd = np.sum((points[b] - points[d]) ** 2, axis=1)
    tie = np.abs(l_ac - l_bd) <= 1e-12 * np.maximum(l_ac, l_bd)
    # ties go to the diagonal whose sorted index pair is lexicographically lower
    ac = np.column_stack([np.minimum(a, c), np.maximum(a, c)])
    bd = np.column_stack([np.minimum(b, d), np.maximum(b, d)])
    lex = (ac[:, 0] < bd[:, 0]) | ((ac[:, 0] == bd[:, 0]) & (ac[:, 1] <= bd[:, 1]))
    use_ac = np.where(tie, lex, l_ac < l_bd)
    first = np.where(use_ac[:, None], np.column_stack([a, b, c]), np.column_stack([a, b, d]))
    second = np.where(use_ac[:, None], np.column_stack([a, c, d]), np.column_stack([b, c, d]))
    return np.stack([first, second], axis=1).reshape(-1, 3).astype(np.int64)


def _orient_faces(points: np.ndarray, faces: np.ndarray, normals: np.ndarray) -> np.ndarray:
    fn = face_normals(points, faces)
    ref = normals[faces].sum(axis=1)
    flip = np.sum(fn * ref, 1) < 0
    out = faces.copy()
    out[flip] = out[flip][:, [0, 2, 1]]
    return out


class ParametricSurface:
    """Chart ``(u, v) -> S^3`` with analytic derivatives up to order two.

    Subclasses supply :meth:`point`, :meth:`derivatives` and :meth:`normal`;
    curvature, closest points and signed distance follow generically and may
    be overridden by closed forms.
    """

    name = "parametric"
    genus = 1

    def point(self, u, v) -> np.ndarray:
        raise NotImplementedError

    def derivatives(self, u, v):
        """``(Xu, Xv, Xuu, Xuv, Xvv)`` in R^4."""
        raise NotImplementedError

    def normal(self, u, v) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def principal_curvatures(self, u, v):
        Xu, Xv, Xuu, Xuv, Xvv = self.derivatives(u, v)
        return _shape_from_forms(Xu, Xv, Xuu, Xuv, Xvv, self.normal(u, v))

    def fd_principal_curvatures(self, u, v, h: float = 1e-4):
        """Finite-difference oracle built from :meth:`point` only."""
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        P = self.point
        Xu = (P(u + h, v) - P(u - h, v)) / (2 * h)
        Xv = (P(u, v + h) - P(u, v - h)) / (2 * h)
        x0 = P(u, v)
        Xuu = (P(u + h, v) - 2 * x0 + P(u - h, v)) / h**2
        Xvv = (P(u, v + h) - 2 * x0 + P(u, v - h)) / h**2
        Xuv = (P(u + h, v + h) - P(u + h, v - h) - P(u - h, v + h) + P(u - h, v - h)) / (4 * h * h)
        N = kernels.cross4(x0, Xu, Xv)
        N /= np.linalg.norm(N, axis=-1, keepdims=True)
        N *= np.sign(np.sum(N * self.normal(u, v), -1))[..., None]
        return _shape_from_forms(Xu, Xv, Xuu, Xuv, Xvv, N)

    # -- nearest point ----------------------------------------------------
    def _seed_grid(self, n: int = 160):
        cache = getattr(self, "_seed_cache", None)
        if cache is None:
            uu, vv = np.meshgrid(*self._seed_axes(n), indexing="ij")
            uu, vv = uu.ravel(), vv.ravel()
            cache = (cKDTree(self.point(uu, vv)), uu, vv)
            self._seed_cache = cache
        return cache

    def _seed_axes(self, n):
        t = 2 * np.pi * np.arange(n) / n
        return t, t

    def closest_params(self, x, iters: int = 40) -> tuple[np.ndarray, np.ndarray]:
        """Chart parameters of the nearest surface point (Newton from a grid seed)."""
        x = np.atleast_2d(np.asarray(x, float))
        tree, su, sv = self._seed_grid()
        _, idx = tree.query(x)
        u, v = su[idx].copy(), sv[idx].copy()
        for _ in range(iters):
            X = self.point(u, v)
            Xu, Xv, Xuu, Xuv, Xvv = self.derivatives(u, v)
            r = X - x
            g1, g2 = np.sum(Xu * r, 1), np.sum(Xv * r, 1)
            h11 = np.sum(Xu * Xu, 1) + np.sum(Xuu * r, 1)
            h12 = np.sum(Xu * Xv, 1) + np.sum(Xuv * r, 1)
            h22 = np.sum(Xv * Xv, 1) + np.sum(Xvv * r, 1)
            det = h11 * h22 - h12 * h12
            bad = (h11 <= 0) | (det <= 1e-14)
            # Gauss-Newton where the full Hessian is not positive definite
            h11 = np.where(bad, np.sum(Xu * Xu, 1), h11)
            h12 = np.where(bad, np.sum(Xu * Xv, 1), h12)
            h22 = np.where(bad, np.sum(Xv * Xv, 1), h22)
            det = h11 * h22 - h12 * h12
            du = -(h22 * g1 - h12 * g2) / det
            dv = -(h11 * g2 - h12 * g1) / det
            step = np.sqrt(du * du + dv * dv)
            scale = np.minimum(1.0, 0.5 / np.maximum(step, 1e-300))
            u += du * scale
            v += dv * scale
            if np.max(step) < 1e-14:
                break
        return u, v

    def closest_point(self, x):
        """``(point, normal)`` of the nearest surface point to each ``x``."""
        u, v = self.closest_params(x)
        return self.point(u, v), self.normal(u, v)

    def signed_distance(self, x) -> np.ndarray:
        """Geodesic distance to the surface, negative inside ``A``."""
        x = np.atleast_2d(np.asarray(x, float))
        p, n = self.closest_point(x)
        d = geodesic_radius(np.minimum(np.linalg.norm(x - p, axis=1), 2.0))
        return np.where(np.sum(x * n, 1) < 0, -d, d)

    def mesh(self, res: int) -> "SurfaceMesh":
        raise NotImplementedError


class FlatTorus(ParametricSurface):
    """``(a cos u, a sin u, b cos v, b sin v)`` with ``b = sqrt(1 - a^2)``."""

    name = "flat_torus"
    genus = 1

    def __init__(self, a: float):
        if not (0.0 < a < 1.0):
            raise InvalidInputError(f"flat torus radius a = {a} must lie in (0, 1)")
        self.a = float(a)
        self.b = float(np.sqrt(1.0 - a * a))

    def params(self):
        return {"a": self.a}

    def point(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        a, b = self.a, self.b
        return np.stack([a * np.cos(u), a * np.sin(u), b * np.cos(v), b * np.sin(v)], -1)

    def normal(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        a, b = self.a, self.b
        return np.stack([-b * np.cos(u), -b * np.sin(u), a * np.cos(v), a * np.sin(v)], -1)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        a, b = self.a, self.b
        z = np.zeros_like(u)
        Xu = np.stack([-a * np.sin(u), a * np.cos(u), z, z], -1)
        Xv = np.stack([z, z, -b * np.sin(v), b * np.cos(v)], -1)
        Xuu = np.stack([-a * np.cos(u), -a * np.sin(u), z, z], -1)
        Xvv = np.stack([z, z, -b * np.cos(v), -b * np.sin(v)], -1)
        return Xu, Xv, Xuu, np.zeros_like(Xu), Xvv

    def exact_curvatures(self) -> tuple[float, float]:
        return self.b / self.a, -self.a / self.b

    def closest_params(self, x, iters: int = 0):
        x = np.atleast_2d(np.asarray(x, float))
        return np.arctan2(x[:, 1], x[:, 0]), np.arctan2(x[:, 3], x[:, 2])

    def signed_distance(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        phi = np.arccos(np.clip(np.hypot(x[:, 0], x[:, 1]), 0.0, 1.0))
        return phi - np.arccos(self.a)

    def mesh(self, res: int) -> SurfaceMesh:
        if res < 3:
            raise InvalidInputError("torus resolution must be >= 3")
        t = 2 * np.pi * np.arange(res) / res
        uu, vv = np.meshgrid(t, t, indexing="ij")
        uu, vv = uu.ravel(), vv.ravel()
        pts = self.point(uu, vv)
        nrm = self.normal(uu, vv)
        faces = _grid_faces(res, res, lambda i, j: (i % res) * res + (j % res), pts)
        faces = _orient_faces(pts, faces, nrm)
        k1, k2 = self.exact_curvatures()
        n = len(pts)
        return SurfaceMesh(
            pts, faces, nrm, np.full(n, k1), np.full(n, k2), genus=1, chart=self,
            uv=np.column_stack([uu, vv]), curvature_source="chart",
            meta={"generator": self.name, "a": self.a, "res": res},
        )


class GeodesicSphere(ParametricSurface):
    """Boundary of ``B_r(p)``; chart ``(theta, phi)`` about the axis ``e3`` of a frame at ``p``."""

    name = "geodesic_sphere"
    genus = 0

    def __init__(self, p, r: float, frame=None):
        if not (0.0 < r < np.pi):
            raise InvalidInputError(f"sphere radius r = {r} must lie in (0, pi)")
        self.p = normalize(p).reshape(4)
        self.r = float(r)
        if frame is None:
            q, _ = np.linalg.qr(np.column_stack([self.p, np.eye(4)]))
            frame = q[:, 1:4].T
        self.frame = np.asarray(frame, float)

    def params(self):
        return {"p": self.p.tolist(), "r": self.r}

    def _omega(self, th, ph):
        e1, e2, e3 = self.frame
        return (
            np.cos(th)[..., None] * e3
            + (np.sin(th) * np.cos(ph))[..., None] * e1
            + (np.sin(th) * np.sin(ph))[..., None] * e2
        )

    def point(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.cos(self.r) * self.p + np.sin(self.r) * self._omega(u, v)

    def normal(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return -np.sin(self.r) * self.p + np.cos(self.r) * self._omega(u, v)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        e1, e2, e3 = self.frame
        s = np.sin(self.r)
        c_t, s_t, c_p, s_p = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        col = lambda w: w[..., None]  # noqa: E731
        Xu = s * (col(-s_t) * e3 + col(c_t * c_p) * e1 + col(c_t * s_p) * e2)
        Xv = s * (col(-s_t * s_p) * e1 + col(s_t * c_p) * e2)
        Xuu = s * (col(-c_t) * e3 + col(-s_t * c_p) * e1 + col(-s_t * s_p) * e2)
        Xuv = s * (col(-c_t * s_p) * e1 + col(c_t * c_p) * e2)
        Xvv = s * (col(-s_t * c_p) * e1 + col(-s_t * s_p) * e2)
        return Xu, Xv, Xuu, Xuv, Xvv

    def exact_curvatures(self) -> tuple[float, float]:
        k = -1.0 / np.tan(self.r)
        return k, k

    def _seed_axes(self, n):
        return np.linspace(1e-3, np.pi - 1e-3, n), 2 * np.pi * np.arange(n) / n

    def closest_params(self, x, iters: int = 0):
        x = np.atleast_2d(np.asarray(x, float))
        e1, e2, e3 = self.frame
        w = x - np.outer(x @ self.p, self.p)
        return np.arctan2(np.hypot(w @ e1, w @ e2), w @ e3), np.arctan2(w @ e2, w @ e1)

    def signed_distance(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        return np.arccos(np.clip(x @ self.p, -1.0, 1.0)) - self.r

    def mesh(self, res: int) -> SurfaceMesh:
        """Equiangular cubed-sphere grid with ``res // 2`` cells per cube edge.

        A latitude-longitude grid is avoided on purpose: its pole fans put a
        whole latitude circle into the two-ring of the first ring of vertices,
        which makes the quadric fit nearly singular there.
        """
        if res < 2:
            raise InvalidInputError("sphere resolution must be >= 2")
        n = max(1, res // 2)
        t = np.tan(np.pi / 4 * np.linspace(-1.0, 1.0, n + 1))
        aa, bb = np.meshgrid(t, t, indexing="ij")
        aa, bb = aa.ravel(), bb.ravel()
        one = np.ones_like(aa)
        blocks = []
        for axis in range(3):
            for sgn in (1.0, -1.0):
                cube = np.empty((len(aa), 3))
                cube[:, axis] = sgn * one
                cube[:, (axis + 1) % 3] = aa
                cube[:, (axis + 2) % 3] = bb
                blocks.append(cube / np.linalg.norm(cube, axis=1, keepdims=True))
        omega3 = np.vstack(blocks)
        _, first, inverse = np.unique(np.round(omega3, 12), axis=0, return_index=True, return_inverse=True)
        order = np.argsort(first)
        relabel = np.empty_like(order)
        relabel[order] = np.arange(len(order))
        omega3 = omega3[first[order]]
        inverse = relabel[inverse.ravel()]
        th = np.arccos(np.clip(omega3[:, 2], -1.0, 1.0))
        ph = np.mod(np.arctan2(omega3[:, 1], omega3[:, 0]), 2 * np.pi)
        pts = self.point(th, ph)
        nrm = self.normal(th, ph)
        faces = []
        m = n + 1
        for blk in range(6):
            base = blk * m * m
            idx = lambda i, j: int(inverse[base + i * m + j])  # noqa: E731
            faces.append(_grid_faces(n, n, idx, pts))
        faces = _orient_faces(pts, np.vstack(faces), nrm)
        k, _ = self.exact_curvatures()
        nv = len(pts)
        return SurfaceMesh(
            pts, faces, nrm, np.full(nv, k), np.full(nv, k), genus=0, chart=self,
            uv=np.column_stack([th, ph]), curvature_source="chart",
            meta={"generator": self.name, "r": self.r, "res": res},
        )


def _inv_stereo_d(y, a):
    """First derivative of ``y -> (2y, |y|^2 - 1)/(1 + |y|^2)`` along ``a``."""
    s = 1.0 + np.sum(y * y, -1)[..., None]
    ya = np.sum(y * a, -1)[..., None]
    w = np.concatenate([2 * y, -2 * np.ones_like(s)], -1)
    return np.concatenate([2 * a, np.zeros_like(s)], -1) / s - w * 2 * ya / s**2


def _inv_stereo_dd(y, a, b):
    s = 1.0 + np.sum(y * y, -1)[..., None]
    ya = np.sum(y * a, -1)[..., None]
    yb = np.sum(y * b, -1)[..., None]
    ab = np.sum(a * b, -1)[..., None]
    z = np.zeros_like(s)
    w = np.concatenate([2 * y, -2 * np.ones_like(s)], -1)
    return (
        -np.concatenate([2 * a, z], -1) * 2 * yb / s**2
        - np.concatenate([2 * b, z], -1) * 2 * ya / s**2
        - w * 2 * ab / s**2
        + w * 8 * ya * yb / s**3
    )


class RevolutionTorus(ParametricSurface):
    """R^3 torus of revolution (centre distance ``R``, tube radius ``r``) pulled back to S^3.

    Uses inverse stereographic projection from ``e4``; ``u`` runs around the
    tube and ``v`` around the axis.
    """

    name = "revolution_torus"
    genus = 1

    def __init__(self, R: float, r: float):
        if not (r > 0):
            raise InvalidInputError("tube radius must be positive")
        if not (R > r):
            raise SelfIntersectionError(f"R = {R} <= r = {r}: torus of revolution self-intersects")
        self.R = float(R)
        self.r = float(r)

    def params(self):
        return {"R": self.R, "r": self.r}

    def _y(self, u, v):
        rho = self.R + self.r * np.cos(u)
        return np.stack([rho * np.cos(v), rho * np.sin(v), self.r * np.sin(u)], -1)

    def _n(self, u, v):
        return np.stack([np.cos(u) * np.cos(v), np.cos(u) * np.sin(v), np.sin(u)], -1)

    def point(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        y = self._y(u, v)
        s = 1.0 + np.sum(y * y, -1)[..., None]
        return np.concatenate([2 * y, np.sum(y * y, -1)[..., None] - 1.0], -1) / s

    def normal(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        d = _inv_stereo_d(self._y(u, v), self._n(u, v))
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def derivatives(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        R, r = self.R, self.r
        y = self._y(u, v)
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        z = np.zeros_like(u)
        rho = R + r * cu
        yu = np.stack([-r * su * cv, -r * su * sv, r * cu], -1)
        yv = np.stack([-rho * sv, rho * cv, z], -1)
        yuu = np.stack([-r * cu * cv, -r * cu * sv, -r * su], -1)
        yuv = np.stack([r * su * sv, -r * su * cv, z], -1)
        yvv = np.stack([-rho * cv, -rho * sv, z], -1)
        D = lambda a: _inv_stereo_d(y, a)  # noqa: E731
        DD = lambda a, b: _inv_stereo_dd(y, a, b)  # noqa: E731
        return (
            D(yu),
            D(yv),
            DD(yu, yu) + D(yuu),
            DD(yu, yv) + D(yuv),
            DD(yv, yv) + D(yvv),
        )

    def conformal_curvatures(self, u, v):
        """Closed form: R^3 curvatures of the tube transplanted by the conformal chart."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        y = self._y(u, v)
        n = self._n(u, v)
        kap_u = -1.0 / self.r
        kap_v = -np.cos(u) / (self.R + self.r * np.cos(u))
        s = 1.0 + np.sum(y * y, -1)
        yn = np.sum(y * n, -1)
        a = s * kap_u / 2.0 + yn
        b = s * kap_v / 2.0 + yn
        return np.maximum(a, b), np.minimum(a, b)

    def mesh(self, res: int) -> SurfaceMesh:
        if res < 3:
            raise InvalidInputError("torus resolution must be >= 3")
        t = 2 * np.pi * np.arange(res) / res
        uu, vv = np.meshgrid(t, t, indexing="ij")
        uu, vv = uu.ravel(), vv.ravel()
        pts = self.point(uu, vv)
        nrm = self.normal(uu, vv)
        faces = _grid_faces(res, res, lambda i, j: (i % res) * res + (j % res), pts)
        faces = _orient_faces(pts, faces, nrm)
        k1, k2 = self.principal_curvatures(uu, vv)
        return SurfaceMesh(
            pts, faces, nrm, k1, k2, genus=1, chart=self, uv=np.column_stack([uu, vv]),
            curvature_source="chart", meta={"generator": self.name, "R": self.R, "r": self.r, "res": res},
        )


def make_geodesic_sphere(p, r: float, res: int) -> SurfaceMesh:
    return GeodesicSphere(p, r).mesh(res)


def make_flat_torus(a: float, res: int) -> SurfaceMesh:
    return FlatTorus(a).mesh(res)


def make_clifford_torus(res: int) -> SurfaceMesh:
    return FlatTorus(1.0 / np.sqrt(2.0)).mesh(res)


def make_revolution_torus(R: float, r: float, res: int) -> SurfaceMesh:
    return RevolutionTorus(R, r).mesh(res)


# ---------------------------------------------------------------------------
# curvature estimation and quadrature
# ---------------------------------------------------------------------------


def estimate_curvatures(mesh: SurfaceMesh, force: bool = False, rings: int = 2) -> SurfaceMesh:
    """Quadric-fit principal curvatures.

    Meshes carrying exact curvature data are returned unchanged unless
    ``force`` is set.
    """
    if mesh.exact_curvature and not force:
        return mesh
    indptr, indices = ring_neighbours(mesh.n_vertices, mesh.faces, rings)
    k1, k2 = kernels.quadric_curvatures(mesh.vertices, mesh.normals, indptr, indices)
    return mesh.replace(k1=k1, k2=k2, curvature_source="estimated", vertex_area=mesh.vertex_area)


def area(mesh: SurfaceMesh) -> float:
    return integrate(mesh, 1.0)


def integrate(mesh: SurfaceMesh, f) -> float:
    f = np.broadcast_to(np.asarray(f, dtype=float), (mesh.n_vertices,))
    return float(np.dot(f, mesh.vertex_area))


def gauss_bonnet_defect(mesh: SurfaceMesh) -> float:
    """``int (1 + k1 k2) - 2 pi (2 - 2g)``."""
    return integrate(mesh, mesh.K) - 2.0 * np.pi * (2 - 2 * mesh.genus)


# ---------------------------------------------------------------------------
# closest point and signed distance against the triangles
# ---------------------------------------------------------------------------


class MeshLocator:
    """Nearest-triangle queries and inside/outside tests for a fixed mesh.

    A KD-tree over face centroids proposes ``k`` candidate faces per query;
    exact point-triangle distances pick the winner, ties going to the lowest
    face index. Signs come from ray parity after stereographic projection
    from a reference point far from the surface.
    """

    def __init__(self, mesh: SurfaceMesh, k: int = 16):
        self.mesh = mesh
        v, f = mesh.vertices, mesh.faces
        self.centroids = (v[f[:, 0]] + v[f[:, 1]] + v[f[:, 2]]) / 3.0
        self.tree = cKDTree(self.centroids)
        self.k = min(k, len(f))
        self._reference = None

    def closest(self, x):
        """``(points, faces, normals, chord)`` of the nearest mesh point."""
        x = np.atleast_2d(np.asarray(x, float))
        _, cand = self.tree.query(x, k=self.k)
        cand = np.sort(np.asarray(cand, dtype=np.int64).reshape(len(x), -1), axis=1)
        pts, face, d2 = kernels.closest_candidates(x, self.mesh.vertices, self.mesh.faces, cand)
        nrm = self._interp_normal(pts, face)
        return pts, face, nrm, np.sqrt(d2)

    def _interp_normal(self, pts, face):
        tri = self.mesh.faces[face]
        a, b, c = (self.mesh.vertices[tri[:, k]] for k in range(3))
        v0, v1, v2 = b - a, c - a, pts - a
        d00, d01, d11 = np.sum(v0 * v0, 1), np.sum(v0 * v1, 1), np.sum(v1 * v1, 1)
        d20, d21 = np.sum(v2 * v0, 1), np.sum(v2 * v1, 1)
        den = d00 * d11 - d01 * d01
        wb = (d11 * d20 - d01 * d21) / den
        wc = (d00 * d21 - d01 * d20) / den
        wa = 1.0 - wb - wc
        n = self.mesh.normals
        out = wa[:, None] * n[tri[:, 0]] + wb[:, None] * n[tri[:, 1]] + wc[:, None] * n[tri[:, 2]]
        return out / np.linalg.norm(out, axis=1, keepdims=True)

    def unsigned_distance(self, x) -> np.ndarray:
        _, _, _, chord = self.closest(x)
        return geodesic_radius(np.minimum(chord, 2.0))

    def reference(self):
        """``(point, side)``: a pole far from the mesh and +1 if it lies in ``A*``."""
        if self._reference is None:
            cands = np.vstack([np.eye(4), -np.eye(4)])
            pts, _, nrm, chord = self.closest(cands)
            i = int(np.argmax(chord))
            side = 1.0 if float((cands[i] - pts[i]) @ nrm[i]) > 0 else -1.0
            self._reference = (cands[i], side)
        return self._reference

    def _projected(self, pole):
        q, _ = np.linalg.qr(np.column_stack([pole, np.eye(4)]))
        basis = q[:, 1:4]
        tris = stereographic(pole, self.mesh.vertices) @ basis
        return basis, tris[self.mesh.faces]

    def side(self, x) -> np.ndarray:
        """+1 for points in ``A*``, -1 for points in ``A``."""
        x = np.atleast_2d(np.asarray(x, float))
        pole, side = self.reference()
        basis, tris = self._projected(pole)
        origins = stereographic(pole, x) @ basis
        parity, amb = kernels.ray_parity(origins, tris)
        if np.any(amb):
            rng = np.random.default_rng(12345)
            rot, _ = np.linalg.qr(rng.standard_normal((3, 3)))
            p2, _ = kernels.ray_parity_numpy(origins[amb] @ rot, tris @ rot)
            parity[amb] = p2
        return np.where(parity % 2 == 0, side, -side)

    def signed_distance(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        d = self.unsigned_distance(x)
        out = d * self.side(x)
        return np.where(d <= 1e-12, 0.0, out)


# ---------------------------------------------------------------------------
# S3MESH text format
# ---------------------------------------------------------------------------


def write_s3mesh(mesh: SurfaceMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("S3MESH 1\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} {mesh.genus}\n")
        for block in (mesh.vertices, mesh.normals):
            for row in block:
                fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")
        for f in mesh.faces:
            fh.write(f"{f[0]} {f[1]} {f[2]}\n")


def read_s3mesh(path) -> SurfaceMesh:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["S3MESH", "1"]:
        raise InvalidInputError(f"{path}: not an S3MESH v1 file")
    try:
        nv, nf, g = (int(t) for t in lines[1].split())
        body = lines[2 : 2 + 2 * nv + nf]
        if len(body) != 2 * nv + nf:
            raise ValueError("truncated file")
        verts = np.array([[float(t) for t in ln.split()] for ln in body[:nv]])
        nrm = np.array([[float(t) for t in ln.split()] for ln in body[nv : 2 * nv]])
        faces = np.array([[int(t) for t in ln.split()] for ln in body[2 * nv :]], dtype=np.int64)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: malformed S3MESH body ({exc})") from exc
    return SurfaceMesh(verts.reshape(nv, 4), faces.reshape(nf, 3), nrm.reshape(nv, 4), genus=g,
                       meta={"source": str(path)})


__all__ = [
    "SurfaceMesh",
    "ParametricSurface",
    "FlatTorus",
    "GeodesicSphere",
    "RevolutionTorus",
    "MeshLocator",
    "make_geodesic_sphere",
    "make_flat_torus",
    "make_clifford_torus",
    "make_revolution_torus",
    "estimate_curvatures",
    "estimate_normals",
    "mixed_vertex_areas",
    "triangle_areas",
    "ring_neighbours",
    "area",
    "integrate",
    "gauss_bonnet_defect",
    "write_s3mesh",
    "read_s3mesh",
]
