"""Centered dilations ``F_v`` of S^3, tubular coordinates and the collapse map ``T``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, OutOfTubeError
from .surface import MeshLocator, SurfaceMesh, estimate_curvatures

V_MAX = 1.0 - 1e-9


@dataclass(frozen=True, eq=False)
class ConformalParameter:
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).reshape(4)
        if not np.all(np.isfinite(v)) or np.linalg.norm(v) >= V_MAX:
            raise InvalidInputError(f"|v| = {np.linalg.norm(v)} must be < 1 - 1e-9")
        object.__setattr__(self, "v", v)

    def __array__(self, dtype=None, copy=None):
        return self.v if dtype is None else self.v.astype(dtype)

    @property
    def inverse(self) -> "ConformalParameter":
        return ConformalParameter(-self.v)


def as_parameter(v) -> np.ndarray:
    if isinstance(v, ConformalParameter):
        return v.v
    return ConformalParameter(v).v


def apply_F(v, x) -> np.ndarray:
    """``F_v(x) = (1 - |v|^2)(x - v)/|x - v|^2 - v``; the inverse is ``F_{-v}``."""
    v = as_parameter(v)
    x = np.asarray(x, dtype=float)
    d = x - v
    return (1.0 - v @ v) * d / np.sum(d * d, axis=-1, keepdims=True) - v


def conformal_factor(v, x) -> np.ndarray:
    """Length scaling of ``DF_v`` at ``x``."""
    v = as_parameter(v)
    d = np.asarray(x, dtype=float) - v
    return (1.0 - v @ v) / np.sum(d * d, axis=-1)


def pushforward_normal(v, x, n, check: bool = True) -> np.ndarray:
    """Unit normal at ``F_v(x)``: ``N + 2<N, v>(x - v)/|x - v|^2`` (already unit)."""
    v = as_parameter(v)
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    if check:
        if np.any(np.abs(np.sum(x * n, -1)) > 1e-10):
            raise InvalidInputError("normal is not tangent to S^3 at x")
        if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-10):
            raise InvalidInputError("normal is not unit length")
    d = x - v
    return n + 2.0 * np.sum(n * v, -1, keepdims=True) * d / np.sum(d * d, -1, keepdims=True)


def pushforward_curvature(v, x, n, k) -> np.ndarray:
    """Principal curvature of ``F_v(Sigma)`` at ``F_v(x)`` along the image direction."""
    v = as_parameter(v)
    d = np.asarray(x, dtype=float) - v
    return (np.asarray(k) * np.sum(d * d, -1) + 2.0 * np.sum(np.asarray(n) * v, -1)) / (1.0 - v @ v)


def transform_mesh(v, mesh: SurfaceMesh, reestimate: bool = False) -> SurfaceMesh:
    """``F_v`` applied to a mesh.

    Exact curvature data (chart or previously pushed) is carried through the
    conformal factor; estimated data is re-estimated on the image, as is
    everything when ``reestimate`` is set.
    """
    v = as_parameter(v)
    x, n = mesh.vertices, mesh.normals
    verts = apply_F(v, x)
    nrm = pushforward_normal(v, x, n, check=False)
    keep_chart = mesh.chart is not None and mesh.conformal is None
    meta = dict(mesh.meta)
    meta["conformal_v"] = v.tolist()
    common = dict(
        genus=mesh.genus,
        chart=mesh.chart if keep_chart else None,
        uv=mesh.uv if keep_chart else None,
        conformal=v.copy() if keep_chart else None,
        meta=meta,
    )
    if mesh.exact_curvature and not reestimate:
        k1 = pushforward_curvature(v, x, n, mesh.k1)
        k2 = pushforward_curvature(v, x, n, mesh.k2)
        return SurfaceMesh(verts, mesh.faces, nrm, np.maximum(k1, k2), np.minimum(k1, k2),
                           curvature_source="pushed", **common)
    out = SurfaceMesh(verts, mesh.faces, nrm, **common)
    return estimate_curvatures(out) if mesh.has_curvature or reestimate else out


def area_drop_integral(mesh: SurfaceMesh, w) -> float:
    """``4 * int <w, N>^2 / |x - w|^4``: the area lost by ``F_w`` on a minimal surface."""
    w = as_parameter(w)
    d = mesh.vertices - w
    f = 4.0 * (mesh.normals @ w) ** 2 / np.sum(d * d, 1) ** 2
    return float(f @ mesh.vertex_area)


# ---------------------------------------------------------------------------
# tubular neighbourhood
# ---------------------------------------------------------------------------


def self_distance(mesh: SurfaceMesh, samples: int = 400, seed: int = 0, cos_tol: float = 0.95) -> float:
    """Shortest geodesic chord leaving and meeting the surface along its normals.

    Estimated over a seeded subsample of base vertices against all vertices.
    Returns ``pi`` when no such pair exists.
    """
    x, n = mesh.vertices, mesh.normals
    rng = np.random.default_rng(seed)
    base = np.sort(rng.choice(len(x), size=min(samples, len(x)), replace=False))
    e = mesh.edges
    local = 3.0 * float(np.max(np.linalg.norm(x[e[:, 0]] - x[e[:, 1]], axis=1)))
    best = np.pi
    for s in range(0, len(base), 128):
        i = base[s : s + 128]
        c = np.clip(x[i] @ x.T, -1.0, 1.0)
        dist = np.arccos(c)
        # initial directions of the geodesics i -> j and j -> i
        fwd = x[None, :, :] - c[:, :, None] * x[i][:, None, :]
        bwd = x[i][:, None, :] - c[:, :, None] * x[None, :, :]
        nf = np.linalg.norm(fwd, axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            a_i = np.abs(np.einsum("ijk,ik->ij", fwd, n[i])) / nf
            a_j = np.abs(np.einsum("ijk,jk->ij", bwd, n)) / nf
        ok = (dist > local) & (a_i >= cos_tol) & (a_j >= cos_tol)
        if np.any(ok):
            best = min(best, float(dist[ok].min()))
    return best


def default_eps(mesh: SurfaceMesh) -> float:
    """``0.4 * min(1 / max|k|, self_distance / 2)``."""
    kmax = float(np.max(np.abs(np.r_[mesh.k1, mesh.k2]))) if mesh.has_curvature else 0.0
    focal = 1.0 / kmax if kmax > 0 else np.inf
    return 0.4 * min(focal, self_distance(mesh) / 2.0)


@dataclass(frozen=True, eq=False)
class TubularCoord:
    p: np.ndarray
    normal: np.ndarray
    s: tuple
    eps: float

    def __post_init__(self):
        s1, s2 = (float(c) for c in self.s)
        if s1 < 0:
            raise InvalidInputError("tubular coordinate s1 must be >= 0")
        if np.hypot(s1, s2) >= 3 * self.eps:
            raise OutOfTubeError("|s| must be < 3 eps")
        object.__setattr__(self, "s", (s1, s2))

    def point(self) -> np.ndarray:
        return lambda_point(self.p, self.normal, self.s)


def lambda_point(p, n, s) -> np.ndarray:
    """``(1 - s1)(cos s2 p + sin s2 N)``."""
    s = np.asarray(s, dtype=float)
    s1, s2 = s[..., 0:1], s[..., 1:2]
    return (1.0 - s1) * (np.cos(s2) * np.asarray(p) + np.sin(s2) * np.asarray(n))


class TubeContext:
    """Nearest-point data for a surface and a tube half-width ``eps``.

    Chart-backed meshes use the exact chart projection; other meshes fall back
    to triangle queries.
    """

    def __init__(self, mesh: SurfaceMesh, eps: float | None = None):
        self.mesh = mesh
        self.eps = float(default_eps(mesh) if eps is None else eps)
        if self.eps <= 0:
            raise InvalidInputError("tube half-width must be positive")
        self._exact = mesh.chart is not None and mesh.conformal is None
        self._locator = None if self._exact else MeshLocator(mesh)

    def project(self, y):
        """``(p, N, d)``: nearest point, its normal and the signed distance of ``y``."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if self._exact:
            p, n = self.mesh.chart.closest_point(y)
            d = self.mesh.chart.signed_distance(y)
        else:
            p, _, n, _ = self._locator.closest(y)
            p = p / np.linalg.norm(p, axis=1, keepdims=True)
            n = n - np.sum(n * p, 1, keepdims=True) * p
            n /= np.linalg.norm(n, axis=1, keepdims=True)
            d = self._locator.signed_distance(y)
        return p, n, d

    def coordinates(self, x):
        """``(p, N, s1, s2)`` with ``x = Lambda(p, s)`` (no tube check)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        y = x / np.where(r > 0, r, 1.0)[:, None]
        y[r == 0] = self.mesh.vertices[0]
        p, n, d = self.project(y)
        return p, n, 1.0 - r, d


def lambda_invert(x, ctx: TubeContext):
    p, n, s1, s2 = ctx.coordinates(x)
    if np.any(np.hypot(s1, s2) >= 3 * ctx.eps) or np.any(s1 < -1e-12):
        raise OutOfTubeError("point lies outside the tube of half-width 3 eps")
    return p, n, np.column_stack([np.maximum(s1, 0.0), s2])


def lambda_coord(p=None, n=None, s=None, direction: str = "build", x=None, ctx: TubeContext | None = None):
    """Build ``Lambda(p, s)`` or invert a point back to ``(p, N, s)``."""
    if direction == "build":
        return lambda_point(p, n, s)
    if direction == "invert":
        if ctx is None or x is None:
            raise InvalidInputError("inversion needs the point x and a TubeContext")
        return lambda_invert(x, ctx)
    raise InvalidInputError(f"unknown direction {direction!r}")


def phi_smoothstep(r, eps: float) -> np.ndarray:
    """0 on [0, eps], cubic smoothstep on [eps, 2 eps], 1 beyond."""
    tau = np.clip((np.asarray(r, dtype=float) - eps) / eps, 0.0, 1.0)
    return tau * tau * (3.0 - 2.0 * tau)


def retraction_T(x, ctx: TubeContext) -> np.ndarray:
    """Collapse ``Omega_eps`` onto the surface, identity outside ``Omega_{3 eps}``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = x.copy()
    r = np.linalg.norm(x, axis=1)
    near = (1.0 - r) < 3 * ctx.eps
    if not np.any(near):
        return out
    p, n, s1, s2 = ctx.coordinates(x[near])
    mag = np.hypot(s1, s2)
    inside = mag < 3 * ctx.eps
    scale = phi_smoothstep(mag[inside], ctx.eps)
    s = np.column_stack([s1[inside], s2[inside]]) * scale[:, None]
    idx = np.flatnonzero(near)[inside]
    out[idx] = lambda_point(p[inside], n[inside], s)
    return out
