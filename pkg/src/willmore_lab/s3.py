"""Geometry of the round unit 3-sphere in R^4.

Functions accept single 4-vectors or stacks of shape ``(..., 4)``; the small
dataclasses below are conveniences for the scalar API.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, PoleError

NORM_TOL = 1e-12
VOL_S3 = 2.0 * np.pi**2


def _as4(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape[-1:] != (4,):
        raise InvalidInputError(f"expected trailing dimension 4, got shape {a.shape}")
    return a


def normalize(x) -> np.ndarray:
    a = _as4(x)
    n = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise InvalidInputError("cannot normalize the zero vector")
    return a / n


@dataclass(frozen=True, eq=False)
class SpherePoint:
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", normalize(self.coords).reshape(4))

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, SpherePoint) and bool(np.array_equal(self.coords, other.coords))

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __neg__(self):
        return SpherePoint(-self.coords)


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: SpherePoint
    dir: np.ndarray
    unit: bool = False

    def __post_init__(self):
        d = _as4(self.dir).reshape(4)
        if abs(float(d @ self.base.coords)) > 1e-12:
            raise InvalidInputError("tangent vector is not orthogonal to its base point")
        if self.unit and abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InvalidInputError("normal vector flagged unit but |dir| != 1")
        object.__setattr__(self, "dir", d)

    def __array__(self, dtype=None, copy=None):
        return self.dir if dtype is None else self.dir.astype(dtype)


@dataclass(frozen=True)
class GeodesicBall:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not (0.0 <= self.radius <= np.pi):
            raise InvalidInputError(f"geodesic radius {self.radius} outside [0, pi]")
        object.__setattr__(self, "center", normalize(self.center).reshape(4))

    @property
    def chord(self) -> float:
        return chord_radius(self.radius)

    def contains(self, x) -> np.ndarray:
        return geodesic_distance(self.center, x) < self.radius

    def complement(self) -> "GeodesicBall":
        """Closure of the complement, as a ball about the antipode."""
        return GeodesicBall(-self.center, np.pi - self.radius)


def geodesic_distance(p, q) -> np.ndarray:
    c = np.clip(np.sum(_as4(p) * _as4(q), axis=-1), -1.0, 1.0)
    return np.arccos(c)


def exp_point(p, n, t) -> np.ndarray:
    """Point at arclength ``t`` along the great circle leaving ``p`` in direction ``n``."""
    p = _as4(p)
    n = _as4(n)
    if np.any(np.abs(np.sum(p * n, axis=-1)) > 1e-10):
        raise InvalidInputError("direction is not tangent at p")
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-10):
        raise InvalidInputError("direction is not unit length")
    t = np.asarray(t, dtype=float)[..., None]
    return np.cos(t) * p + np.sin(t) * n


def chord_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any((r < 0) | (r > np.pi)):
        raise InvalidInputError("geodesic radius outside [0, pi]")
    out = 2.0 * np.sin(r / 2.0)
    return float(out) if out.ndim == 0 else out


def geodesic_radius(chord):
    """Inverse of :func:`chord_radius` on [0, 2]."""
    c = np.asarray(chord, dtype=float)
    if np.any((c < 0) | (c > 2.0 + 1e-12)):
        raise InvalidInputError("chord length outside [0, 2]")
    out = 2.0 * np.arcsin(np.clip(c / 2.0, 0.0, 1.0))
    return float(out) if out.ndim == 0 else out


def stereographic(x, p) -> np.ndarray:
    """Project ``p`` from the pole ``x`` onto the hyperplane through 0 orthogonal to ``x``."""
    x = _as4(x)
    p = _as4(p)
    denom = 1.0 - np.sum(p * x, axis=-1, keepdims=True)
    if np.any(denom <= 1e-12):
        raise PoleError("point coincides with the projection pole")
    return x + (p - x) / denom


def inverse_stereographic(x, w) -> np.ndarray:
    x = _as4(x)
    w = _as4(w)
    s = 2.0 / (1.0 + np.sum(w * w, axis=-1, keepdims=True))
    return s * (w - x) + x


def tangent_frame(p, n) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal ``e1, e2`` completing ``(p, n)`` with ``det[e1, e2, n, p] > 0``."""
    p = _as4(p)
    n = _as4(n)
    shape = p.shape[:-1]
    flat_p = p.reshape(-1, 4)
    flat_n = n.reshape(-1, 4)
    e1 = np.empty_like(flat_p)
    e2 = np.empty_like(flat_p)
    eye = np.eye(4)
    for i in range(flat_p.shape[0]):
        m = np.column_stack([flat_p[i], flat_n[i], eye])
        q, _ = np.linalg.qr(m)
        a, b = q[:, 2], q[:, 3]
        if np.linalg.det(np.column_stack([a, b, flat_n[i], flat_p[i]])) < 0:
            b = -b
        e1[i], e2[i] = a, b
    return e1.reshape(shape + (4,)), e2.reshape(shape + (4,))


def uniform_sample_s3(n: int, seed: int) -> np.ndarray:
    """``n`` points uniform on S^3, as normalized standard Gaussians."""
    if n < 1:
        raise InvalidInputError("sample count must be >= 1")
    return sample_with(np.random.default_rng(seed), n)


def sample_with(rng: np.random.Generator, n: int) -> np.ndarray:
    g = rng.standard_normal((n, 4))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def worker_rngs(seed: int, workers: int) -> list[np.random.Generator]:
    """Independent generators, one per worker, derived from ``(seed, index)``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(workers)]


E1, E2, E3, E4 = np.eye(4)
