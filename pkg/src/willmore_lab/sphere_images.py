"""Exact images of caps, half-spaces and hemispheres under the maps ``F_v``.

Everything here is closed-form; nothing depends on meshes or quadrature, so
these routines double as a bit-exact test bed for the mesh pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousCenterError, DegenerateImageError, InvalidInputError
from .s3 import GeodesicBall, geodesic_radius, normalize

DEGENERATE_TOL = 1e-12
DEGENERATE_SHIFT = 1e-8


@dataclass(frozen=True)
class EuclideanBall4:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidInputError("ball radius must be non-negative")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(4))

    def contains(self, x, closed: bool = False) -> np.ndarray:
        d = np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)
        return d <= self.radius if closed else d < self.radius


@dataclass(frozen=True)
class CapSpec:
    """The cap ``{x in S^3 : <x - h, h> >= 0}``."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(4)
        nh = np.linalg.norm(h)
        if not (0.0 < nh <= 1.0 + 1e-12):
            raise InvalidInputError(f"cap vector must satisfy 0 < |h| <= 1, got {nh}")
        object.__setattr__(self, "h", h)

    @classmethod
    def from_ball(cls, center, radius: float) -> "CapSpec":
        """Cap equal to the closed geodesic ball of ``radius <= pi/2``."""
        if not (0.0 <= radius < np.pi / 2 + 1e-15):
            raise InvalidInputError("caps represent geodesic balls of radius < pi/2")
        return cls(np.cos(radius) * normalize(center))

    def as_ball(self) -> GeodesicBall:
        nh = float(np.linalg.norm(self.h))
        return GeodesicBall(self.h / nh, float(np.arccos(min(nh, 1.0))))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.h) @ self.h >= 0.0


@dataclass(frozen=True)
class ImageBall:
    """A geodesic ball together with how it was obtained."""

    ball: GeodesicBall
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def center(self) -> np.ndarray:
        return self.ball.center

    @property
    def radius(self) -> float:
        return self.ball.radius

    @property
    def chord(self) -> float:
        return self.ball.chord


def inversion_halfspace(h) -> EuclideanBall4:
    """Image of ``{<x - h, h> >= 0}`` under ``x -> x/|x|^2`` (a closed ball)."""
    h = np.asarray(h, dtype=float).reshape(4)
    nh2 = float(h @ h)
    if nh2 <= 1e-24:
        raise InvalidInputError("half-space vector must be non-zero")
    return EuclideanBall4(h / (2.0 * nh2), 1.0 / (2.0 * np.sqrt(nh2)))


def _chord_to_ball(center, chord_sq: float) -> GeodesicBall:
    chord = np.sqrt(min(max(chord_sq, 0.0), 4.0))
    return GeodesicBall(center, geodesic_radius(chord))


def _cap_image_raw(v: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, float]:
    vv = float(v @ v)
    hh = float(h @ h)
    hv = float(h @ v)
    q = (1.0 - vv) * h - 2.0 * (hh - hv) * v
    nq = float(np.linalg.norm(q))
    if nq <= 1e-12:
        raise DegenerateImageError("cap image centre vector vanishes")
    r_sq = 2.0 * (1.0 - (hh * (1.0 + vv) - 2.0 * hv) / nq)
    return q / nq, r_sq


def image_of_cap(v, cap: CapSpec) -> ImageBall:
    """``F_v(cap)`` as a geodesic ball.

    The closed form covers both the case where ``v`` lies in the half-space
    and the case where it does not (the centre flips sign automatically). On
    the separating hyperplane ``|h|^2 = <h, v>`` the image is taken as the
    average of the two one-sided limits.
    """
    v = np.asarray(v, dtype=float).reshape(4)
    if float(v @ v) >= 1.0:
        raise InvalidInputError("|v| must be < 1")
    h = cap.h
    hh = float(h @ h)
    gap = hh - float(h @ v)
    meta = {"degenerate": False, "v_in_halfspace": bool(gap > 0)}
    if abs(gap) <= DEGENERATE_TOL:
        shift = DEGENERATE_SHIFT * h / np.sqrt(hh)
        c_plus, r_plus = _cap_image_raw(v + shift, h)
        c_minus, r_minus = _cap_image_raw(v - shift, h)
        center = normalize(c_plus + c_minus)
        r_sq = 0.5 * (r_plus + r_minus)
        meta.update(
            degenerate=True,
            one_sided_center_gap=float(np.linalg.norm(c_plus - c_minus)),
            one_sided_chord_sq_gap=float(abs(r_plus - r_minus)),
        )
    else:
        center, r_sq = _cap_image_raw(v, h)
    return ImageBall(_chord_to_ball(center, r_sq), meta)


def image_of_geodesic_ball(v, x) -> ImageBall:
    """``F_v`` of the closed hemisphere centred at ``x``."""
    v = np.asarray(v, dtype=float).reshape(4)
    x = normalize(x).reshape(4)
    xv = float(x @ v)
    q = (1.0 - float(v @ v)) * x + 2.0 * xv * v
    nq = float(np.linalg.norm(q))
    if nq <= 1e-12:
        raise DegenerateImageError("hemisphere image centre vector vanishes")
    return ImageBall(_chord_to_ball(q / nq, 2.0 * (1.0 + 2.0 * xv / nq)))


def image_of_ball(v, ball: GeodesicBall) -> GeodesicBall:
    """``F_v`` of an arbitrary geodesic ball (complements handled for radius > pi/2)."""
    if ball.radius <= np.pi / 2:
        if ball.radius == np.pi / 2:
            return image_of_geodesic_ball(v, ball.center).ball
        if ball.radius == 0.0:
            from .conformal import apply_F

            return GeodesicBall(apply_F(v, ball.center), 0.0)
        return image_of_cap(v, CapSpec.from_ball(ball.center, ball.radius)).ball
    return image_of_ball(v, ball.complement()).complement()


def euclidean_to_geodesic_cap(ball: EuclideanBall4) -> ImageBall:
    """The geodesic ball cut out of S^3 by a Euclidean ball."""
    q = ball.center
    nq = float(np.linalg.norm(q))
    if nq <= 1e-15:
        raise AmbiguousCenterError("Euclidean ball centred at the origin meets S^3 in all or nothing")
    if (1.0 - nq) ** 2 > ball.radius**2:
        return ImageBall(GeodesicBall(q / nq, 0.0), {"empty": True})
    r_sq = 2.0 + (ball.radius**2 - nq**2 - 1.0) / nq
    return ImageBall(_chord_to_ball(q / nq, r_sq), {"empty": False})


def geodesic_cap_to_euclidean(ball: GeodesicBall) -> EuclideanBall4:
    """Euclidean data ``(Q, 2 sin(r/2))`` of a geodesic ball."""
    return EuclideanBall4(ball.center, ball.chord)


def complement_cap(center, alpha: float) -> EuclideanBall4:
    """Closed Euclidean ball about ``-center`` cutting out the complement of the angle-``alpha`` cap."""
    q = normalize(center).reshape(4)
    return EuclideanBall4(-q, float(np.sqrt(2.0 * (1.0 + np.cos(alpha)))))


def apply_F_composed(v, x) -> np.ndarray:
    """``F_v`` evaluated as dilation . translation . inversion . translation."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    lam = 1.0 - float(v @ v)
    y = x - v
    y = y / np.sum(y * y, axis=-1, keepdims=True)
    y = y - v / lam
    return lam * y


def halfspace_image(v, h) -> tuple[EuclideanBall4, bool]:
    """``F_v(E)`` in R^4 for ``E = {<x - h, h> >= 0}``.

    Returns the Euclidean ball and a flag that is ``True`` when the image is
    the ball itself and ``False`` when it is the ball's exterior.
    """
    v = np.asarray(v, dtype=float).reshape(4)
    h = np.asarray(h, dtype=float).reshape(4)
    vv = float(v @ v)
    gap = float(h @ h) - float(h @ v)
    if abs(gap) <= DEGENERATE_TOL:
        raise DegenerateImageError("v lies on the boundary hyperplane; the image is a half-space")
    q = (1.0 - vv) * h / (2.0 * gap) - v
    r = (1.0 - vv) * np.linalg.norm(h) / (2.0 * abs(gap))
    return EuclideanBall4(q, r), gap > 0


def annulus_region_mask(p, n, r: float, x) -> np.ndarray:
    """Membership in S^3 minus the two radius-``r`` balls tangent to the great sphere at ``p``."""
    p = np.asarray(p, dtype=float)
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    chord = np.sqrt(2.0 * (1.0 - np.cos(r)))
    c1 = np.cos(r) * p + np.sin(r) * n
    c2 = np.cos(r) * p - np.sin(r) * n
    return (np.linalg.norm(x - c1, axis=-1) >= chord) & (np.linalg.norm(x - c2, axis=-1) >= chord)


def predicted_limit_ball(p, n, k_angle: float) -> tuple[np.ndarray, float]:
    """Centre and chord radius of the limit ball for the approach ratio ``tan(k_angle)``."""
    p = np.asarray(p, dtype=float)
    n = np.asarray(n, dtype=float)
    sk, ck = np.sin(k_angle), np.cos(k_angle)
    center = -sk * p - ck * n
    chord = np.sqrt(max(2.0 * (1.0 - sk), 0.0))
    return center, float(chord)


def great_sphere_samples(n_normal, count: int, seed: int = 0) -> np.ndarray:
    """Uniform samples of the great 2-sphere orthogonal to ``n_normal``."""
    nn = normalize(n_normal).reshape(4)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, 4))
    g -= np.outer(g @ nn, nn)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class AsymptoticFit:
    angle: float
    s_list: list
    t_list: list
    hemisphere_dev: list
    annulus_dev: list
    dev: list
    exponent: float
    constant: float
    c1_fit: float
    r_exclusion: float
    passed: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "angle": self.angle,
            "s_list": list(self.s_list),
            "t_list": list(self.t_list),
            "hemisphere_dev": list(self.hemisphere_dev),
            "annulus_dev": list(self.annulus_dev),
            "dev": list(self.dev),
            "exponent": self.exponent,
            "constant": self.constant,
            "c1_fit": self.c1_fit,
            "r_exclusion": self.r_exclusion,
            "pass": self.passed,
            **self.meta,
        }


def asymptotic_image_bounds(
    p,
    n,
    angle: float,
    s_list=(0.1, 0.05, 0.025, 0.0125),
    r_exclusion: float = 0.5,
    samples: int = 4000,
    seed: int = 0,
    min_exponent: float = 0.45,
) -> AsymptoticFit:
    """Measure how fast ``F_v`` of the hemisphere about ``-n`` approaches its limit ball.

    ``v = (1 - s)(cos t p + sin t n)`` with ``t = s tan(angle)``. Two deviations
    are tracked per ``s``: on the boundary great sphere of the hemisphere, and
    on the region outside the two tangent balls of radius ``r_exclusion``
    (whose image must sit in a thin shell around the limit sphere). The
    exponent is fitted to the larger of the two in log-log.
    """
    from .conformal import apply_F

    p = normalize(p).reshape(4)
    n = np.asarray(n, dtype=float).reshape(4)
    if abs(float(p @ n)) > 1e-12:
        raise InvalidInputError("n must be tangent at p")
    k = np.tan(angle)
    q_bar, r_bar = predicted_limit_ball(p, n, angle)
    boundary = great_sphere_samples(n, samples, seed)
    rng = np.random.default_rng(seed + 1)
    pool = rng.standard_normal((samples * 8, 4))
    pool /= np.linalg.norm(pool, axis=1, keepdims=True)
    region = pool[annulus_region_mask(p, n, r_exclusion, pool)][:samples]
    hemi, ann, both, ts = [], [], [], []
    c1 = 0.0
    for s in s_list:
        t = s * k
        v = (1.0 - s) * (np.cos(t) * p + np.sin(t) * n)
        img_b = apply_F(v, boundary)
        img_r = apply_F(v, region)
        d_b = float(np.max(np.abs(np.linalg.norm(img_b - q_bar, axis=1) - r_bar)))
        d_r = float(np.max(np.abs(np.linalg.norm(img_r - q_bar, axis=1) - r_bar)))
        hemi.append(d_b)
        ann.append(d_r)
        both.append(max(d_b, d_r))
        ts.append(t)
        c1 = max(c1, d_r / np.sqrt(np.hypot(s, t)))
    ls = np.log(np.asarray(s_list, dtype=float))
    ld = np.log(np.maximum(np.asarray(both), 1e-300))
    e, c = np.polyfit(ls, ld, 1)
    return AsymptoticFit(
        angle=float(angle),
        s_list=[float(s) for s in s_list],
        t_list=ts,
        hemisphere_dev=hemi,
        annulus_dev=ann,
        dev=both,
        exponent=float(e),
        constant=float(np.exp(c)),
        c1_fit=float(c1),
        r_exclusion=float(r_exclusion),
        passed=bool(e >= min_exponent),
        meta={"q_bar": q_bar.tolist(), "r_bar_chord": r_bar, "hemisphere_exact": bool(max(hemi) < 1e-12)},
    )


def default_frame() -> tuple[np.ndarray, np.ndarray]:
    p = np.array([1.0, 0.0, 0.0, 0.0])
    n = np.array([0.0, 0.0, 1.0, 0.0])
    return p, n


__all__ = [
    "AsymptoticFit",
    "CapSpec",
    "EuclideanBall4",
    "ImageBall",
    "annulus_region_mask",
    "apply_F_composed",
    "asymptotic_image_bounds",
    "complement_cap",
    "default_frame",
    "euclidean_to_geodesic_cap",
    "geodesic_cap_to_euclidean",
    "great_sphere_samples",
    "halfspace_image",
    "image_of_ball",
    "image_of_cap",
    "image_of_geodesic_ball",
    "inversion_halfspace",
    "predicted_limit_ball",
]
