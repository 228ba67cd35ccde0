"""The canonical family ``Sigma_(v,t)``: immersion, area bound, regions, blow-up and degree."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .conformal import (
    ConformalParameter,
    apply_F,
    as_parameter,
    default_eps,
    lambda_point,
    pushforward_normal,
    transform_mesh,
)
from .errors import InconsistentCurvatureError, InvalidInputError
from .s3 import VOL_S3, chord_radius, geodesic_distance, normalize, sample_with, uniform_sample_s3
from .surface import MeshLocator, SurfaceMesh, gauss_bonnet_defect, integrate
from .willmore import willmore_energy


@dataclass(frozen=True, eq=False)
class FamilyPoint:
    v: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "v", as_parameter(self.v))
        if not (-np.pi <= self.t <= np.pi):
            raise InvalidInputError("t must lie in [-pi, pi]")


def p_map(v, t: float, x, n) -> np.ndarray:
    """``cos t F_v(x) + sin t N_v``."""
    return np.cos(t) * apply_F(v, x) + np.sin(t) * pushforward_normal(v, x, n)


def jacobian_psi(k1, k2, t):
    """``(cos t - k1 sin t)(cos t - k2 sin t)``."""
    c, s = np.cos(t), np.sin(t)
    return (c - np.asarray(k1) * s) * (c - np.asarray(k2) * s)


def jacobian_psi_expanded(k1, k2, t):
    """``1 + H^2 - (sin t + H cos t)^2 - (k1 - k2)^2 sin^2 t / 4``."""
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    H = 0.5 * (k1 + k2)
    return 1.0 + H * H - (np.sin(t) + H * np.cos(t)) ** 2 - 0.25 * (k1 - k2) ** 2 * np.sin(t) ** 2


def area_upper_bound(mesh: SurfaceMesh, v, t, mesh_v: SurfaceMesh | None = None):
    """``int max(Jac psi_(v,t), 0) dSigma_v``; ``t`` may be an array."""
    mv = mesh_v if mesh_v is not None else transform_mesh(v, mesh)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    jac = jacobian_psi(mv.k1[None, :], mv.k2[None, :], t_arr[:, None])
    out = np.maximum(jac, 0.0) @ mv.vertex_area
    return float(out[0]) if np.ndim(t) == 0 else out


@dataclass
class RosReport:
    willmore: float
    traceless_sq: float
    rows: list
    min_slack: float
    argmin: tuple
    tol: float

    @property
    def passed(self) -> bool:
        return self.min_slack >= -self.tol

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["v1", "v2", "v3", "v4", "t", "bound", "rhs", "slack"])
            for r in self.rows:
                w.writerow([f"{x:.12g}" for x in r])

    def summary(self, **extra) -> dict:
        return {
            "min_slack": self.min_slack,
            "argmin": {"v": list(self.argmin[0]), "t": self.argmin[1]},
            "willmore": self.willmore,
            "traceless_sq": self.traceless_sq,
            "tol": self.tol,
            "pass": self.passed,
            **extra,
        }

    def write_json(self, path, **extra) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(**extra), fh, indent=2)


def v_grid_points(per_axis: int, radius: float) -> np.ndarray:
    """Cartesian grid ``{-radius/2 .. radius/2}^4`` so every point has ``|v| <= radius``."""
    if per_axis == 1:
        return np.zeros((1, 4))
    axis = np.linspace(-radius / 2.0, radius / 2.0, per_axis)
    g = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), -1).reshape(-1, 4)
    return g


def verify_ros_inequality(mesh: SurfaceMesh, v_grid, t_grid, tol: float | None = None) -> RosReport:
    """Slack ``W - sin^2 t / 2 int|A0|^2 - bound(v, t)`` over the grid."""
    rep = willmore_energy(mesh)
    W, A0 = rep.willmore, rep.traceless_sq_integral
    tol = 0.01 * W if tol is None else tol
    t_grid = np.asarray(t_grid, dtype=float)
    rows = []
    for v in np.atleast_2d(np.asarray(v_grid, dtype=float)):
        bound = area_upper_bound(mesh, v, t_grid)
        rhs = W - 0.5 * np.sin(t_grid) ** 2 * A0
        for t, b, r in zip(t_grid, bound, rhs):
            rows.append((*v, t, b, r, r - b))
    slack = np.array([r[-1] for r in rows])
    i = int(np.argmin(slack))
    return RosReport(W, A0, rows, float(slack[i]), (tuple(rows[i][:4]), rows[i][4]), tol)


# ---------------------------------------------------------------------------
# signed distance and regions
# ---------------------------------------------------------------------------


def geodesic_ball_image(w, centers, radii):
    """``F_w(B_r(x))`` for many balls at once, as ``(centre, radius)`` arrays.

    One closed form covers every radius in ``(0, pi)``: with ``c = cos r``
    the image centre is ``Q/|Q|`` for ``Q = (1 - |w|^2) x - 2 (c - <x, w>) w``.
    """
    w = as_parameter(w)
    x = np.atleast_2d(np.asarray(centers, dtype=float))
    c = np.cos(np.asarray(radii, dtype=float))
    xw = x @ w
    ww = float(w @ w)
    q = (1.0 - ww) * x - 2.0 * (c - xw)[:, None] * w
    nq = np.linalg.norm(q, axis=1)
    chord_sq = 2.0 * (1.0 - (c * (1.0 + ww) - 2.0 * xw) / nq)
    rho = 2.0 * np.arcsin(np.sqrt(np.clip(chord_sq, 0.0, 4.0)) / 2.0)
    return q / nq[:, None], rho


class DistanceField:
    """Signed geodesic distance to a mesh surface, negative inside ``A``.

    ``method="exact"`` needs a chart-backed mesh, possibly carried through
    one ``F_v``. The distance to ``F_v(Sigma)`` is then the largest ``r``
    whose ball pulls back under ``F_{-v}`` to a ball still missing
    ``Sigma``, found by bisection against the chart distance. ``"mesh"``
    uses triangle queries and ray parity.
    """

    def __init__(self, mesh: SurfaceMesh, method: str = "auto"):
        exact_ok = mesh.chart is not None
        if method == "auto":
            method = "exact" if exact_ok else "mesh"
        if method == "exact" and not exact_ok:
            raise InvalidInputError("exact distances need a chart-backed mesh")
        if method not in ("exact", "mesh"):
            raise InvalidInputError(f"unknown distance method {method!r}")
        self.mesh = mesh
        self.method = method
        self._locator = MeshLocator(mesh) if method == "mesh" else None

    def __call__(self, x, iters: int = 60) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.method == "mesh":
            return self._locator.signed_distance(x)
        chart = self.mesh.chart
        v = self.mesh.conformal
        if v is None or not np.any(v):
            return chart.signed_distance(x)
        back = -np.asarray(v)
        side = np.sign(chart.signed_distance(apply_F(back, x)))
        lo = np.zeros(len(x))
        hi = np.full(len(x), np.pi)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            c, rho = geodesic_ball_image(back, x, mid)
            clear = rho <= np.abs(chart.signed_distance(c))
            lo = np.where(clear, mid, lo)
            hi = np.where(clear, hi, mid)
        return side * lo


def signed_distance(mesh_v: SurfaceMesh, x, method: str = "auto") -> np.ndarray:
    return DistanceField(mesh_v, method)(x)


@dataclass
class RegionSample:
    indicator: np.ndarray
    volume: float
    stderr: float
    t: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.volume <= VOL_S3 + 1e-12):
            raise InvalidInputError("region volume outside [0, 2 pi^2]")


def region_from_distances(d, t: float) -> RegionSample:
    ind = np.asarray(d) < t
    frac = float(np.mean(ind))
    return RegionSample(ind, VOL_S3 * frac, VOL_S3 * np.sqrt(frac * (1 - frac) / len(ind)), t)


def region_volume(mesh_v: SurfaceMesh, t: float, samples, method: str = "auto") -> RegionSample:
    """Monte Carlo volume of ``A_(v,t) = {d_v < t}``; ``samples`` is a point array or a count."""
    if np.ndim(samples) == 0:
        samples = uniform_sample_s3(int(samples), 0)
    return region_from_distances(signed_distance(mesh_v, samples, method), t)


def mc_noise_floor(n: int) -> float:
    """Standard error of a Monte Carlo volume of half of S^3 with ``n`` samples."""
    return VOL_S3 * 0.5 / np.sqrt(n)


# ---------------------------------------------------------------------------
# extended Gauss map and boundary blow-up
# ---------------------------------------------------------------------------


def k_to_theta(k) -> float:
    return float(np.arctan(k))


def extended_gauss(p, n, k=None, theta=None) -> np.ndarray:
    """``-sin(theta) p - cos(theta) N`` with ``theta = arctan k``."""
    th = k_to_theta(k) if theta is None else float(theta)
    return -np.sin(th) * np.asarray(p, dtype=float) - np.cos(th) * np.asarray(n, dtype=float)


def rbar(k=None, theta=None) -> float:
    th = k_to_theta(k) if theta is None else float(theta)
    return np.pi / 2.0 - th


def rbar_chord(k=None, theta=None) -> float:
    return chord_radius(rbar(k, theta))


@dataclass(frozen=True, eq=False)
class BlowupApproach:
    p: np.ndarray
    normal: np.ndarray
    theta: float
    s_sequence: tuple = (0.1, 0.05, 0.02)

    def __post_init__(self):
        if not (-np.pi / 2 <= self.theta <= np.pi / 2):
            raise InvalidInputError("approach angle must lie in [-pi/2, pi/2]")
        s = tuple(float(x) for x in self.s_sequence)
        if any(b >= a for a, b in zip(s, s[1:])) or min(s) <= 0:
            raise InvalidInputError("s_sequence must be positive and strictly decreasing")
        object.__setattr__(self, "s_sequence", s)
        object.__setattr__(self, "p", normalize(self.p).reshape(4))
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float).reshape(4))

    @classmethod
    def from_k(cls, p, n, k, s_sequence=(0.1, 0.05, 0.02)):
        return cls(p, n, k_to_theta(k), s_sequence)

    def tube_coords(self, s: float) -> tuple[float, float]:
        """``(s1, s2)`` with ``s2 / s1 -> tan theta``; normal approaches use ``s1 = s^2``."""
        c = np.cos(self.theta)
        s1 = s * c if c > 1e-12 else s * s
        return s1, s * np.sin(self.theta)

    def parameter(self, s: float) -> np.ndarray:
        v = lambda_point(self.p, self.normal, self.tube_coords(s))
        if np.linalg.norm(v) >= 1.0 - 1e-9:
            raise InvalidInputError("approach leaves the open unit ball")
        return v

    def predicted_ball(self, t: float) -> tuple[np.ndarray, float]:
        return extended_gauss(self.p, self.normal, theta=self.theta), rbar(theta=self.theta) + t


@dataclass
class BlowupResult:
    case: str
    s: list
    residual: list
    stderr: list
    noise_floor: float
    t: float
    meta: dict = field(default_factory=dict)

    @property
    def monotone(self) -> bool:
        """Strictly decreasing until the sample set resolves no difference at all."""
        return all(b < a or a == b == 0.0 for a, b in zip(self.residual, self.residual[1:]))

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "s": self.s,
            "residual": self.residual,
            "stderr": self.stderr,
            "noise_floor": self.noise_floor,
            "t": self.t,
            "monotone": self.monotone,
            **self.meta,
        }


def _sym_diff(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    frac = float(np.mean(a != b))
    return VOL_S3 * frac, VOL_S3 * np.sqrt(frac * (1 - frac) / len(a))


def blowup_residual(
    mesh: SurfaceMesh,
    approach: BlowupApproach | None,
    t: float,
    samples,
    case: str = "iv",
    v_limit=None,
    interior_point=None,
    s_sequence: Sequence[float] | None = None,
) -> BlowupResult:
    """Symmetric-difference volumes between ``A_(v_s, t)`` and the predicted limit.

    ``case="i"``: ``v_s = v_limit + s u`` for a fixed unit ``u``, compared with
    ``A_(v_limit, t)``. ``case="ii"``: ``v_s = (1 - s) q`` for an interior
    point ``q`` of ``A``, compared with ``B_{pi + t}(q)``. ``case="iv"``:
    ``v_s = Lambda(p, s(cos theta, sin theta))``, compared with
    ``B_{rbar + t}(Qbar)``.
    """
    x = samples if np.ndim(samples) else uniform_sample_s3(int(samples), 0)
    x = np.asarray(x, dtype=float)
    seq = tuple(s_sequence or (approach.s_sequence if approach is not None else (0.1, 0.05, 0.02)))
    res, err = [], []
    meta: dict = {}
    if case == "i":
        v0 = as_parameter(v_limit)
        ref = DistanceField(transform_mesh(v0, mesh))(x) < t
        u = normalize(np.array([0.3, -0.2, 0.5, 0.1]))
        params = [v0 + s * u for s in seq]
        targets = [ref] * len(seq)
        meta["v_limit"] = v0.tolist()
    elif case == "ii":
        q = normalize(interior_point).reshape(4)
        d0 = DistanceField(mesh)(q[None, :])[0]
        if d0 >= 0:
            raise InvalidInputError("case (ii) needs a point of A (negative signed distance)")
        params = [(1.0 - s) * q for s in seq]
        ball = geodesic_distance(q, x) < np.pi + t
        targets = [ball] * len(seq)
        meta["interior_point"] = q.tolist()
    elif case == "iv":
        if approach is None:
            raise InvalidInputError("case (iv) needs a BlowupApproach")
        params = [approach.parameter(s) for s in seq]
        center, radius = approach.predicted_ball(t)
        ball = geodesic_distance(center, x) < radius
        targets = [ball] * len(seq)
        meta.update(theta=approach.theta, predicted_center=center.tolist(), predicted_radius=radius)
    else:
        raise InvalidInputError(f"unknown blow-up case {case!r}")
    for v, target in zip(params, targets):
        ConformalParameter(v)
        region = DistanceField(transform_mesh(v, mesh))(x) < t
        r, e = _sym_diff(region, target)
        res.append(r)
        err.append(e)
    return BlowupResult(case, list(seq), res, err, mc_noise_floor(len(x)), t, meta)


# ---------------------------------------------------------------------------
# degree of the extended Gauss map
# ---------------------------------------------------------------------------


@dataclass
class DegreeReport:
    degree: float
    tube_integral: float
    closed_form: float
    vol_A: float
    vol_A_star: float
    eps: float
    genus: int
    gauss_bonnet_defect: float

    @property
    def tube_relative_error(self) -> float:
        return abs(self.tube_integral - self.closed_form) / abs(self.closed_form) if self.closed_form else abs(self.tube_integral)

    def to_dict(self) -> dict:
        return dict(self.__dict__, tube_relative_error=self.tube_relative_error)


def tube_integral(mesh: SurfaceMesh, eps: float, nodes: int = 64) -> float:
    """Quadrature of the pulled-back volume form over ``Sigma x [-eps, eps]``.

    The ``t``-integrand carries ``1/sqrt(eps^2 - t^2)``; Gauss-Legendre runs
    in ``theta`` with ``t = eps sin(theta)``.
    """
    th, wt = np.polynomial.legendre.leggauss(nodes)
    th = 0.5 * np.pi * th
    wt = 0.5 * np.pi * wt
    t = eps * np.sin(th)
    root = eps * np.cos(th)
    k1, k2 = mesh.k1[:, None], mesh.k2[:, None]
    dens = (-t / eps + root / eps * k1) * (-t / eps + root / eps * k2) * (-1.0) / root
    per_vertex = dens @ (wt * eps * np.cos(th))
    return integrate(mesh, per_vertex)


def degree_gauss_map(
    mesh: SurfaceMesh,
    eps: float | None = None,
    samples: int = 20000,
    seed: int = 0,
    gb_tol: float = 0.05 * 4 * np.pi,
) -> DegreeReport:
    """``(vol(A) + vol(A*) + tube integral) / 2 pi^2``."""
    if not mesh.has_curvature:
        raise InvalidInputError("degree computation needs curvature data")
    defect = gauss_bonnet_defect(mesh)
    if abs(defect) > gb_tol:
        raise InconsistentCurvatureError(
            f"Gauss-Bonnet defect {defect:.4g} exceeds {gb_tol:.4g} for genus {mesh.genus}"
        )
    eps = default_eps(mesh) if eps is None else float(eps)
    d = signed_distance(mesh, uniform_sample_s3(samples, seed))
    vol_a = VOL_S3 * float(np.mean(d < 0))
    vol_b = VOL_S3 * float(np.mean(d > 0))
    ti = tube_integral(mesh, eps)
    closed = np.pi**2 * (2 * mesh.genus - 2)
    return DegreeReport((vol_a + vol_b + ti) / VOL_S3, ti, closed, vol_a, vol_b, eps, mesh.genus, defect)


# ---------------------------------------------------------------------------
# concentration of the image area
# ---------------------------------------------------------------------------


@dataclass
class ConcentrationReport:
    radii: list
    values: list
    argmax: list
    meta: dict = field(default_factory=dict)

    @property
    def monotone(self) -> bool:
        order = np.argsort(self.radii)[::-1]
        vals = np.asarray(self.values)[order]
        return bool(np.all(np.diff(vals) <= 0))

    def to_dict(self) -> dict:
        return {"radii": self.radii, "values": self.values, "argmax": self.argmax, "monotone": self.monotone, **self.meta}


def mass_concentration(
    mesh: SurfaceMesh,
    v_grid,
    t_grid,
    radii: Iterable[float],
    n_top: int = 96,
    n_random: int = 32,
    seed: int = 0,
) -> ConcentrationReport:
    """Largest image area of ``P_(v,t)`` inside a geodesic ball of each radius.

    Mass is ``max(Jac, 0)`` times the area weight of ``Sigma_v``. Candidate
    centres per ``(v, t)`` are the heaviest image points, a seeded random
    subset of image points and uniform points of S^3.
    """
    radii = [float(r) for r in radii]
    chords = np.array([chord_radius(min(r, np.pi)) for r in radii])
    # radius pi means all of S^3 but one point
    chords[np.asarray(radii) >= np.pi] = 2.0 + 1e-9
    rng = np.random.default_rng(seed)
    best = np.zeros(len(radii))
    where = [None] * len(radii)
    t_grid = np.asarray(t_grid, dtype=float)
    for v in np.atleast_2d(np.asarray(v_grid, dtype=float)):
        mv = transform_mesh(v, mesh)
        for t in t_grid:
            pts = np.cos(t) * mv.vertices + np.sin(t) * mv.normals
            w = np.maximum(jacobian_psi(mv.k1, mv.k2, t), 0.0) * mv.vertex_area
            top = np.argsort(w)[-n_top:]
            pick = rng.choice(len(pts), size=min(n_random, len(pts)), replace=False)
            centres = np.vstack([pts[top], pts[pick], sample_with(rng, n_random)])
            keep = w > 0
            mass = kernels.ball_mass(centres, pts[keep], w[keep], chords)
            col = mass.max(axis=0)
            for i, val in enumerate(col):
                if val > best[i]:
                    best[i] = float(val)
                    where[i] = {"v": list(map(float, v)), "t": float(t)}
    return ConcentrationReport(radii, best.tolist(), where, {"n_top": n_top, "n_random": n_random, "seed": seed})


__all__ = [
    "FamilyPoint",
    "p_map",
    "jacobian_psi",
    "jacobian_psi_expanded",
    "area_upper_bound",
    "verify_ros_inequality",
    "RosReport",
    "v_grid_points",
    "geodesic_ball_image",
    "DistanceField",
    "signed_distance",
    "RegionSample",
    "region_volume",
    "region_from_distances",
    "mc_noise_floor",
    "extended_gauss",
    "rbar",
    "rbar_chord",
    "k_to_theta",
    "BlowupApproach",
    "BlowupResult",
    "blowup_residual",
    "DegreeReport",
    "tube_integral",
    "degree_gauss_map",
    "ConcentrationReport",
    "mass_concentration",
]
