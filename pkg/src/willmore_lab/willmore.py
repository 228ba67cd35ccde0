"""Willmore energy, conformal-invariance residuals and energy descent."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .conformal import transform_mesh
from .errors import InvalidInputError, OptimizerStallError
from .surface import (
    FlatTorus,
    RevolutionTorus,
    SurfaceMesh,
    estimate_curvatures,
    estimate_normals,
    integrate,
    ring_neighbours,
    unique_edges,
)

TWO_PI_SQ = 2.0 * np.pi**2


@dataclass(frozen=True)
class EnergyReport:
    area: float
    willmore: float
    traceless_sq_integral: float
    max_H: float

    def as_dict(self) -> dict:
        return asdict(self)


def willmore_energy(mesh: SurfaceMesh) -> EnergyReport:
    """``W = int (1 + H^2)`` and ``int |A0|^2 = int (k1 - k2)^2 / 2``."""
    if not mesh.has_curvature:
        raise InvalidInputError("willmore_energy needs curvature data")
    H = mesh.H
    return EnergyReport(
        area=integrate(mesh, 1.0),
        willmore=integrate(mesh, 1.0 + H * H),
        traceless_sq_integral=integrate(mesh, 0.5 * (mesh.k1 - mesh.k2) ** 2),
        max_H=float(np.max(np.abs(H))),
    )


def flat_torus_energy_closed_form(a) -> float | np.ndarray:
    """``pi^2 / (a b)`` with ``b = sqrt(1 - a^2)``."""
    a_arr = np.asarray(a, dtype=float)
    if np.any((a_arr <= 0) | (a_arr >= 1)):
        raise InvalidInputError("flat torus parameter must lie in (0, 1)")
    out = np.pi**2 / (a_arr * np.sqrt(1.0 - a_arr * a_arr))
    return float(out) if out.ndim == 0 else out


def conformal_invariance_residual(mesh: SurfaceMesh, v, reestimate: bool = False) -> float:
    """``|W(F_v Sigma) - W(Sigma)|``."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return 0.0
    w0 = willmore_energy(mesh).willmore
    return abs(willmore_energy(transform_mesh(v, mesh, reestimate=reestimate)).willmore - w0)


# ---------------------------------------------------------------------------
# optimisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    step: float = 0.05
    max_iters: int = 200
    grad_tol: float = 1e-3
    mode: str = "parametric"
    fd_step: float = 1e-5
    res: int = 64
    max_halvings: int = 30
    # accept when W drops by at least armijo * step * |g|^2; 0 means any strict decrease.
    # None picks 0.5 for parametric mode and 0 for mesh mode, whose gradient is only local
    armijo: float | None = None

    def __post_init__(self):
        if self.step <= 0 or self.grad_tol <= 0:
            raise InvalidInputError("step and grad_tol must be positive")
        if self.armijo is not None and not (0.0 <= self.armijo < 1.0):
            raise InvalidInputError("armijo constant must lie in [0, 1)")
        if self.mode not in ("parametric", "mesh"):
            raise InvalidInputError(f"unknown optimizer mode {self.mode!r}")

    @property
    def sufficient_decrease(self) -> float:
        if self.armijo is not None:
            return self.armijo
        return 0.5 if self.mode == "parametric" else 0.0


@dataclass
class TrajectoryPoint:
    iter: int
    report: EnergyReport
    grad_norm: float
    params: tuple = ()

    def row(self) -> dict:
        return {"iter": self.iter, **self.report.as_dict(), "grad_norm": self.grad_norm}


@dataclass
class OptimizationResult:
    trajectory: list
    surface: object
    params: tuple = ()
    converged: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> EnergyReport:
        return self.trajectory[-1].report

    def write_csv(self, path) -> None:
        write_trajectory_csv(self.trajectory, path)


def write_trajectory_csv(trajectory: Sequence[TrajectoryPoint], path) -> None:
    cols = ["iter", "area", "willmore", "traceless_sq", "max_H", "grad_norm"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for t in trajectory:
            r = t.report
            w.writerow([t.iter] + [f"{x:.12g}" for x in (r.area, r.willmore, r.traceless_sq_integral, r.max_H, t.grad_norm)])


class SurfaceFamily:
    """A finite-dimensional family of chart surfaces with box constraints."""

    def __init__(self, name: str, build: Callable, x0: Sequence[float], lower: Sequence[float], upper: Sequence[float]):
        self.name = name
        self.build = build
        self.x0 = np.asarray(x0, dtype=float)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)

    def clamp(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


def flat_family(a0: float) -> SurfaceFamily:
    return SurfaceFamily("flat", lambda x: FlatTorus(float(x[0])), [a0], [0.05], [0.95])


def revolution_family(R0: float, r: float = 1.0) -> SurfaceFamily:
    """Tori of revolution with the tube radius frozen; the centre distance varies."""
    return SurfaceFamily("revolution", lambda x: RevolutionTorus(float(x[0]), r), [R0], [1.05 * r], [50.0 * r])


def _descend(energy: Callable, grad: Callable, x0, cfg: OptimizerConfig, clamp: Callable, report: Callable):
    x = clamp(np.asarray(x0, dtype=float))
    e = energy(x)
    g = grad(x)
    traj = [TrajectoryPoint(0, report(x), float(np.linalg.norm(g)), tuple(np.ravel(x)))]
    step = cfg.step
    converged = False
    for it in range(1, cfg.max_iters + 1):
        gn = float(np.linalg.norm(g))
        if gn < cfg.grad_tol:
            converged = True
            break
        for _ in range(cfg.max_halvings):
            trial = clamp(x - step * g)
            e_trial = energy(trial)
            # measured along the clamped move so box constraints do not block acceptance
            if e_trial < e - cfg.sufficient_decrease * float(np.dot(np.ravel(g), np.ravel(x - trial))):
                break
            step *= 0.5
        else:
            raise OptimizerStallError(
                f"no decrease after {cfg.max_halvings} halvings at iteration {it}",
                trajectory=traj,
                surface=x,
            )
        x, e = trial, e_trial
        g = grad(x)
        traj.append(TrajectoryPoint(it, report(x), float(np.linalg.norm(g)), tuple(np.ravel(x))))
        step *= 2.0
    else:
        converged = float(np.linalg.norm(g)) < cfg.grad_tol
    return x, traj, converged


def optimize_willmore(start, cfg: OptimizerConfig | None = None, rng_seed: int = 0) -> OptimizationResult:
    """Gradient descent on ``W``.

    ``start`` is a :class:`SurfaceFamily` (parametric mode: central
    differences in the family parameters, energies by mesh quadrature at
    ``cfg.res``) or a :class:`SurfaceMesh` (mesh mode: normal displacements,
    see :func:`mesh_gradient`).
    """
    cfg = cfg or OptimizerConfig()
    if isinstance(start, SurfaceFamily):
        if cfg.mode != "parametric":
            raise InvalidInputError("a parametric family needs mode='parametric'")
        return _optimize_family(start, cfg)
    if isinstance(start, SurfaceMesh):
        if cfg.mode != "mesh":
            raise InvalidInputError("a mesh start needs mode='mesh'")
        return _optimize_mesh(start, cfg)
    raise InvalidInputError("start must be a SurfaceFamily or a SurfaceMesh")


def _optimize_family(fam: SurfaceFamily, cfg: OptimizerConfig) -> OptimizationResult:
    cache: dict = {}

    def mesh_at(x):
        key = tuple(np.round(np.ravel(x), 15))
        if key not in cache:
            cache[key] = fam.build(x).mesh(cfg.res)
        return cache[key]

    def energy(x):
        return willmore_energy(mesh_at(x)).willmore

    def grad(x):
        g = np.zeros_like(x)
        for i in range(len(x)):
            h = np.zeros_like(x)
            h[i] = cfg.fd_step * max(1.0, abs(x[i]))
            # one-sided near the box so the stencil stays admissible
            hi = min(x[i] + h[i], fam.upper[i])
            lo = max(x[i] - h[i], fam.lower[i])
            xp, xm = x.copy(), x.copy()
            xp[i], xm[i] = hi, lo
            g[i] = (energy(xp) - energy(xm)) / (hi - lo)
        return g

    x, traj, conv = _descend(energy, grad, fam.x0, cfg, fam.clamp, lambda x: willmore_energy(mesh_at(x)))
    return OptimizationResult(traj, fam.build(x), tuple(float(c) for c in x), conv, {"family": fam.name, "res": cfg.res})


# -- mesh mode ---------------------------------------------------------------


def _mesh_energy_terms(vertices, faces, genus, rings=2):
    normals = estimate_normals(vertices, faces)
    m = SurfaceMesh(vertices, faces, normals, genus=genus)
    m = estimate_curvatures(m, rings=rings)
    return m, (1.0 + m.H**2) * m.vertex_area


def _colour_classes(n: int, faces: np.ndarray, radius: int) -> list[np.ndarray]:
    """Greedy colouring so that same-colour vertices are more than ``radius`` edges apart."""
    indptr, indices = ring_neighbours(n, faces, radius)
    colour = -np.ones(n, dtype=np.int64)
    for i in range(n):
        used = set(colour[indices[indptr[i] : indptr[i + 1]]].tolist())
        c = 0
        while c in used:
            c += 1
        colour[i] = c
    return [np.flatnonzero(colour == c) for c in range(colour.max() + 1)]


def mesh_gradient(mesh: SurfaceMesh, rel_step: float = 1e-4, classes=None, influence=None):
    """Derivative of ``W`` with respect to normal displacement of each vertex.

    The energy is a sum of per-vertex terms, each depending on its 3-ring
    only. Vertices more than 6 rings apart are perturbed together and every
    per-vertex term is charged to the single perturbed vertex that can reach
    it, so each colour class costs two energy evaluations.
    """
    x, f = mesh.vertices, mesh.faces
    n = len(x)
    if classes is None:
        classes = _colour_classes(n, f, 6)
    if influence is None:
        influence = ring_neighbours(n, f, 3)
    indptr, indices = influence
    e = unique_edges(f)
    elen = np.linalg.norm(x[e[:, 0]] - x[e[:, 1]], axis=1)
    local = np.bincount(e[:, 0], elen, n) + np.bincount(e[:, 1], elen, n)
    local /= np.maximum(np.bincount(e.ravel(), minlength=n), 1)
    h = rel_step * local
    nrm = mesh.normals
    grad = np.zeros(n)
    owner_mat = sparse.csr_matrix((np.ones(len(indices)), indices, indptr), shape=(n, n))
    for cls in classes:
        delta = np.zeros(n)
        delta[cls] = h[cls]
        plus = x + delta[:, None] * nrm
        minus = x - delta[:, None] * nrm
        plus /= np.linalg.norm(plus, axis=1, keepdims=True)
        minus /= np.linalg.norm(minus, axis=1, keepdims=True)
        _, ep = _mesh_energy_terms(plus, f, mesh.genus)
        _, em = _mesh_energy_terms(minus, f, mesh.genus)
        diff = ep - em
        # owner of term j: the perturbed vertex in the closed 3-ring of j
        sub = owner_mat[:, cls].tocoo()
        owner = np.full(n, -1, dtype=np.int64)
        owner[sub.row] = cls[sub.col]
        owner[cls] = cls
        ok = owner >= 0
        grad += np.bincount(owner[ok], diff[ok], n) / np.where(delta > 0, 2 * delta, 1.0)
    return grad


def perturb_normal(mesh: SurfaceMesh, amplitude: float, seed: int = 0, smoothing: int = 20) -> SurfaceMesh:
    """Random normal displacement of max size ``amplitude``, smoothed by neighbour averaging."""
    rng = np.random.default_rng(seed)
    n = mesh.n_vertices
    indptr, indices = ring_neighbours(n, mesh.faces, 1)
    avg = sparse.csr_matrix((np.ones(len(indices)), indices, indptr), shape=(n, n))
    avg = sparse.diags(1.0 / np.diff(indptr)) @ avg
    w = rng.uniform(-1.0, 1.0, n)
    for _ in range(smoothing):
        w = 0.5 * w + 0.5 * (avg @ w)
    w -= w.mean()
    w *= amplitude / np.max(np.abs(w))
    x = mesh.vertices + w[:, None] * mesh.normals
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    out = SurfaceMesh(x, mesh.faces, estimate_normals(x, mesh.faces), genus=mesh.genus,
                      meta={**mesh.meta, "perturbation": amplitude, "seed": seed})
    return estimate_curvatures(out)


def _optimize_mesh(mesh: SurfaceMesh, cfg: OptimizerConfig) -> OptimizationResult:
    f, genus = mesh.faces, mesh.genus
    n = mesh.n_vertices
    classes = _colour_classes(n, f, 6)
    influence = ring_neighbours(n, f, 3)
    state: dict = {}

    def surface(x):
        key = x.tobytes()
        if key not in state:
            state.clear()
            state[key] = _mesh_energy_terms(x, f, genus)
        return state[key][0]

    def energy(x):
        return float(np.sum(_mesh_energy_terms(x, f, genus)[1]))

    def clamp(x):
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    current: dict = {}

    def grad_flat(x):
        m = surface(x)
        g = mesh_gradient(m, 1e-4, classes, influence) / m.vertex_area
        current["dir"] = g[:, None] * m.normals
        return current["dir"]

    def report(x):
        return willmore_energy(surface(x))

    x, traj, conv = _descend(energy, grad_flat, mesh.vertices, cfg, clamp, report)
    final = surface(x)
    return OptimizationResult(traj, final, (), conv, {"vertices": n, "classes": len(classes)})


def energy_landscape(a_grid) -> tuple[np.ndarray, float]:
    """Closed-form flat-torus energies on ``a_grid`` and the grid argmin."""
    a_grid = np.asarray(a_grid, dtype=float)
    w = flat_torus_energy_closed_form(a_grid)
    return w, float(a_grid[int(np.argmin(w))])


__all__ = [
    "EnergyReport",
    "OptimizerConfig",
    "OptimizationResult",
    "SurfaceFamily",
    "TWO_PI_SQ",
    "willmore_energy",
    "flat_torus_energy_closed_form",
    "conformal_invariance_residual",
    "optimize_willmore",
    "flat_family",
    "revolution_family",
    "mesh_gradient",
    "perturb_normal",
    "energy_landscape",
    "write_trajectory_csv",
]
