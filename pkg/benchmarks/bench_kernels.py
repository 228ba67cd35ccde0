"""Time the numba kernels against their numpy fallbacks on realistic inputs.

    python benchmarks/bench_kernels.py [--res 128] [--repeat 3]

The first numba call per kernel includes compilation and is reported
separately.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from willmore_lab import kernels
from willmore_lab.s3 import stereographic, uniform_sample_s3
from willmore_lab.surface import MeshLocator, make_clifford_torus, ring_neighbours


def _best_of(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(res: int, n_query: int):
    mesh = make_clifford_torus(res)
    indptr, indices = ring_neighbours(mesh.n_vertices, mesh.faces, 2)
    loc = MeshLocator(mesh)
    x = uniform_sample_s3(n_query, 0)
    _, cand = loc.tree.query(x, k=loc.k)
    cand = np.sort(cand, axis=1).astype(np.int64)
    pole, _ = loc.reference()
    basis, tris = loc._projected(pole)
    origins = stereographic(pole, x) @ basis
    w = np.abs(np.cos(2 * np.arange(mesh.n_vertices))) * mesh.vertex_area
    centres = mesh.vertices[:256]
    chords = np.array([0.8, 0.4, 0.2, 0.1])
    return {
        "quadric_curvatures": (
            lambda: kernels.quadric_curvatures_numba(mesh.vertices, mesh.normals, indptr, indices),
            lambda: kernels.quadric_curvatures_numpy(mesh.vertices, mesh.normals, indptr, indices),
        ),
        "closest_candidates": (
            lambda: kernels.closest_candidates_numba(x, mesh.vertices, mesh.faces, cand),
            lambda: kernels.closest_candidates_numpy(x, mesh.vertices, mesh.faces, cand),
        ),
        "ray_parity": (
            lambda: kernels.ray_parity_numba(origins, tris),
            lambda: kernels.ray_parity_numpy(origins, tris),
        ),
        "ball_mass": (
            lambda: kernels.ball_mass_numba(centres, mesh.vertices, w, chords),
            lambda: kernels.ball_mass_numpy(centres, mesh.vertices, w, chords),
        ),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--res", type=int, default=128)
    ap.add_argument("--queries", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'kernel':<22}{'compile+1st':>12}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for name, (nb, npf) in cases(args.res, args.queries).items():
        t0 = time.perf_counter()
        nb()
        first = time.perf_counter() - t0
        t_nb = _best_of(nb, args.repeat)
        t_np = _best_of(npf, args.repeat)
        print(f"{name:<22}{first:>12.3f}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
