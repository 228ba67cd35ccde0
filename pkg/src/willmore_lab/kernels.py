"""Inner loops, each with a numba version and a pure-numpy twin.

The public wrappers dispatch on :data:`willmore_lab._accel.USE_NUMBA`; the
``*_numpy`` and ``*_numba`` functions are exported so tests and the
benchmark can call both sides directly.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit, prange
from .errors import UnderdeterminedFitError

# ---------------------------------------------------------------------------
# quadric-fit principal curvatures
# ---------------------------------------------------------------------------


def cross4(a, b, c) -> np.ndarray:
    """Vector ``w`` with ``<w, x> = det[a, b, c, x]`` for all ``x``."""
    a, b, c = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float))
    m = np.stack([a, b, c], axis=-2)
    out = np.empty(a.shape, dtype=float)
    cols = [1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]
    for i, keep in enumerate(cols):
        sign = -1.0 if i % 2 == 0 else 1.0
        out[..., i] = sign * np.linalg.det(m[..., keep])
    # cofactor expansion of det[a, b, c, x] along its last row
    return out


def tangent_frames(points: np.ndarray, normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised orthonormal frames ``(e1, e2)`` of the tangent planes."""
    eye = np.eye(4)
    proj = np.abs(np.einsum("vi,ji->vj", points, eye)) + np.abs(np.einsum("vi,ji->vj", normals, eye))
    axis = eye[np.argmin(proj, axis=1)]
    e1 = axis - np.sum(axis * points, 1)[:, None] * points - np.sum(axis * normals, 1)[:, None] * normals
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = cross4(points, normals, e1)
    e2 /= np.linalg.norm(e2, axis=1, keepdims=True)
    return e1, e2


def _shape_eigs(c0, c1, c2, c3, c4):
    # graph h = c0 x + c1 y + c2 x^2 + c3 xy + c4 y^2 evaluated at the origin
    g2 = c0 * c0 + c1 * c1
    w = np.sqrt(1.0 + g2)
    e, f, g = 2.0 * c2 / w, c3 / w, 2.0 * c4 / w
    E, F, G = 1.0 + c0 * c0, c0 * c1, 1.0 + c1 * c1
    det_i = E * G - F * F
    mean = (e * G - 2.0 * f * F + g * E) / (2.0 * det_i)
    gauss = (e * g - f * f) / det_i
    disc = np.sqrt(np.maximum(mean * mean - gauss, 0.0))
    return mean + disc, mean - disc


def quadric_curvatures_numpy(points, normals, indptr, indices):
    n = points.shape[0]
    deg = np.diff(indptr)
    if np.any(deg < 5):
        raise UnderdeterminedFitError(f"{int(np.sum(deg < 5))} vertices have fewer than 5 neighbours")
    e1, e2 = tangent_frames(points, normals)
    m = int(deg.max())
    slot = np.arange(m)[None, :]
    mask = slot < deg[:, None]
    gather = np.where(mask, indptr[:-1, None] + slot, 0)
    nb = indices[np.minimum(gather, len(indices) - 1)]
    d = points[nb] - points[:, None, :]
    x = np.einsum("vmk,vk->vm", d, e1)
    y = np.einsum("vmk,vk->vm", d, e2)
    h = np.einsum("vmk,vk->vm", d, normals)
    design = np.stack([x, y, x * x, x * y, y * y], axis=-1) * mask[..., None]
    ata = np.einsum("vmi,vmj->vij", design, design)
    atb = np.einsum("vmi,vm->vi", design, h * mask)
    bad = np.linalg.cond(ata) > 1e12
    if np.any(bad):
        raise UnderdeterminedFitError(f"{int(bad.sum())} vertices have degenerate neighbourhoods")
    c = np.linalg.solve(ata, atb[..., None])[..., 0]
    k1, k2 = _shape_eigs(c[:, 0], c[:, 1], c[:, 2], c[:, 3], c[:, 4])
    del n
    return k1, k2


@njit(cache=True, nogil=True, parallel=True)
def _quadric_nb(points, normals, e1, e2, indptr, indices, k1, k2, status):
    n = points.shape[0]
    for i in prange(n):
        start = indptr[i]
        stop = indptr[i + 1]
        ata = np.zeros((5, 5))
        atb = np.zeros(5)
        row = np.zeros(5)
        for jj in range(start, stop):
            j = indices[jj]
            x = 0.0
            y = 0.0
            h = 0.0
            for k in range(4):
                d = points[j, k] - points[i, k]
                x += d * e1[i, k]
                y += d * e2[i, k]
                h += d * normals[i, k]
            row[0] = x
            row[1] = y
            row[2] = x * x
            row[3] = x * y
            row[4] = y * y
            for a in range(5):
                atb[a] += row[a] * h
                for b in range(5):
                    ata[a, b] += row[a] * row[b]
        if stop - start < 5:
            status[i] = 1
            continue
        # Cholesky with a pivot floor standing in for a condition check
        lo = np.zeros((5, 5))
        ok = True
        scale = 0.0
        for a in range(5):
            scale = max(scale, ata[a, a])
        for a in range(5):
            s = ata[a, a]
            for b in range(a):
                s -= lo[a, b] * lo[a, b]
            if s <= 1e-12 * scale:
                ok = False
                break
            lo[a, a] = np.sqrt(s)
            for r in range(a + 1, 5):
                s2 = ata[r, a]
                for b in range(a):
                    s2 -= lo[r, b] * lo[a, b]
                lo[r, a] = s2 / lo[a, a]
        if not ok:
            status[i] = 2
            continue
        z = np.zeros(5)
        for a in range(5):
            s = atb[a]
            for b in range(a):
                s -= lo[a, b] * z[b]
            z[a] = s / lo[a, a]
        c = np.zeros(5)
        for a in range(4, -1, -1):
            s = z[a]
            for b in range(a + 1, 5):
                s -= lo[b, a] * c[b]
            c[a] = s / lo[a, a]
        g2 = c[0] * c[0] + c[1] * c[1]
        w = np.sqrt(1.0 + g2)
        e = 2.0 * c[2] / w
        f = c[3] / w
        g = 2.0 * c[4] / w
        E = 1.0 + c[0] * c[0]
        F = c[0] * c[1]
        G = 1.0 + c[1] * c[1]
        det_i = E * G - F * F
        mean = (e * G - 2.0 * f * F + g * E) / (2.0 * det_i)
        gauss = (e * g - f * f) / det_i
        disc = mean * mean - gauss
        disc = np.sqrt(disc) if disc > 0.0 else 0.0
        k1[i] = mean + disc
        k2[i] = mean - disc


def quadric_curvatures_numba(points, normals, indptr, indices):
    e1, e2 = tangent_frames(points, normals)
    n = points.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    status = np.zeros(n, dtype=np.int64)
    _quadric_nb(
        np.ascontiguousarray(points),
        np.ascontiguousarray(normals),
        e1,
        e2,
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int64),
        k1,
        k2,
        status,
    )
    if np.any(status):
        raise UnderdeterminedFitError(
            f"{int(np.sum(status == 1))} vertices with < 5 neighbours, "
            f"{int(np.sum(status == 2))} with degenerate neighbourhoods"
        )
    return k1, k2


def quadric_curvatures(points, normals, indptr, indices):
    """Principal curvatures ``(k1 >= k2)`` from a least-squares quadric per vertex.

    Heights are measured along the vertex normal inside the tangent space of
    S^3 at the vertex; the fit carries linear terms so normal error is
    absorbed, and the shape operator is that of the fitted graph at the origin.
    """
    fn = quadric_curvatures_numba if _accel.USE_NUMBA else quadric_curvatures_numpy
    return fn(points, normals, indptr, indices)


# ---------------------------------------------------------------------------
# closest point on triangles (any ambient dimension)
# ---------------------------------------------------------------------------


def closest_on_triangles_numpy(p, a, b, c):
    """Closest points on triangles ``(a, b, c)`` to points ``p``; all shaped ``(n, d)``."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.sum(ab * ap, -1)
    d2 = np.sum(ac * ap, -1)
    bp = p - b
    d3 = np.sum(ab * bp, -1)
    d4 = np.sum(ac * bp, -1)
    cp = p - c
    d5 = np.sum(ab * cp, -1)
    d6 = np.sum(ac * cp, -1)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v_in = vb / denom
        w_in = vc / denom
        out = a + ab * v_in[:, None] + ac * w_in[:, None]
        # edge regions
        v_ab = d1 / (d1 - d3)
        e_ab = a + ab * v_ab[:, None]
        w_ac = d2 / (d2 - d6)
        e_ac = a + ac * w_ac[:, None]
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        e_bc = b + (c - b) * w_bc[:, None]

    m_bc = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    out = np.where(m_bc[:, None], e_bc, out)
    m_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    out = np.where(m_ac[:, None], e_ac, out)
    m_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    out = np.where(m_ab[:, None], e_ab, out)
    m_c = (d6 >= 0) & (d5 <= d6)
    out = np.where(m_c[:, None], c, out)
    m_b = (d3 >= 0) & (d4 <= d3)
    out = np.where(m_b[:, None], b, out)
    m_a = (d1 <= 0) & (d2 <= 0)
    out = np.where(m_a[:, None], a, out)
    return out


@njit(cache=True, nogil=True)
def _closest_one(p, a, b, c, out):
    d = p.shape[0]
    d1 = d2 = d3 = d4 = d5 = d6 = 0.0
    for k in range(d):
        ab = b[k] - a[k]
        ac = c[k] - a[k]
        d1 += ab * (p[k] - a[k])
        d2 += ac * (p[k] - a[k])
        d3 += ab * (p[k] - b[k])
        d4 += ac * (p[k] - b[k])
        d5 += ab * (p[k] - c[k])
        d6 += ac * (p[k] - c[k])
    if d1 <= 0.0 and d2 <= 0.0:
        for k in range(d):
            out[k] = a[k]
        return
    if d3 >= 0.0 and d4 <= d3:
        for k in range(d):
            out[k] = b[k]
        return
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        for k in range(d):
            out[k] = a[k] + v * (b[k] - a[k])
        return
    if d6 >= 0.0 and d5 <= d6:
        for k in range(d):
            out[k] = c[k]
        return
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        for k in range(d):
            out[k] = a[k] + w * (c[k] - a[k])
        return
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        for k in range(d):
            out[k] = b[k] + w * (c[k] - b[k])
        return
    den = 1.0 / (va + vb + vc)
    v = vb * den
    w = vc * den
    for k in range(d):
        out[k] = a[k] + (b[k] - a[k]) * v + (c[k] - a[k]) * w


@njit(cache=True, nogil=True, parallel=True)
def _closest_candidates_nb(points, verts, faces, cand, best_pt, best_face, best_d2):
    n = points.shape[0]
    kc = cand.shape[1]
    d = points.shape[1]
    for i in prange(n):
        tmp = np.empty(d)
        bd = 1e300
        for jj in range(kc):
            f = cand[i, jj]
            _closest_one(points[i], verts[faces[f, 0]], verts[faces[f, 1]], verts[faces[f, 2]], tmp)
            dd = 0.0
            for k in range(d):
                dd += (tmp[k] - points[i, k]) ** 2
            if dd < bd:
                bd = dd
                best_face[i] = f
                for k in range(d):
                    best_pt[i, k] = tmp[k]
        best_d2[i] = bd


def closest_candidates_numba(points, verts, faces, cand):
    n, d = points.shape
    best_pt = np.empty((n, d))
    best_face = np.empty(n, dtype=np.int64)
    best_d2 = np.empty(n)
    _closest_candidates_nb(
        np.ascontiguousarray(points, dtype=float),
        np.ascontiguousarray(verts, dtype=float),
        np.ascontiguousarray(faces, dtype=np.int64),
        np.ascontiguousarray(cand, dtype=np.int64),
        best_pt,
        best_face,
        best_d2,
    )
    return best_pt, best_face, best_d2


def closest_candidates_numpy(points, verts, faces, cand):
    n, d = points.shape
    best_pt = np.empty((n, d))
    best_face = np.full(n, -1, dtype=np.int64)
    best_d2 = np.full(n, np.inf)
    for jj in range(cand.shape[1]):
        f = cand[:, jj]
        tri = faces[f]
        q = closest_on_triangles_numpy(points, verts[tri[:, 0]], verts[tri[:, 1]], verts[tri[:, 2]])
        dd = np.sum((q - points) ** 2, axis=1)
        better = dd < best_d2
        best_d2[better] = dd[better]
        best_face[better] = f[better]
        best_pt[better] = q[better]
    return best_pt, best_face, best_d2


def closest_candidates(points, verts, faces, cand):
    """Closest point over candidate faces ``cand[i, :]`` for each query point."""
    fn = closest_candidates_numba if _accel.USE_NUMBA else closest_candidates_numpy
    return fn(points, verts, faces, cand)


# ---------------------------------------------------------------------------
# ray parity in R^3 (rays along +z)
# ---------------------------------------------------------------------------

EDGE_EPS = 1e-10


def _ray_hits_numpy(o, v0, v1, v2):
    # Moller-Trumbore with direction (0, 0, 1), broadcast over (points, triangles)
    e1 = v1 - v0
    e2 = v2 - v0
    pvec = np.stack([-e2[..., 1], e2[..., 0], np.zeros_like(e2[..., 0])], -1)  # dir x e2
    det = np.sum(e1 * pvec, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        tvec = o - v0
        u = np.sum(tvec * pvec, -1) * inv
        qvec = np.cross(tvec, e1)
        w = qvec[..., 2] * inv
        t = np.sum(e2 * qvec, -1) * inv
    valid = np.abs(det) > 1e-300
    hit = valid & (u >= 0) & (w >= 0) & (u + w <= 1) & (t > 0)
    close = valid & (t > 0) & (
        (np.abs(u) < EDGE_EPS) | (np.abs(w) < EDGE_EPS) | (np.abs(1 - u - w) < EDGE_EPS)
    ) & (u > -EDGE_EPS) & (w > -EDGE_EPS) & (u + w < 1 + EDGE_EPS)
    return hit, close


def ray_parity_brute(origins, tris, chunk: int = 256):
    """All-pairs version of :func:`ray_parity_numpy`, kept as a reference."""
    n = origins.shape[0]
    parity = np.zeros(n, dtype=np.int64)
    amb = np.zeros(n, dtype=bool)
    v0, v1, v2 = tris[:, 0][None], tris[:, 1][None], tris[:, 2][None]
    for s in range(0, n, chunk):
        o = origins[s : s + chunk][:, None, :]
        hit, close = _ray_hits_numpy(o, v0, v1, v2)
        parity[s : s + chunk] = np.sum(hit, axis=1) % 2
        amb[s : s + chunk] = np.any(close, axis=1)
    return parity, amb


def _grid_layout(tris, cells):
    lo = tris[:, :, :2].min(axis=(0, 1))
    hi = tris[:, :, :2].max(axis=(0, 1))
    g = cells or max(8, int(np.sqrt(tris.shape[0] / 2.0)))
    cell = float(max(hi[0] - lo[0], hi[1] - lo[1]) / g) * (1.0 + 1e-9) or 1.0
    return float(lo[0]), float(lo[1]), cell, g


def _build_grid_numpy(tris, lo0, lo1, cell, g):
    """CSR lists of the triangles whose xy bounding box meets each grid cell."""
    mn = tris[:, :, :2].min(axis=1)
    mx = tris[:, :, :2].max(axis=1)
    i0 = np.clip(((mn[:, 0] - lo0) / cell).astype(np.int64), 0, g - 1)
    i1 = np.clip(((mx[:, 0] - lo0) / cell).astype(np.int64), 0, g - 1)
    j0 = np.clip(((mn[:, 1] - lo1) / cell).astype(np.int64), 0, g - 1)
    j1 = np.clip(((mx[:, 1] - lo1) / cell).astype(np.int64), 0, g - 1)
    ni, nj = i1 - i0 + 1, j1 - j0 + 1
    per = ni * nj
    f = np.repeat(np.arange(len(tris)), per)
    k = np.arange(per.sum()) - np.repeat(np.cumsum(per) - per, per)
    ci = np.repeat(i0, per) + k // np.repeat(nj, per)
    cj = np.repeat(j0, per) + k % np.repeat(nj, per)
    key = ci * g + cj
    order = np.argsort(key, kind="stable")
    counts = np.zeros(g * g + 1, dtype=np.int64)
    np.add.at(counts, key + 1, 1)
    return np.cumsum(counts), f[order]


def ray_parity_numpy(origins, tris, cells: int | None = None, chunk: int = 1 << 20):
    """Crossing parity of +z rays against triangles ``tris`` of shape ``(F, 3, 3)``.

    Returns ``(parity, ambiguous)`` where ambiguous marks rays passing within
    ``EDGE_EPS`` (barycentric) of a triangle edge. Candidate triangles come
    from a uniform xy grid, as in the numba kernel.
    """
    tris = np.asarray(tris, dtype=float)
    origins = np.asarray(origins, dtype=float)
    n = origins.shape[0]
    parity = np.zeros(n, dtype=np.int64)
    amb = np.zeros(n, dtype=bool)
    lo0, lo1, cell, g = _grid_layout(tris, cells)
    counts, items = _build_grid_numpy(tris, lo0, lo1, cell, g)
    i = np.floor((origins[:, 0] - lo0) / cell)
    j = np.floor((origins[:, 1] - lo1) / cell)
    inside = (i >= 0) & (j >= 0) & (i < g) & (j < g)
    idx = np.flatnonzero(inside)
    c = (i[idx] * g + j[idx]).astype(np.int64)
    per = counts[c + 1] - counts[c]
    hits = np.zeros(n, dtype=np.int64)
    # blocks of whole origins holding roughly ``chunk`` candidate pairs each
    cum = np.cumsum(per)
    edges = np.unique(np.r_[0, np.searchsorted(cum, np.arange(chunk, cum[-1] if len(cum) else 0, chunk)), len(idx)])
    for a, b in zip(edges[:-1], edges[1:]):
        pc = per[a:b]
        o = np.repeat(idx[a:b], pc)
        k = np.arange(pc.sum()) - np.repeat(np.cumsum(pc) - pc, pc)
        f = items[np.repeat(counts[c[a:b]], pc) + k]
        t = tris[f]
        hit, close = _ray_hits_numpy(origins[o], t[:, 0], t[:, 1], t[:, 2])
        hits += np.bincount(o, weights=hit, minlength=n).astype(np.int64)
        amb |= np.bincount(o, weights=close, minlength=n) > 0
    parity[:] = hits % 2
    return parity, amb


@njit(cache=True, nogil=True)
def _build_grid(tris, lo0, lo1, cell, g):
    nf = tris.shape[0]
    counts = np.zeros(g * g + 1, dtype=np.int64)
    spans = np.empty((nf, 4), dtype=np.int64)
    for f in range(nf):
        xmin = min(tris[f, 0, 0], tris[f, 1, 0], tris[f, 2, 0])
        xmax = max(tris[f, 0, 0], tris[f, 1, 0], tris[f, 2, 0])
        ymin = min(tris[f, 0, 1], tris[f, 1, 1], tris[f, 2, 1])
        ymax = max(tris[f, 0, 1], tris[f, 1, 1], tris[f, 2, 1])
        i0 = max(0, min(g - 1, int((xmin - lo0) / cell)))
        i1 = max(0, min(g - 1, int((xmax - lo0) / cell)))
        j0 = max(0, min(g - 1, int((ymin - lo1) / cell)))
        j1 = max(0, min(g - 1, int((ymax - lo1) / cell)))
        spans[f, 0] = i0
        spans[f, 1] = i1
        spans[f, 2] = j0
        spans[f, 3] = j1
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                counts[i * g + j + 1] += 1
    for k in range(g * g):
        counts[k + 1] += counts[k]
    fill = counts[:-1].copy()
    items = np.empty(counts[-1], dtype=np.int64)
    for f in range(nf):
        for i in range(spans[f, 0], spans[f, 1] + 1):
            for j in range(spans[f, 2], spans[f, 3] + 1):
                items[fill[i * g + j]] = f
                fill[i * g + j] += 1
    return counts, items


@njit(cache=True, nogil=True, parallel=True)
def _ray_parity_nb(origins, tris, counts, items, lo0, lo1, cell, g, parity, amb):
    n = origins.shape[0]
    for p in prange(n):
        ox = origins[p, 0]
        oy = origins[p, 1]
        oz = origins[p, 2]
        i = int((ox - lo0) / cell)
        j = int((oy - lo1) / cell)
        if i < 0 or j < 0 or i >= g or j >= g:
            parity[p] = 0
            continue
        c = i * g + j
        cnt = 0
        flag = False
        for kk in range(counts[c], counts[c + 1]):
            f = items[kk]
            ax = tris[f, 0, 0]
            ay = tris[f, 0, 1]
            az = tris[f, 0, 2]
            e1x = tris[f, 1, 0] - ax
            e1y = tris[f, 1, 1] - ay
            e1z = tris[f, 1, 2] - az
            e2x = tris[f, 2, 0] - ax
            e2y = tris[f, 2, 1] - ay
            e2z = tris[f, 2, 2] - az
            px = -e2y
            py = e2x
            det = e1x * px + e1y * py
            if abs(det) <= 1e-300:
                continue
            inv = 1.0 / det
            tx = ox - ax
            ty = oy - ay
            tz = oz - az
            u = (tx * px + ty * py) * inv
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            w = qz * inv
            t = (e2x * qx + e2y * qy + e2z * qz) * inv
            if t <= 0.0:
                continue
            if u > -EDGE_EPS and w > -EDGE_EPS and u + w < 1.0 + EDGE_EPS:
                if abs(u) < EDGE_EPS or abs(w) < EDGE_EPS or abs(1.0 - u - w) < EDGE_EPS:
                    flag = True
            if u >= 0.0 and w >= 0.0 and u + w <= 1.0:
                cnt += 1
        parity[p] = cnt % 2
        amb[p] = flag


def ray_parity_numba(origins, tris, cells: int | None = None):
    tris = np.ascontiguousarray(tris, dtype=float)
    origins = np.ascontiguousarray(origins, dtype=float)
    lo0, lo1, cell, g = _grid_layout(tris, cells)
    counts, items = _build_grid(tris, lo0, lo1, cell, g)
    n = origins.shape[0]
    parity = np.zeros(n, dtype=np.int64)
    amb = np.zeros(n, dtype=bool)
    _ray_parity_nb(origins, tris, counts, items, lo0, lo1, cell, g, parity, amb)
    return parity, amb


def ray_parity(origins, tris):
    fn = ray_parity_numba if _accel.USE_NUMBA else ray_parity_numpy
    return fn(origins, tris)


# ---------------------------------------------------------------------------
# weighted mass inside chordal balls
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, parallel=True)
def _ball_mass_nb(centers, points, weights, radii_sq, out):
    nc = centers.shape[0]
    npnt = points.shape[0]
    nr = radii_sq.shape[0]
    for c in prange(nc):
        for p in range(npnt):
            dd = 0.0
            for k in range(4):
                dd += (points[p, k] - centers[c, k]) ** 2
            for r in range(nr):
                if dd < radii_sq[r]:
                    out[c, r] += weights[p]


def ball_mass_numba(centers, points, weights, chords):
    out = np.zeros((centers.shape[0], len(chords)))
    _ball_mass_nb(
        np.ascontiguousarray(centers, dtype=float),
        np.ascontiguousarray(points, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        np.asarray(chords, dtype=float) ** 2,
        out,
    )
    return out


def ball_mass_numpy(centers, points, weights, chords, chunk: int = 64):
    out = np.zeros((centers.shape[0], len(chords)))
    r2 = np.asarray(chords, dtype=float) ** 2
    for s in range(0, centers.shape[0], chunk):
        c = centers[s : s + chunk]
        dd = np.sum(c * c, 1)[:, None] + np.sum(points * points, 1)[None, :] - 2.0 * c @ points.T
        for k, rr in enumerate(r2):
            out[s : s + chunk, k] = (dd < rr) @ weights
    return out


def ball_mass(centers, points, weights, chords):
    """``out[c, r]`` = total weight of points within chord ``chords[r]`` of ``centers[c]``."""
    fn = ball_mass_numba if _accel.USE_NUMBA else ball_mass_numpy
    return fn(centers, points, weights, chords)
