from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from willmore_lab.conformal import (
    ConformalParameter,
    TubeContext,
    TubularCoord,
    apply_F,
    area_drop_integral,
    conformal_factor,
    default_eps,
    lambda_coord,
    phi_smoothstep,
    pushforward_curvature,
    pushforward_normal,
    retraction_T,
    transform_mesh,
)
from willmore_lab.errors import InvalidInputError, OutOfTubeError
from willmore_lab.s3 import E1, E2, E3
from willmore_lab.surface import FlatTorus, area, make_clifford_torus, make_flat_torus
from willmore_lab.willmore import willmore_energy

from conftest import random_tangent, random_unit

seeds = st.integers(0, 2**31 - 1)


def random_v(rng, max_norm=0.9):
    return random_unit(rng) * rng.uniform(0.0, max_norm)


def fd_push(v, x, n, h=1e-6):
    """Central difference of ``F_v`` along the great circle through ``x`` in direction ``n``."""
    a = apply_F(v, np.cos(h) * x + np.sin(h) * n)
    b = apply_F(v, np.cos(h) * x - np.sin(h) * n)
    return (a - b) / (2 * h)


def test_parameter_bounds():
    ConformalParameter(0.5 * E1)
    with pytest.raises(InvalidInputError):
        ConformalParameter(E1)
    with pytest.raises(InvalidInputError):
        ConformalParameter((1 - 1e-10) * E1)
    assert np.array_equal(ConformalParameter(0.5 * E1).inverse.v, -0.5 * E1)


def test_F_examples(rng):
    x = random_unit(rng, 10)
    assert np.allclose(apply_F(np.zeros(4), x), x, atol=1e-15)
    v = random_v(rng)
    u = v / np.linalg.norm(v)
    assert np.allclose(apply_F(v, u), u, atol=1e-12)
    assert np.allclose(apply_F(v, -u), -u, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_F_preserves_sphere_and_inverts(seed):
    rng = np.random.default_rng(seed)
    v = random_v(rng)
    x = random_unit(rng, 20)
    y = apply_F(v, x)
    assert np.all(np.abs(np.linalg.norm(y, axis=1) - 1) <= 1e-12)
    assert np.allclose(apply_F(-v, y), x, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_F_is_conformal(seed):
    rng = np.random.default_rng(seed)
    v = random_v(rng, 0.8)
    x = random_unit(rng)
    a = random_tangent(rng, x)
    b = random_tangent(rng, x)
    b -= (b @ a) * a
    b /= np.linalg.norm(b)
    da, db = fd_push(v, x, a), fd_push(v, x, b)
    na, nb = np.linalg.norm(da), np.linalg.norm(db)
    assert abs(da @ db) <= 1e-6 * na * nb
    assert na == pytest.approx(nb, rel=1e-6)
    assert na == pytest.approx(conformal_factor(v, x), rel=1e-6)


def test_pushforward_examples(rng):
    x = random_unit(rng)
    n = random_tangent(rng, x)
    assert np.array_equal(pushforward_normal(np.zeros(4), x, n), n)
    w = random_tangent(rng, x)
    w -= (w @ n) * n
    v = 0.6 * w / np.linalg.norm(w)
    assert np.allclose(pushforward_normal(v, x, n), n, atol=1e-15)
    with pytest.raises(InvalidInputError):
        pushforward_normal(v, x, x)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_pushforward_matches_fd(seed):
    rng = np.random.default_rng(seed)
    v = random_v(rng, 0.8)
    x = random_unit(rng)
    n = random_tangent(rng, x)
    got = pushforward_normal(v, x, n)
    y = apply_F(v, x)
    assert abs(got @ y) < 1e-10
    assert abs(np.linalg.norm(got) - 1) < 1e-10
    fd = fd_push(v, x, n)
    assert np.allclose(got, fd / np.linalg.norm(fd), atol=1e-6)


def test_pushforward_curvature_on_flat_torus():
    # F_v of a flat torus is again a surface whose chart curvature we can difference
    m = make_flat_torus(0.6, 24)
    v = np.array([0.1, -0.2, 0.15, 0.05])
    img = transform_mesh(v, m)
    k1 = pushforward_curvature(v, m.vertices, m.normals, m.k1)
    k2 = pushforward_curvature(v, m.vertices, m.normals, m.k2)
    assert np.allclose(np.sort([img.k1, img.k2], 0), np.sort([k1, k2], 0), atol=1e-12)
    # umbilic-free product torus stays umbilic-free and |A|^2 dA is invariant pointwise
    lam = conformal_factor(v, m.vertices)
    assert np.allclose((k1 - k2) ** 2 * lam**2, (m.k1 - m.k2) ** 2, rtol=1e-10)


def test_transform_identity(clifford32):
    out = transform_mesh(np.zeros(4), clifford32)
    assert np.allclose(out.vertices, clifford32.vertices, atol=1e-12)
    assert np.allclose(out.normals, clifford32.normals, atol=1e-12)
    assert np.allclose(out.vertex_area, clifford32.vertex_area, atol=1e-12)


@pytest.mark.parametrize("v", [0.2 * E1, 0.5 * E2, 0.7 * (E1 + E3) / np.sqrt(2)])
def test_transform_preserves_willmore(v):
    m = make_clifford_torus(128)
    w0 = willmore_energy(m).willmore
    w1 = willmore_energy(transform_mesh(v, m)).willmore
    assert abs(w1 - w0) / w0 <= 0.01


def test_area_drop_identity(clifford64):
    w = 0.3 * E1
    img = transform_mesh(w, clifford64)
    drop = area(clifford64) - area(img)
    assert area(img) < area(clifford64)
    assert drop == pytest.approx(area_drop_integral(clifford64, w), rel=0.01)


def test_default_eps(clifford32):
    eps = default_eps(clifford32)
    # focal distance of the Clifford torus is pi/4 (k = 1) and its self distance is pi/2
    assert eps == pytest.approx(0.4 * min(1.0, np.pi / 4), rel=0.05)


def test_lambda_examples(rng):
    p = random_unit(rng)
    n = random_tangent(rng, p)
    assert np.allclose(lambda_coord(p, n, (0.0, 0.0)), p)
    t = 0.37
    q = lambda_coord(p, n, (0.0, t))
    assert np.linalg.norm(q) == pytest.approx(1.0)
    assert np.allclose(q, np.cos(t) * p + np.sin(t) * n)
    assert np.allclose(lambda_coord(p, n, (0.2, 0.0)), 0.8 * p)
    with pytest.raises(InvalidInputError):
        lambda_coord(p, n, (0.0, 0.0), direction="sideways")


def test_tubular_coord_invariants(rng):
    p = random_unit(rng)
    n = random_tangent(rng, p)
    c = TubularCoord(p, n, (0.01, 0.02), 0.1)
    assert np.allclose(c.point(), lambda_coord(p, n, (0.01, 0.02)))
    with pytest.raises(InvalidInputError):
        TubularCoord(p, n, (-0.01, 0.0), 0.1)
    with pytest.raises(OutOfTubeError):
        TubularCoord(p, n, (0.2, 0.25), 0.1)


@pytest.fixture(scope="module")
def tube():
    m = make_clifford_torus(32)
    return TubeContext(m, eps=0.1)


def _surface_points(rng, n):
    u, v = rng.uniform(0, 2 * np.pi, (2, n))
    chart = FlatTorus(1 / np.sqrt(2))
    return chart.point(u, v), chart.normal(u, v)


def test_lambda_round_trip(tube, rng):
    p, n = _surface_points(rng, 50)
    s = np.column_stack([rng.uniform(0, 0.2, 50), rng.uniform(-0.2, 0.2, 50)])
    s = s[np.hypot(s[:, 0], s[:, 1]) < 0.29]
    p, n = p[: len(s)], n[: len(s)]
    x = lambda_coord(p, n, s)
    p2, n2, s2 = lambda_coord(x=x, ctx=tube, direction="invert")
    assert np.allclose(p2, p, atol=1e-8)
    assert np.allclose(s2, s, atol=1e-8)
    assert np.allclose(np.abs(np.sum(n2 * n, 1)), 1.0, atol=1e-8)


def test_lambda_invert_out_of_tube(tube):
    with pytest.raises(OutOfTubeError):
        lambda_coord(x=np.array([[0.0, 0.0, 0.0, 0.1]]), ctx=tube, direction="invert")


def test_phi_profile():
    eps = 0.1
    r = np.array([0.0, 0.05, 0.1, 0.15, 0.2, 0.25])
    f = phi_smoothstep(r, eps)
    assert np.allclose(f[[0, 1, 2]], 0) and np.allclose(f[[4, 5]], 1)
    assert f[3] == pytest.approx(0.5)
    fine = phi_smoothstep(np.linspace(eps, 2 * eps, 101), eps)
    assert np.all(np.diff(fine) > 0)


def test_retraction_examples(tube, rng):
    far = np.array([[0.0, 0.0, 0.0, 0.5], [0.3, 0.0, 0.0, 0.0]])
    assert np.array_equal(retraction_T(far, tube), far)
    p, n = _surface_points(rng, 20)
    ang = rng.uniform(0, np.pi / 2, 20)
    near = lambda_coord(p, n, np.column_stack([np.cos(ang), np.sin(ang)]) * 0.08)
    assert np.allclose(retraction_T(near, tube), p, atol=1e-8)
    ring = lambda_coord(p, n, np.column_stack([np.cos(ang), np.sin(ang)]) * 0.2)
    assert np.allclose(retraction_T(ring, tube), ring, atol=1e-8)


def test_retraction_lipschitz_stable(tube, rng):
    p, n = _surface_points(rng, 400)
    ang = rng.uniform(0, np.pi, 400)
    rad = rng.uniform(0, 0.35, 400)
    x = lambda_coord(p, n, np.column_stack([rad * np.sin(ang), rad * np.cos(ang)]))
    ratios = []
    for h in (1e-3, 5e-4, 2.5e-4):
        d = random_unit(rng, 400) * h
        tx, ty = retraction_T(x, tube), retraction_T(x + d, tube)
        ratios.append(np.max(np.linalg.norm(tx - ty, axis=1) / h))
    assert np.all(np.isfinite(ratios))
    assert max(ratios) < 20
    assert max(ratios) / min(ratios) < 1.5
