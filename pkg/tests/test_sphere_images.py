from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from willmore_lab.conformal import apply_F
from willmore_lab.errors import AmbiguousCenterError, DegenerateImageError, InvalidInputError
from willmore_lab.s3 import E1, E2, E3, GeodesicBall, geodesic_distance, uniform_sample_s3
from willmore_lab.sphere_images import (
    CapSpec,
    EuclideanBall4,
    apply_F_composed,
    asymptotic_image_bounds,
    complement_cap,
    default_frame,
    euclidean_to_geodesic_cap,
    geodesic_cap_to_euclidean,
    halfspace_image,
    image_of_ball,
    image_of_cap,
    image_of_geodesic_ball,
    inversion_halfspace,
    predicted_limit_ball,
)

from conftest import random_unit

seeds = st.integers(0, 2**31 - 1)


def boundary_circle(center, radius, n, rng):
    """Points at geodesic distance ``radius`` from ``center``."""
    g = rng.standard_normal((n, 4))
    g -= np.outer(g @ center, center)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return np.cos(radius) * center + np.sin(radius) * g


def chord_dist(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b), axis=-1)


def test_inversion_examples(rng):
    b = inversion_halfspace(E1)
    assert np.allclose(b.center, E1 / 2) and b.radius == pytest.approx(0.5)
    b2 = inversion_halfspace(2 * E1)
    # h / (2|h|^2) = e1/4; the hyperplane x1 = 2 inverts to the sphere through 0 and e1/2
    assert np.allclose(b2.center, E1 / 4) and b2.radius == pytest.approx(0.25)
    # oracle: invert points of the boundary hyperplane <x - h, h> = 0
    h = 2 * E1
    y = rng.standard_normal((100, 4))
    y[:, 0] = 2.0
    img = y / np.sum(y * y, 1, keepdims=True)
    assert np.allclose(chord_dist(img, b2.center), b2.radius, atol=1e-12)
    assert inversion_halfspace(3 * h).radius == pytest.approx(b2.radius / 3)
    with pytest.raises(InvalidInputError):
        inversion_halfspace(np.zeros(4))


def test_euclidean_ball_validation():
    with pytest.raises(InvalidInputError):
        EuclideanBall4(np.zeros(4), -1.0)
    with pytest.raises(InvalidInputError):
        CapSpec(np.zeros(4))
    with pytest.raises(InvalidInputError):
        CapSpec(1.5 * E1)


def test_cap_v0(rng):
    h = 0.6 * random_unit(rng)
    img = image_of_cap(np.zeros(4), CapSpec(h))
    assert np.allclose(img.center, h / 0.6)
    assert img.chord == pytest.approx(np.sqrt(2 * (1 - 0.6)), abs=1e-12)


def test_cap_along_axis_boundary(rng):
    r = 0.8
    c = random_unit(rng)
    cap = CapSpec.from_ball(c, r)
    assert np.linalg.norm(cap.h) == pytest.approx(np.cos(r))
    v = 0.45 * c
    img = image_of_cap(v, cap)
    pts = apply_F(v, boundary_circle(c, r, 200, rng))
    assert np.allclose(geodesic_distance(img.center, pts), img.radius, atol=1e-10)


def test_cap_containment_flip(rng):
    c = E1
    cap = CapSpec.from_ball(c, 0.6)
    v = 0.9 * E1  # beyond the hyperplane <x, h> = |h|^2 since cos 0.6 < 0.9
    assert np.linalg.norm(cap.h) ** 2 - cap.h @ v < 0
    img = image_of_cap(v, cap)
    assert not img.meta["v_in_halfspace"]
    x = uniform_sample_s3(40000, 3)
    inside = x[cap.contains(x)][:1000]
    assert len(inside) == 1000
    assert np.all(geodesic_distance(img.center, apply_F(v, inside)) <= img.radius + 1e-12)
    flat, is_ball = halfspace_image(v, cap.h)
    assert not is_ball


def test_degenerate_cap_uses_two_sided_limit(rng):
    cap = CapSpec.from_ball(E1, 0.5)
    h = cap.h
    v = h + 0.3 * E2  # <h, v> = |h|^2 exactly
    img = image_of_cap(v, cap)
    assert img.meta["degenerate"]
    assert img.meta["one_sided_center_gap"] < 1e-6
    pts = apply_F(v, boundary_circle(E1, 0.5, 200, rng))
    assert np.allclose(geodesic_distance(img.center, pts), img.radius, atol=1e-6)
    with pytest.raises(DegenerateImageError):
        halfspace_image(v, h)


def test_geodesic_ball_examples(rng):
    x = random_unit(rng)
    img = image_of_geodesic_ball(np.zeros(4), x)
    assert np.allclose(img.center, x) and img.chord == pytest.approx(np.sqrt(2))
    w = rng.standard_normal(4)
    w -= (w @ x) * x
    w *= 0.7 / np.linalg.norm(w)
    img = image_of_geodesic_ball(w, x)
    assert np.allclose(img.center, x, atol=1e-15) and img.chord == pytest.approx(np.sqrt(2))
    img = image_of_geodesic_ball(0.5 * x, x)
    assert np.allclose(img.center, x)
    assert img.chord == pytest.approx(np.sqrt(18 / 5), abs=1e-12)
    pts = apply_F(0.5 * x, boundary_circle(x, np.pi / 2, 300, rng))
    assert np.allclose(chord_dist(pts, img.center), np.sqrt(18 / 5), atol=1e-12)


def test_euclidean_to_cap_examples(rng):
    g = euclidean_to_geodesic_cap(EuclideanBall4(E1, np.sqrt(2)))
    assert g.radius == pytest.approx(np.pi / 2)
    g = euclidean_to_geodesic_cap(EuclideanBall4(0.5 * E1, 1.0))
    assert g.chord == pytest.approx(np.sqrt(1.5), abs=1e-15)
    assert g.radius == pytest.approx(1.318116, abs=1e-6)
    pts = boundary_circle(E1, g.radius, 200, rng)
    assert np.allclose(chord_dist(pts, 0.5 * E1), 1.0, atol=1e-10)
    assert euclidean_to_geodesic_cap(EuclideanBall4(3 * E1, 0.5)).meta["empty"]
    with pytest.raises(AmbiguousCenterError):
        euclidean_to_geodesic_cap(EuclideanBall4(np.zeros(4), 1.0))


def test_complement_identity(rng):
    alpha = 0.9
    q = random_unit(rng)
    x = uniform_sample_s3(20000, 8)
    cap = GeodesicBall(q, alpha).contains(x)
    comp = complement_cap(q, alpha).contains(x, closed=True)
    assert np.all(cap != comp)
    assert euclidean_to_geodesic_cap(complement_cap(q, alpha)).radius == pytest.approx(np.pi - alpha)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_cap_image_property(seed):
    rng = np.random.default_rng(seed)
    c = random_unit(rng)
    r = rng.uniform(0.05, np.pi / 2 - 0.05)
    v = random_unit(rng) * rng.uniform(0, 0.9)
    cap = CapSpec.from_ball(c, r)
    if abs(cap.h @ cap.h - cap.h @ v) < 1e-6:
        return
    img = image_of_cap(v, cap)
    pts = apply_F(v, boundary_circle(c, r, 500, rng))
    assert np.allclose(chord_dist(pts, img.center), img.chord, atol=1e-9)
    x = uniform_sample_s3(4000, seed % 1000)
    d = geodesic_distance(c, x)
    inner = x[d < r - 1e-3][:500]
    outer = x[d > r + 1e-3][:500]
    assert np.all(geodesic_distance(img.center, apply_F(v, inner)) < img.radius)
    assert np.all(geodesic_distance(img.center, apply_F(v, outer)) > img.radius)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_image_of_ball_any_radius(seed):
    rng = np.random.default_rng(seed)
    c = random_unit(rng)
    r = rng.uniform(0.05, np.pi - 0.05)
    v = random_unit(rng) * rng.uniform(0, 0.85)
    try:
        img = image_of_ball(v, GeodesicBall(c, r))
    except DegenerateImageError:
        return
    pts = apply_F(v, boundary_circle(c, r, 200, rng))
    assert np.allclose(chord_dist(pts, img.center), img.chord, atol=1e-9)


def test_hemisphere_identity_at_zero(rng):
    for x in random_unit(rng, 10):
        img = image_of_geodesic_ball(np.zeros(4), x)
        assert np.allclose(img.center, x) and img.radius == pytest.approx(np.pi / 2)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_cap_euclidean_round_trip(seed):
    rng = np.random.default_rng(seed)
    ball = GeodesicBall(random_unit(rng), rng.uniform(0.01, np.pi - 0.01))
    back = euclidean_to_geodesic_cap(geodesic_cap_to_euclidean(ball))
    assert np.allclose(back.center, ball.center, atol=1e-12)
    assert back.radius == pytest.approx(ball.radius, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_composition_coherence(seed):
    rng = np.random.default_rng(seed)
    v = random_unit(rng) * rng.uniform(0, 0.9)
    c = random_unit(rng)
    r = rng.uniform(0.1, 1.4)
    pts = boundary_circle(c, r, 200, rng)
    assert np.allclose(apply_F_composed(v, pts), apply_F(v, pts), atol=1e-10)
    img = image_of_cap(v, CapSpec.from_ball(c, r))
    assert np.allclose(chord_dist(apply_F_composed(v, pts), img.center), img.chord, atol=1e-10)


def test_asymptotic_ratio_zero():
    p, n = default_frame()
    fit = asymptotic_image_bounds(p, n, 0.0, samples=2000)
    assert 0.45 <= fit.exponent <= 1.1
    assert fit.passed
    assert np.all(np.diff(fit.dev) < 0)


def test_asymptotic_predicted_ball_ratio_one():
    p, n = default_frame()
    q, r = predicted_limit_ball(p, n, np.pi / 4)
    assert np.allclose(q, -(p + n) / np.sqrt(2))
    assert r == pytest.approx(np.sqrt(2 * (1 - 1 / np.sqrt(2))))


def test_asymptotic_t_zero_is_exact():
    p, n = default_frame()
    fit = asymptotic_image_bounds(p, n, 0.0, samples=2000)
    # along the tangential approach the hemisphere image is an exact ball
    for s in fit.s_list:
        v = (1 - s) * p
        img = image_of_geodesic_ball(v, -n)
        pts = apply_F(v, boundary_circle(-n, np.pi / 2, 300, np.random.default_rng(0)))
        assert np.allclose(chord_dist(pts, img.center), img.chord, atol=1e-10)
    assert fit.meta["hemisphere_exact"] or max(fit.hemisphere_dev) < 1e-2


def test_asymptotic_rejects_non_tangent():
    with pytest.raises(InvalidInputError):
        asymptotic_image_bounds(E1, E1 + E3, 0.0, samples=10)
