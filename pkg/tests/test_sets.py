import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from nlshape import (Ball, GeometryError, IntervalSet, ParamError, Params,
                     StarShape2D, diameter, geometry_from_dict,
                     geometry_to_dict, isodiametric_ratio, load_geometry,
                     save_geometry, volume)
from nlshape.sets import (beta_exponent, boundary_mesh, scaled, translated,
                          unit_volume_rescale)


# ---------------------------------------------------------------------------
# Params

def test_params_eps_from_mass():
    p = Params(n=1, s=0.5, alpha=0.5, mass=0.01)
    # exponent 1 - alpha/n + s/n = 1 at these values
    assert_allclose(p.eps, 0.01, rtol=1e-14)


def test_params_mass_from_eps():
    p = Params(n=2, s=0.5, alpha=0.5, eps=1e-3)
    assert_allclose(p.mass ** p.mass_to_eps_exponent(), 1e-3, rtol=1e-12)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95),
       st.floats(1e-8, 1e2), st.integers(1, 3))
def test_params_eps_mass_roundtrip(s, alpha, mass, n):
    if not alpha < n:
        mass = mass  # alpha < 1 <= n always holds here
    p = Params(n=n, s=s, alpha=alpha, mass=mass)
    q = p.with_eps(p.eps)
    assert_allclose(q.mass, mass, rtol=1e-9)


def test_params_rejects_inconsistent_pair():
    with pytest.raises(ParamError):
        Params(n=1, s=0.5, alpha=0.5, eps=0.5, mass=0.01)


@pytest.mark.parametrize("kw", [
    dict(s=0.0), dict(s=1.0), dict(s=-0.2), dict(alpha=0.0),
    dict(alpha=1.0), dict(alpha=2.0),
])
def test_params_range_checks_1d(kw):
    base = dict(n=1, s=0.5, alpha=0.5, eps=1e-3)
    base.update(kw)
    with pytest.raises(ParamError):
        Params(**base)


def test_params_alpha_range_scales_with_n():
    # alpha up to n is allowed in higher dimension
    p = Params(n=2, s=0.5, alpha=1.5, eps=1e-3)
    assert p.alpha == 1.5


def test_beta_exponent_value():
    p = Params(n=1, s=0.5, alpha=0.5, eps=1e-3)
    # (n + s - alpha) / ((2n + s + 1)n) = 1 / 3.5
    assert_allclose(beta_exponent(p), 1.0 / 3.5, rtol=1e-15)


# ---------------------------------------------------------------------------
# IntervalSet

def test_intervals_sorted_and_measured():
    S = IntervalSet([(2.0, 3.5), (0.0, 1.0)])
    assert S.endpoints()[0] == 0.0
    assert_allclose(volume(S), 2.5, rtol=1e-15)
    assert_allclose(diameter(S), 3.5, rtol=1e-15)


def test_intervals_reject_overlap_and_touch():
    with pytest.raises(GeometryError):
        IntervalSet([(0.0, 1.0), (0.5, 2.0)])
    with pytest.raises(GeometryError):
        IntervalSet([(0.0, 1.0), (1.0, 2.0)])
    with pytest.raises(GeometryError):
        IntervalSet([(1.0, 1.0)])


def test_intervals_contains():
    S = IntervalSet([(0.0, 1.0), (2.0, 3.0)])
    assert S.contains(0.5) and S.contains(2.9)
    assert not S.contains(1.5) and not S.contains(-0.1)


def test_interval_mesh_is_endpoints(unit_interval, params_1d):
    m = boundary_mesh(unit_interval, 8)
    assert m.points.shape == (2, 1)
    assert_allclose(m.weights, [1.0, 1.0])
    assert_allclose(m.normals[:, 0], [-1.0, 1.0])


# ---------------------------------------------------------------------------
# Ball

def test_ball_volumes():
    assert_allclose(volume(Ball((0.0,), 2.0)), 4.0)
    assert_allclose(volume(Ball((0.0, 0.0), 1.5)), np.pi * 2.25)
    assert_allclose(volume(Ball((0.0, 0.0, 0.0), 1.0)), 4.0 * np.pi / 3.0)
    assert_allclose(diameter(Ball((3.0, 4.0), 1.25)), 2.5)


def test_unit_area_disk_iso_ratio(unit_area_disk):
    # |E|^(1/2)/diam = sqrt(pi)/2 for any disk
    assert_allclose(isodiametric_ratio(unit_area_disk),
                    math.sqrt(math.pi) / 2.0, rtol=1e-12)


# ---------------------------------------------------------------------------
# StarShape2D

def test_star_radius_and_volume(mode3_star):
    th = np.array([0.0, np.pi / 3.0])
    assert_allclose(mode3_star.radius(th), [1.2, 0.8], rtol=1e-14)
    # area of r = 1 + a cos(3 theta) is pi (1 + a^2 / 2)
    assert_allclose(volume(mode3_star), np.pi * (1.0 + 0.02), rtol=1e-12)


def test_star_rejects_nonpositive_radius():
    with pytest.raises(GeometryError):
        StarShape2D((0.0, 0.0), 1.0, a=(1.5,))


def test_star_diameter_of_disk():
    assert_allclose(diameter(StarShape2D((5.0, -1.0), 2.0)), 4.0, rtol=1e-9)


@given(st.lists(st.floats(-0.04, 0.04), min_size=2, max_size=5))
def test_star_from_samples_roundtrip(coeffs):
    star = StarShape2D((0.0, 0.0), 1.0, a=tuple(coeffs))
    m = 64
    th = 2.0 * np.pi * np.arange(m) / m
    rebuilt = StarShape2D.from_samples((0.0, 0.0), star.radius(th),
                                       k_max=len(coeffs))
    assert_allclose(rebuilt.radius(th), star.radius(th), atol=1e-12)


def test_from_samples_caps_modes():
    m = 32
    th = 2.0 * np.pi * np.arange(m) / m
    vals = 1.0 + 0.1 * np.cos(5 * th)
    star = StarShape2D.from_samples((0.0, 0.0), vals, k_max=3)
    assert len(star.a) <= 3


def test_boundary_mesh_geometry(mode3_star):
    m = boundary_mesh(mode3_star, 128)
    # unit outward normals, orthogonal tangents, positive weights
    assert_allclose(np.hypot(m.normals[:, 0], m.normals[:, 1]), 1.0,
                    atol=1e-13)
    assert np.all((m.normals * m.tangents).sum(axis=1) < 1e-13)
    assert np.all(m.weights > 0)
    radial = m.points / np.hypot(m.points[:, 0], m.points[:, 1])[:, None]
    assert np.all((m.normals * radial).sum(axis=1) > 0)


def test_boundary_mesh_weights_sum_to_length(unit_disk):
    m = boundary_mesh(unit_disk, 256)
    assert_allclose(m.weights.sum(), 2.0 * np.pi, rtol=1e-12)


def test_mesh_arrays_read_only(unit_disk):
    m = boundary_mesh(unit_disk, 64)
    with pytest.raises(ValueError):
        m.points[0, 0] = 99.0


# ---------------------------------------------------------------------------
# transforms

def test_scaled_and_translated_volumes(mode3_star):
    v = volume(mode3_star)
    assert_allclose(volume(scaled(mode3_star, 2.0)), 4.0 * v, rtol=1e-12)
    moved = translated(mode3_star, (3.0, -1.0))
    assert_allclose(volume(moved), v, rtol=1e-12)
    assert_allclose(moved.center, (3.0, -1.0))


def test_unit_volume_rescale(mode3_star):
    p = Params(n=2, s=0.5, alpha=0.5, eps=1e-3)
    S1, p1 = unit_volume_rescale(mode3_star, p)
    assert_allclose(volume(S1), 1.0, rtol=1e-12)
    assert_allclose(p1.mass, volume(mode3_star), rtol=1e-12)
    assert_allclose(p1.eps, p1.mass ** p1.mass_to_eps_exponent(), rtol=1e-12)


def test_iso_ratio_scale_invariant(mode3_star):
    a = isodiametric_ratio(mode3_star)
    b = isodiametric_ratio(scaled(mode3_star, 7.3))
    assert_allclose(a, b, rtol=1e-12)


# ---------------------------------------------------------------------------
# serialization

@pytest.mark.parametrize("shape", [
    IntervalSet([(0.0, 0.5), (2.0, 2.5)]),
    Ball((1.0, -2.0), 0.75),
    StarShape2D((0.1, 0.2), 1.1, a=(0.01, 0.0, 0.2), b=(0.0, 0.05)),
])
def test_geometry_dict_roundtrip(shape):
    d = geometry_to_dict(shape)
    back = geometry_from_dict(json.loads(json.dumps(d)))
    assert type(back) is type(shape)
    assert_allclose(volume(back), volume(shape), rtol=1e-12)


def test_geometry_file_roundtrip(tmp_path, mode3_star):
    path = tmp_path / "shape.json"
    save_geometry(mode3_star, path)
    back = load_geometry(path)
    th = np.linspace(0, 2 * np.pi, 17)
    assert_allclose(back.radius(th), mode3_star.radius(th), rtol=1e-14)
