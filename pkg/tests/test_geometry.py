import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqlmcf.geometry import (
    AsymptoticData,
    CurveError,
    ProfileCurve,
    aspect_ratio,
    curvature,
    curve_from_json,
    curve_to_json,
    diagnostics,
    flow_velocity,
    hausdorff_distance,
    lagrangian_angle_oscillation,
    point_polyline_distance,
    radial_term,
    resample,
    signed_curvature,
    winding_and_turning,
    windowed_polyline_hausdorff,
)
from eqlmcf.scenarios.generators import arc, chekanov, circle, ellipse, figure_eight, star


def _rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


# ---------------------------------------------------------------- validation

def test_too_few_points():
    with pytest.raises(CurveError, match="at least"):
        ProfileCurve(np.random.default_rng(0).normal(size=(5, 2)))


def test_repeated_point_rejected():
    pts = circle(1.0, 16).points.copy()
    pts[3] = pts[2]
    with pytest.raises(CurveError, match="distinct"):
        ProfileCurve(pts)


def test_closed_curve_must_not_repeat_start():
    pts = circle(1.0, 16).points
    with pytest.raises(CurveError, match="repeat"):
        ProfileCurve(np.vstack([pts, pts[:1]]))


def test_open_curve_needs_asymptotics():
    with pytest.raises(CurveError, match="asymptotic"):
        ProfileCurve(arc().points, "open")


def test_open_endpoints_must_sit_on_rays():
    pts = arc().points.copy()
    pts[-1] += [0.0, 1.0]
    with pytest.raises(CurveError, match="rays"):
        ProfileCurve(pts, "open", AsymptoticData(math.pi / 2))


@pytest.mark.parametrize("alpha", [0.0, math.pi, -1.0])
def test_bad_alpha(alpha):
    with pytest.raises(CurveError):
        AsymptoticData(alpha)


def test_ray_projection_keeps_radius():
    asym = AsymptoticData(math.pi / 2)
    p = np.array([3.0, 2.5])
    q = asym.project(p)
    assert np.hypot(*q) == pytest.approx(np.hypot(*p))
    assert asym.distance_to_rays(q) < 1e-12


# ---------------------------------------------------------------- curvature

@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("n", [64, 257])
def test_circle_curvature_points_inward(r, n):
    c = circle(r, n)
    k = curvature(c)
    np.testing.assert_allclose(k, -c.points / r**2, atol=2 * (2 * math.pi / n) ** 2 / r)


def test_signed_curvature_sign_follows_orientation():
    c = circle(1.0, 64)
    assert np.all(signed_curvature(c) > 0)
    rev = ProfileCurve(c.points[::-1])
    assert np.all(signed_curvature(rev) < 0)


def test_ellipse_curvature_second_order():
    # exact: ab / (a^2 sin^2 + b^2 cos^2)^{3/2}
    errs = []
    for n in (128, 256, 512):
        c = ellipse(3.0, 1.0, n)
        x, y = c.points.T
        u = np.arctan2(y / 1.0, x / 3.0)
        exact = 3.0 / (9 * np.sin(u) ** 2 + np.cos(u) ** 2) ** 1.5
        errs.append(np.abs(np.hypot(*curvature(c).T) - exact).max())
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_circle_flow_velocity_is_twice_curvature():
    # for circles about the origin the radial term equals the curvature vector
    c = circle(2.0, 256)
    np.testing.assert_allclose(flow_velocity(c), -2 * c.points / 4.0, atol=1e-4)


def test_radial_term_regularized_near_origin():
    c = figure_eight(3.0, 64)
    rad = radial_term(c, origin_epsilon=1e-3)
    assert np.all(np.isfinite(rad))
    np.testing.assert_allclose(rad[0], 0.5 * curvature(c)[0])


def test_lawlor_lagrangian_angle_constant_to_second_order():
    osc = [lagrangian_angle_oscillation(arc(spacing=h)) for h in (1 / 64, 1 / 128, 1 / 256)]
    assert osc[-1] < 1e-4
    assert osc[0] / osc[1] > 3.5 and osc[1] / osc[2] > 3.5


# ---------------------------------------------------------------- symmetries

curves = st.builds(
    lambda k, eps, n: star(k, eps, n),
    st.integers(1, 5), st.floats(0.0, 0.5), st.sampled_from([32, 64, 100]))


@settings(max_examples=25, deadline=None)
@given(c=curves, theta=st.floats(-math.pi, math.pi))
def test_flow_velocity_rotation_equivariant(c, theta):
    R = _rot(theta)
    eps = 1e-6
    v = flow_velocity(c, eps)
    vr = flow_velocity(ProfileCurve(c.points @ R.T), eps)
    np.testing.assert_allclose(vr, v @ R.T, atol=1e-12 * max(1.0, np.abs(v).max()))


@settings(max_examples=25, deadline=None)
@given(c=curves)
def test_flow_velocity_odd(c):
    v = flow_velocity(c, 1e-6)
    vm = flow_velocity(ProfileCurve(-c.points), 1e-6)
    np.testing.assert_allclose(vm, -v, atol=1e-12 * max(1.0, np.abs(v).max()))


# ---------------------------------------------------------------- topology

@pytest.mark.parametrize("curve, winding, turning", [
    (circle(1.0, 64), 1, 1),
    (ellipse(3.0, 1.0, 128), 1, 1),
    (chekanov(256), 0, 1),
    (star(3, 0.2, 128), 1, 1),
])
def test_winding_and_turning(curve, winding, turning):
    assert winding_and_turning(curve) == (winding, turning)


def test_figure_eight_passes_through_origin():
    w, t = winding_and_turning(figure_eight(3.0, 256))
    assert w is None and t == 0


def test_aspect_ratio():
    assert aspect_ratio(ellipse(3.0, 1.0, 512)) == pytest.approx(1 / 3, rel=1e-4)


def test_diagnostics_of_circle():
    d = diagnostics(circle(2.0, 512))
    assert d.length == pytest.approx(4 * math.pi, rel=1e-4)
    assert d.min_radius == pytest.approx(2.0)
    assert d.sup_velocity == pytest.approx(1.0, rel=1e-4)
    assert d.winding_number_about_origin == 1


# ---------------------------------------------------------------- resampling

def test_resample_circle_uniform_and_on_circle():
    rng = np.random.default_rng(3)
    u = np.sort(rng.uniform(0, 2 * math.pi, 200))
    c = ProfileCurve(np.c_[np.cos(u), np.sin(u)])
    r = resample(c, n=128)
    assert r.n == 128
    assert r.spacing_ratio() < 1.01
    np.testing.assert_allclose(np.hypot(*r.points.T), 1.0, atol=1e-3)


def test_resample_open_keeps_endpoints():
    a = arc(alpha=2.2, n=300)
    r = resample(a, target_spacing=0.05)
    np.testing.assert_array_equal(r.points[[0, -1]], a.points[[0, -1]])


def test_resample_rejects_degenerate_spacing():
    with pytest.raises(CurveError):
        resample(circle(1.0, 32), target_spacing=10.0)


# ---------------------------------------------------------------- distances

def test_point_polyline_distance_matches_brute_force():
    rng = np.random.default_rng(7)
    poly = np.cumsum(rng.normal(size=(60, 2)), axis=0)
    pts = rng.normal(scale=5, size=(300, 2))
    a, b = poly[:-1], poly[1:]
    d = b - a
    t = np.clip(np.einsum("pij,ij->pi", pts[:, None] - a, d) / np.einsum("ij,ij->i", d, d), 0, 1)
    brute = np.hypot(*(pts[:, None] - a - t[..., None] * d).transpose(2, 0, 1)).min(axis=1)
    np.testing.assert_allclose(point_polyline_distance(pts, poly), brute, atol=1e-12)


def test_windowed_hausdorff_parallel_lines():
    s = np.linspace(-5, 5, 11)
    a = [(np.c_[s, np.zeros_like(s)], False)]
    b = [(np.c_[s, np.full_like(s, 0.3)], False)]
    assert windowed_polyline_hausdorff(a, b, 2.0) == pytest.approx(0.3)


def test_windowed_hausdorff_empty_window():
    far = [(np.array([[10.0, 0.0], [11.0, 0.0]]), False)]
    with pytest.raises(CurveError):
        windowed_polyline_hausdorff(far, far, 1.0)


point_sets = st.integers(0, 10_000).map(
    lambda seed: np.random.default_rng(seed).normal(size=(np.random.default_rng(seed).integers(1, 40), 2)))


@settings(max_examples=60, deadline=None)
@given(a=point_sets, b=point_sets, c=point_sets)
def test_hausdorff_metric_axioms(a, b, c):
    dab = hausdorff_distance(a, b)
    assert dab >= 0
    assert hausdorff_distance(a, a) == 0.0
    assert dab == pytest.approx(hausdorff_distance(b, a), abs=1e-12)
    assert dab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12


# ---------------------------------------------------------------- persistence

@pytest.mark.parametrize("curve", [ellipse(3.0, 1.0, 64), arc(alpha=2.2, n=50)])
def test_json_round_trip_is_exact(curve):
    back = curve_from_json(curve_to_json(curve, time=0.125))
    np.testing.assert_array_equal(back.points, curve.points)
    assert back.topology == curve.topology
    d = json.loads(curve_to_json(curve, time=0.125))
    assert d["time"] == 0.125
    assert (d["asymptotics"] is None) == curve.closed


def test_json_keeps_full_precision():
    c = ProfileCurve(circle(1.0, 16).points * (1 + 1e-15))
    assert curve_from_json(curve_to_json(c)).points.tobytes() == c.points.tobytes()
