"""Cone geometry: distances, apertures, revolved volumes.

The revolved-volume quadrature is checked against a closed form (zero
aperture gives a capsule whose volume is kappa_d t^d + kappa_{d-1} t^{d-1} r)
and against an independent hit-or-miss Monte Carlo oracle; the line search
is checked against dense parameter grids.
"""

import math

import numpy as np
import pytest

from vislab.geometry import (
    ConeSpec,
    ObstacleBall,
    ObstacleLine,
    SegmentToTarget,
    ThickenedCone,
    dist_line_cone,
    dist_point_cone,
    dist_point_segment,
    max_aperture,
    mc_volume_oracle,
    revolve_volume,
    _revolve_pieces,
)
from vislab.mathcore import RngStream, unit_ball_volume


def _capsule_volume(d, t, r):
    return unit_ball_volume(d) * t ** d + unit_ball_volume(d - 1) * t ** (d - 1) * r


# ---------------------------------------------------------------------------
# construction contracts
# ---------------------------------------------------------------------------

def test_segment_requires_nonzero_target():
    with pytest.raises(ValueError):
        SegmentToTarget(np.zeros(3))
    seg = SegmentToTarget([3.0, 4.0])
    assert seg.length == pytest.approx(5.0)
    assert seg.dimension == 2


def test_cone_aperture_bounds():
    ConeSpec([10.0, 0.0], 9.999)
    with pytest.raises(ValueError):
        ConeSpec([10.0, 0.0], 10.0)
    with pytest.raises(ValueError):
        ConeSpec([10.0, 0.0], -0.1)


def test_thickened_cone_requires_positive_thickness():
    cone = ConeSpec([5.0, 0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        ThickenedCone(cone, 0.0)


def test_line_direction_must_be_unit():
    ObstacleLine([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], 0.5)
    with pytest.raises(ValueError):
        ObstacleLine([0.0, 1.0, 0.0], [1.0, 1e-4, 0.0], 0.5)
    with pytest.raises(ValueError):
        ObstacleLine([0.0, 1.0], [1.0, 0.0], -0.2)


# ---------------------------------------------------------------------------
# point distances
# ---------------------------------------------------------------------------

def test_dist_point_segment_values():
    x = [10.0, 0.0, 0.0]
    assert dist_point_segment([5.0, 3.0, 0.0], x) == pytest.approx(3.0, abs=1e-12)
    assert dist_point_segment([-3.0, 4.0, 0.0], x) == pytest.approx(5.0, abs=1e-12)
    assert dist_point_segment([12.0, 0.0, 0.0], x) == pytest.approx(2.0, abs=1e-12)
    assert dist_point_segment([7.0, 0.0, 0.0], x) == pytest.approx(0.0, abs=1e-12)


def test_dist_point_cone_axis_and_interior():
    cone = ConeSpec([10.0, 0.0], 1.0)
    assert dist_point_cone([-1.0, 0.0], cone) == pytest.approx(1.0, abs=1e-12)
    # interior of the tangent triangle
    assert dist_point_cone([5.0, 0.3], cone) == pytest.approx(0.0, abs=1e-12)
    # boundary of the aperture ball
    assert dist_point_cone([11.0, 0.0], cone) == pytest.approx(0.0, abs=1e-12)
    assert dist_point_cone([12.0, 0.0], cone) == pytest.approx(1.0, abs=1e-12)


def test_dist_point_cone_tangent_band():
    r, q = 10.0, 1.0
    cone = ConeSpec([r, 0.0], q)
    ell = math.sqrt(r * r - q * q)
    u, h = 5.0, 2.0
    expected = (h * ell - u * q) / r  # perpendicular drop onto the tangent ray
    assert dist_point_cone([u, h], cone) == pytest.approx(expected, abs=1e-9)


def test_dist_point_cone_matches_hull_sampling():
    # distance to a dense point cloud of the hull is an upper bound that
    # converges from above; check agreement within the cloud resolution
    stream = RngStream(31, 0)
    r, q = 6.0, 1.2
    cone = ConeSpec([r, 0.0, 0.0], q)
    # hull points: lambda * (x + q * s), s on the unit sphere, plus segment
    sph = stream.unit_sphere(3, size=4000)
    ball_pts = np.array([r, 0.0, 0.0]) + q * sph
    lam = stream.uniform(4000)
    cloud = np.vstack([ball_pts, lam[:, None] * ball_pts])
    for _ in range(25):
        p = stream.gaussian(3) * 4.0
        d_kernel = dist_point_cone(p, cone)
        d_cloud = np.min(np.linalg.norm(cloud - p, axis=1))
        assert d_kernel <= d_cloud + 1e-9
        assert d_kernel >= d_cloud - 0.25


# ---------------------------------------------------------------------------
# line distances
# ---------------------------------------------------------------------------

def test_dist_line_cone_parallel_line():
    cone = ConeSpec([10.0, 0.0, 0.0], 1.0)
    line = ObstacleLine([0.0, 2.0, 0.0], [1.0, 0.0, 0.0])
    assert dist_line_cone(line, cone) == pytest.approx(1.0, abs=1e-8)
    far = ObstacleLine([0.0, 5.0, 0.0], [1.0, 0.0, 0.0])
    assert dist_line_cone(far, cone) == pytest.approx(4.0, abs=1e-8)


def test_dist_line_cone_crossing_line():
    cone = ConeSpec([10.0, 0.0, 0.0], 1.0)
    line = ObstacleLine([5.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    assert dist_line_cone(line, cone) == pytest.approx(0.0, abs=1e-12)


def test_dist_line_cone_against_dense_grid():
    stream = RngStream(92, 0)
    for d in (3, 4):
        cone = ConeSpec(np.r_[8.0, np.zeros(d - 1)], 0.9)
        for _ in range(20):
            b = stream.gaussian(d) * 5.0
            v = stream.unit_sphere(d)
            line = ObstacleLine(b, v)
            d_kernel = dist_line_cone(line, cone)
            t0 = -float(b @ v)
            w = 2.0 * 8.0 + math.sqrt(max(float(b @ b) - t0 * t0, 0.0)) + 2.0
            ts = np.linspace(t0 - w, t0 + w, 20001)
            pts = b[None, :] + ts[:, None] * v[None, :]
            d_grid = min(dist_point_cone(p, cone) for p in pts[::40])
            spacing = 40 * (ts[1] - ts[0])
            assert d_kernel <= d_grid + 1e-8
            assert d_kernel >= d_grid - spacing


# ---------------------------------------------------------------------------
# apertures
# ---------------------------------------------------------------------------

def test_max_aperture_ball_worked_example():
    # ball of radius 1 sitting 3 above the target: the cone of aperture q
    # is at distance 3 - q from its center once q >= ~0, so the threshold
    # aperture is exactly 2
    q, censored = max_aperture(ObstacleBall([10.0, 3.0], 1.0), [10.0, 0.0], 5.0)
    assert not censored
    assert q == pytest.approx(2.0, abs=1e-6)


def test_max_aperture_ball_censoring():
    q, censored = max_aperture(ObstacleBall([10.0, 3.0], 1.0), [10.0, 0.0], 1.5)
    assert censored
    assert q == 1.5


def test_max_aperture_rejects_blocking_obstacle():
    with pytest.raises(ValueError):
        max_aperture(ObstacleBall([5.0, 0.5], 1.0), [10.0, 0.0], 2.0)
    with pytest.raises(ValueError):
        max_aperture(ObstacleBall([5.0, 3.0], 1.0), [10.0, 0.0], 12.0)


def test_max_aperture_line_worked_example():
    # vertical line at (5, 2, 0): the first touch happens on the tangent
    # band, where the clearance is (h * sqrt(r^2 - q^2) - u q) / r - rad;
    # solving for q gives a quadratic
    line = ObstacleLine([5.0, 2.0, 0.0], [0.0, 0.0, 1.0], 0.5)
    q, censored = max_aperture(line, [10.0, 0.0, 0.0], 5.0)
    expected = (-50.0 + math.sqrt(46000.0)) / 58.0
    assert not censored
    assert q == pytest.approx(expected, abs=1e-5)


def test_max_aperture_line_censoring_and_blocking():
    line = ObstacleLine([5.0, 2.0, 0.0], [0.0, 0.0, 1.0], 0.5)
    q, censored = max_aperture(line, [10.0, 0.0, 0.0], 1.0)
    assert censored and q == 1.0
    blocking = ObstacleLine([5.0, 0.3, 0.0], [0.0, 0.0, 1.0], 0.5)
    with pytest.raises(ValueError):
        max_aperture(blocking, [10.0, 0.0, 0.0], 1.0)


def test_max_aperture_monotone_in_radius():
    target = [10.0, 0.0]
    qs = []
    for rad in (0.2, 0.6, 1.0, 1.4):
        q, _ = max_aperture(ObstacleBall([6.0, 2.5], rad), target, 8.0)
        qs.append(q)
    assert all(a > b for a, b in zip(qs, qs[1:]))


# ---------------------------------------------------------------------------
# revolved volumes
# ---------------------------------------------------------------------------

def test_revolve_volume_capsule_closed_form():
    # the quadrature itself, white-box at zero aperture, against the
    # ball-plus-cylinder closed form the public path returns exactly
    for d in (2, 3, 4, 5):
        for r, t in ((10.0, 1.0), (3.0, 0.25), (50.0, 2.0)):
            body = ThickenedCone(ConeSpec(np.r_[r, np.zeros(d - 1)], 0.0), t)
            want = _capsule_volume(d, t, r)
            assert revolve_volume(body, d) == pytest.approx(want, rel=1e-12)
            integral = _revolve_pieces(r, 0.0, t, d, 1e-10 * max(r, 1.0), 1e-8)
            assert abs(unit_ball_volume(d - 1) * integral - want) <= 1e-6 * want


def test_revolve_volume_planar_example():
    body = ThickenedCone(ConeSpec([10.0, 0.0], 0.0), 1.0)
    assert revolve_volume(body, 2) == pytest.approx(math.pi + 20.0, rel=1e-8)


def test_revolve_volume_degenerate_axis_is_ball():
    # aperture at least the axis length: the hull is just the aperture
    # ball, so the thickened body is a ball of radius q + t
    for n, r, q, t in ((3, 1.0, 1.5, 0.5), (4, 0.5, 2.0, 1.0)):
        integral = _revolve_pieces(r, q, t, n, 1e-12, 1e-9)
        got = unit_ball_volume(n - 1) * integral
        want = unit_ball_volume(n) * (q + t) ** n
        assert abs(got - want) <= 1e-7 * want


def test_revolve_volume_support_length():
    body = ThickenedCone(ConeSpec([10.0, 0.0], 2.0), 0.5)
    assert revolve_volume(body, 1) == pytest.approx(13.0, abs=1e-12)


def test_revolve_volume_against_mc_oracle():
    cases = [
        (2, 6.0, 0.8, 0.3, 2_000_000),
        (3, 4.0, 1.0, 0.5, 2_000_000),
        (4, 3.0, 0.6, 0.4, 1_000_000),
    ]
    for d, r, q, t, n_pts in cases:
        body = ThickenedCone(ConeSpec(np.r_[r, np.zeros(d - 1)], q), t)
        exact = revolve_volume(body, d)
        lo, hi = body.bounding_box()
        est, se = mc_volume_oracle(body.contains, lo, hi, n_pts, RngStream(7, d))
        assert abs(est - exact) <= 4.0 * se + 1e-9


def test_mc_volume_oracle_on_a_ball():
    # sanity of the oracle itself on a known body
    d = 3
    contains = lambda pts: np.linalg.norm(pts, axis=1) <= 1.0
    lo, hi = -np.ones(d), np.ones(d)
    est, se = mc_volume_oracle(contains, lo, hi, 500_000, RngStream(11, 0))
    assert abs(est - unit_ball_volume(3)) <= 4.0 * se
    with pytest.raises(ValueError):
        mc_volume_oracle(contains, hi, lo, 100, RngStream(0, 0))


def test_contains_membership():
    body = ThickenedCone(ConeSpec([10.0, 0.0, 0.0], 1.0), 0.5)
    assert body.contains([0.0, 0.0, 0.0])
    assert body.contains([10.0, 1.4, 0.0])
    assert not body.contains([10.0, 1.6, 0.0])
    assert not body.contains([-0.6, 0.0, 0.0])
    mask = body.contains(np.array([[5.0, 0.0, 0.0], [5.0, 5.0, 0.0]]))
    assert mask.tolist() == [True, False]
