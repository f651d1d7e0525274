"""Cylinder-obstacle model: projection functionals vs direct line sampling.

The kinematic-measure formulas and the line samplers are two independent
descriptions of the same process, so hit frequencies, avoidance
probabilities and the conditional clearance law are each checked both
ways.
"""

import math

import numpy as np
import pytest
from scipy import stats

from vislab.cylinders import (
    CylinderParams,
    conditional_survival_exact,
    e_norm_xi,
    lambda_pc,
    mu_cone,
    mu_segment,
    sample_conditional_scene,
    sample_lines,
    sample_Q,
    visibility_probability,
    _xi_nodes,
)
from vislab.geometry import (
    PROFILE_TOL,
    VOLUME_REL_TOL,
    _revolve_pieces,
    dist_lines_segment,
)
from vislab.mathcore import RngStream, unit_ball_volume

PLANAR = CylinderParams(0.3, 1.0, 2)


def line_arrays(lines):
    pts = np.array([l.point for l in lines])
    vs = np.array([l.direction for l in lines])
    return pts, vs


# ---------------------------------------------------------------------------
# projection constants and quadrature
# ---------------------------------------------------------------------------

def test_e_norm_xi_known_values():
    assert e_norm_xi(2) == pytest.approx(2.0 / math.pi, rel=1e-12)
    assert e_norm_xi(3) == pytest.approx(math.pi / 4.0, rel=1e-12)
    assert e_norm_xi(4) == pytest.approx(8.0 / (3.0 * math.pi), rel=1e-12)


def test_e_norm_xi_against_direct_sampling():
    v = RngStream(644).unit_sphere(5, size=1_000_000)
    sin_t = np.sqrt(np.clip(1.0 - v[:, 0] ** 2, 0.0, 1.0))
    se = sin_t.std() / math.sqrt(len(sin_t))
    assert abs(sin_t.mean() - e_norm_xi(5)) <= 4.0 * se


def test_xi_nodes_reproduce_mean_projection():
    for d in range(2, 9):
        xis, ws = _xi_nodes(d)
        assert ws.sum() == pytest.approx(1.0, abs=1e-14)
        assert float(xis @ ws) == pytest.approx(e_norm_xi(d), rel=1e-12)


def test_mu_cone_quadrature_stability():
    params = CylinderParams(0.2, 1.0, 3)
    r, s = 40.0, 3.0
    got = mu_cone(r, s, params)
    xis, ws = _xi_nodes(3, 128)
    kappa = unit_ball_volume(1)
    ref = sum(w * kappa * _revolve_pieces(r * float(xi), s / r, 1.0, 2,
                                          PROFILE_TOL * max(r * xi, 1.0),
                                          VOLUME_REL_TOL)
              for xi, w in zip(xis, ws))
    assert got == pytest.approx(float(ref), rel=5e-8)


# ---------------------------------------------------------------------------
# exact functionals
# ---------------------------------------------------------------------------

def test_mu_segment_planar_value():
    assert mu_segment(10.0, PLANAR) \
        == pytest.approx(2.0 + 20.0 / math.pi, rel=1e-12)


def test_mu_cone_anchored_and_monotone():
    params = CylinderParams(0.2, 1.0, 3)
    assert mu_cone(25.0, 0.0, params) == mu_segment(25.0, params)
    grid = [mu_cone(25.0, s, params) for s in (0.0, 0.5, 2.0, 5.0, 12.0)]
    assert all(b > a for a, b in zip(grid, grid[1:]))


def hull_increment_2d(s, r):
    # kinematic measure gained by the full planar hull over the segment
    # (Cauchy: measure = perimeter / pi), used to cross-check the samplers
    return s + (2.0 * (math.sqrt(r * r - s * s) - r)
                + 2.0 * s * math.asin(s / r)) / math.pi


def test_planar_shadow_increment_is_exact():
    for r in (5.0, 50.0, 500.0):
        got = mu_cone(r, 1.0, PLANAR) - mu_segment(r, PLANAR)
        assert got == pytest.approx(1.0, abs=1e-12)
    # the directional-shadow convention and the full hull differ by the
    # wedge surplus s^2/(pi r) + O(s^4/r^3), vanishing in the window limit
    assert hull_increment_2d(2.0, 500.0) - 2.0 \
        == pytest.approx(4.0 / (500.0 * math.pi), rel=0.05)


def test_cone_increment_approaches_limit_rate():
    # (mu_cone - mu_segment)/s converges to lambda/alpha at rate 1/r
    for d in (3, 4):
        params = CylinderParams(0.5, 1.0, d)
        limit = lambda_pc(params) / params.alpha
        devs = [abs((mu_cone(r, 1.0, params) - mu_segment(r, params)) - limit)
                for r in (50.0, 200.0, 800.0)]
        assert devs[0] > devs[1] > devs[2]
        assert devs[2] <= 0.01 * limit


def test_lambda_pc_values():
    assert lambda_pc(CylinderParams(0.7, 2.5, 2)) == 0.7
    assert lambda_pc(CylinderParams(0.4, 1.7, 3)) \
        == pytest.approx(0.4 * math.pi / 4.0, rel=1e-12)
    assert lambda_pc(CylinderParams(0.3, 1.0, 4)) \
        == pytest.approx(0.8, rel=1e-12)


def test_conditional_survival_basics():
    params = CylinderParams(0.2, 1.0, 3)
    assert conditional_survival_exact(params, 30.0, 0.0) == 1.0
    grid = [conditional_survival_exact(params, 30.0, s)
            for s in np.linspace(0.0, 25.0, 11)]
    assert all(a >= b for a, b in zip(grid, grid[1:]))
    half = conditional_survival_exact(CylinderParams(0.1, 1.0, 3), 30.0, 8.0)
    assert conditional_survival_exact(params, 30.0, 8.0) \
        == pytest.approx(half ** 2, rel=1e-10)


def test_planar_survival_is_exactly_exponential():
    for r in (5.0, 50.0, 500.0):
        assert conditional_survival_exact(PLANAR, r, 2.0) \
            == pytest.approx(math.exp(-0.6), rel=1e-12)


def test_argument_contracts():
    params = CylinderParams(0.2, 1.0, 3)
    with pytest.raises(ValueError):
        CylinderParams(0.0, 1.0, 3)
    with pytest.raises(ValueError):
        CylinderParams(0.2, -1.0, 3)
    with pytest.raises(ValueError):
        mu_segment(0.0, params)
    with pytest.raises(ValueError):
        mu_cone(10.0, -1.0, params)
    with pytest.raises(ValueError):
        mu_cone(8.0, 9.0, PLANAR)  # planar aperture reaches r


# ---------------------------------------------------------------------------
# line sampling vs the same functionals
# ---------------------------------------------------------------------------

def test_line_counts_and_capsule_hits_match_measure():
    for d, alpha, n_scenes, seed in ((2, 0.5, 800, 1201), (3, 0.3, 400, 1202)):
        params = CylinderParams(alpha, 1.0, d)
        r, r_b = 10.0, 12.0
        total = 0
        hits = 0
        target = np.r_[r, np.zeros(d - 1)]
        for j in range(n_scenes):
            lines = sample_lines(params, r_b, RngStream(seed, j))
            total += len(lines)
            if lines:
                pts, vs = line_arrays(lines)
                hits += int(np.sum(dist_lines_segment(pts, vs, target) <= 1.0))
        mean_total = n_scenes * alpha * unit_ball_volume(d - 1) * r_b ** (d - 1)
        assert abs(total - mean_total) <= 3.5 * math.sqrt(mean_total)
        mean_hits = n_scenes * alpha * mu_segment(r, params)
        assert abs(hits - mean_hits) <= 3.5 * math.sqrt(mean_hits)


def test_avoidance_frequency_matches_probability():
    params = CylinderParams(0.2, 1.0, 2)
    r, n = 10.0, 1500
    target = np.array([r, 0.0])
    clear = 0
    for j in range(n):
        lines = sample_lines(params, 12.0, RngStream(757, j))
        if not lines:
            clear += 1
            continue
        pts, vs = line_arrays(lines)
        clear += bool(np.all(dist_lines_segment(pts, vs, target) > 1.0))
    p = visibility_probability(params, r)
    assert abs(clear / n - p) <= 3.5 * math.sqrt(p * (1.0 - p) / n)


def test_sampled_lines_are_isotropic_with_uniform_offsets():
    lines = sample_lines(CylinderParams(25.0, 1.0, 2), 10.0, RngStream(31))
    pts, vs = line_arrays(lines)
    angles = np.mod(np.arctan2(vs[:, 1], vs[:, 0]), math.pi)
    counts, _ = np.histogram(angles, bins=8, range=(0.0, math.pi))
    assert stats.chisquare(counts).pvalue > 1e-3
    # signed offset along the rotated direction is uniform on [-10, 10]
    offs = pts[:, 0] * -vs[:, 1] + pts[:, 1] * vs[:, 0]
    n = len(offs)
    assert abs(offs.mean()) <= 4.0 * 10.0 / math.sqrt(3.0 * n)
    assert abs(offs.var() / (100.0 / 3.0) - 1.0) <= 4.0 * math.sqrt(2.0 / n)


# ---------------------------------------------------------------------------
# conditional scenes
# ---------------------------------------------------------------------------

def test_conditional_scene_count_matches_thinned_measure():
    params = CylinderParams(0.2, 1.0, 3)
    r, q_cap, n = 100.0, 0.5, 300
    rho_w = 1.5
    mu_w = unit_ball_volume(2) * rho_w ** 2 \
        + unit_ball_volume(1) * rho_w * r * e_norm_xi(3)
    total = sum(sample_conditional_scene(params, r, q_cap,
                                         RngStream(404, j)).n_obstacles
                for j in range(n))
    mean = n * params.alpha * (mu_w - mu_segment(r, params))
    assert abs(total - mean) <= 3.5 * math.sqrt(mean)


def test_conditional_scene_keeps_segment_clear():
    params = CylinderParams(0.3, 1.0, 3)
    for j in range(20):
        scene = sample_conditional_scene(params, 20.0, 0.8, RngStream(99, j))
        assert scene.conditioned and scene.kind == "lines"
        if scene.n_obstacles:
            d = dist_lines_segment(scene.positions, scene.directions,
                                   scene.target)
            assert np.all(d > 1.0)


def test_planar_clearance_matches_hull_measure():
    # sampled scenes measure clearance against the full convex hull, whose
    # planar kinematic increment is elementary; at this alpha the wedge
    # surplus over the shadow convention is several sigma wide, so the
    # test pins the samplers to the true geometry
    params = PLANAR
    r, q_cap, n = 10.0, 9.0, 4000
    qs = np.empty(n)
    for j in range(n):
        scene = sample_conditional_scene(params, r, q_cap, RngStream(2203, j))
        qs[j], _ = sample_Q(scene, scene.target, q_cap)
    for s in (1.0, 3.0, 6.0):
        p = math.exp(-params.alpha * hull_increment_2d(s, r))
        phat = float(np.mean(qs > s))
        assert abs(phat - p) <= 4.0 * math.sqrt(p * (1.0 - p) / n), \
            f"s={s}: {phat} vs {p}"


def test_conditional_clearance_matches_exact_3d():
    params = CylinderParams(0.2, 1.0, 3)
    r, q_cap, n = 100.0, 0.5, 2500
    qs = np.empty(n)
    for j in range(n):
        scene = sample_conditional_scene(params, r, q_cap, RngStream(3307, j))
        qs[j], _ = sample_Q(scene, scene.target, q_cap)
    for s in (1.0, 5.0, 15.0):
        p = conditional_survival_exact(params, r, s)
        phat = float(np.mean(qs > s / r))
        assert abs(phat - p) <= 4.0 * math.sqrt(p * (1.0 - p) / n), \
            f"s={s}: {phat} vs {p}"


def test_conditional_scene_reproducible_and_validated():
    params = CylinderParams(0.3, 1.0, 3)
    a = sample_conditional_scene(params, 15.0, 0.6, RngStream(12, 4))
    b = sample_conditional_scene(params, 15.0, 0.6, RngStream(12, 4))
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.directions, b.directions)
    with pytest.raises(ValueError):
        sample_conditional_scene(params, 15.0, 0.0, RngStream(1))
    with pytest.raises(ValueError):
        sample_conditional_scene(params, 15.0, 15.0, RngStream(1))
