"""Poisson cylinder obstacles: line-process functionals and scene sampling.

Obstacles are solid cylinders of radius rho around the lines of an
isotropic Poisson line process with intensity alpha.  Avoidance
probabilities reduce to the kinematic measure of the set of lines hitting
a convex body, i.e. alpha times the mean (d-1)-volume of the body's
projection onto a uniformly random hyperplane.  A thickened sight segment
projects to a stadium, and a thickened viewing cone projects to the same
kind of revolved hull profile the geometry module integrates, one
dimension down, so the exact laws come out of a single polar-angle
quadrature.

In the plane the cone and the segment have the same one-dimensional
shadow apart from the aperture disk, and the model is taken with the
directional-shadow convention: opening the aperture to q lengthens every
shadow by exactly q, making the finite-distance clearance law exactly
exponential at every viewing distance (the window is constant there, not
1/r).  Sampled scenes measure clearance against the full convex hull,
whose shadow carries an extra q^2/(pi r) + O(q^4/r^3) wedge term; the two
descriptions coincide in the window limit.
"""

import math
from dataclasses import dataclass

import numpy as np

from .boolean import ObstacleScene, sample_Q
from .geometry import (
    PROFILE_TOL,
    VOLUME_REL_TOL,
    ObstacleLine,
    _revolve_pieces,
    dist_lines_segment,
)
from .mathcore import beta_fn, check_dimension, unit_ball_volume

__all__ = [
    "CylinderParams",
    "e_norm_xi",
    "mu_segment",
    "mu_cone",
    "lambda_pc",
    "visibility_probability",
    "conditional_survival_exact",
    "sample_lines",
    "sample_conditional_scene",
    "sample_Q",
]

QUADRATURE_NODES = 64
DEGENERATE_SIN = 1e-12


@dataclass(frozen=True)
class CylinderParams:
    """Intensity, cylinder radius and ambient dimension of the line process."""

    alpha: float
    rho: float
    dimension: int

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        check_dimension(self.dimension)


def e_norm_xi(d):
    """Mean norm of a unit vector projected onto the hyperplane orthogonal
    to a uniform random direction: B(1/2, d/2) / B(1/2, (d-1)/2).

    Equals 2/pi in the plane and pi/4 in dimension three.
    """
    check_dimension(d)
    return beta_fn(0.5, d / 2.0) / beta_fn(0.5, (d - 1) / 2.0)


def _xi_nodes(d, n_nodes=QUADRATURE_NODES):
    """Quadrature for E[f(sin theta)] under the polar angle of a uniform
    direction (density proportional to sin^(d-2) theta on [0, pi])."""
    xs, ws = np.polynomial.legendre.leggauss(int(n_nodes))
    theta = (xs + 1.0) * (math.pi / 2.0)
    w = ws * np.sin(theta) ** (d - 2)
    return np.sin(theta), w / w.sum()


def mu_segment(r, params):
    """Kinematic measure of lines passing within rho of the sight segment.

    The rho-neighborhood of the segment projects to a stadium on every
    hyperplane, so the mean projection volume is in closed form.
    """
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    d = params.dimension
    rho = params.rho
    return unit_ball_volume(d - 1) * rho ** (d - 1) \
        + unit_ball_volume(d - 2) * rho ** (d - 2) * r * e_norm_xi(d)


def mu_cone(r, s, params):
    """Kinematic measure of lines passing within rho of the viewing cone
    whose aperture is s at the scale of the visibility window.

    For d >= 3 the aperture is q = s/r and the projected body on a
    hyperplane at polar angle theta is the thickened hull of a point and a
    ball of radius q at distance r sin(theta), integrated by the profile
    quadrature one dimension down and averaged over theta.  In the plane
    the directional-shadow convention applies (module docstring): the
    measure grows by exactly s.
    """
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    if s < 0.0:
        raise ValueError(f"s must be nonnegative, got {s}")
    base = mu_segment(r, params)
    if s == 0.0:
        return base
    d = params.dimension
    if d == 2:
        if s >= r:
            raise ValueError(f"aperture s = {s} must stay below r = {r}")
        return base + s
    q = s / r
    if q >= r:
        raise ValueError(f"aperture s/r = {q} must stay below r = {r}")
    xis, ws = _xi_nodes(d)
    rho = params.rho
    kappa = unit_ball_volume(d - 2)
    total = 0.0
    for xi, w in zip(xis, ws):
        axis = r * float(xi)
        tol = PROFILE_TOL * max(axis, 1.0)
        total += w * kappa * _revolve_pieces(axis, q, rho, d - 1, tol,
                                             VOLUME_REL_TOL)
    return float(total)


def lambda_pc(params):
    """Exponential rate of the limiting clearance law for cylinders."""
    d = params.dimension
    if d == 2:
        return params.alpha
    return 0.5 * params.alpha * (d - 2) * unit_ball_volume(d - 2) \
        * params.rho ** (d - 3) * e_norm_xi(d)


def visibility_probability(params, r):
    """Probability that the sight segment of length r meets no cylinder."""
    return math.exp(-params.alpha * mu_segment(r, params))


def conditional_survival_exact(params, r, s):
    """P[Q > s * delta_r | segment visible]; delta_r is 1 in the plane and
    1/r otherwise."""
    if s == 0.0:
        return 1.0
    return math.exp(-params.alpha * (mu_cone(r, s, params)
                                     - mu_segment(r, params)))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _perp_gaussian_unit(stream, vs, others=None):
    """Unit vectors uniform on the sphere of the subspace orthogonal to
    each row of vs (and of others, already orthonormal to vs, if given)."""
    g = stream.gaussian(vs.shape)
    g = g - vs * np.einsum("ij,ij->i", g, vs)[:, None]
    if others is not None:
        g = g - others * np.einsum("ij,ij->i", g, others)[:, None]
    norms = np.sqrt(np.einsum("ij,ij->i", g, g))
    norms[norms == 0.0] = 1.0
    return g / norms[:, None]


def sample_lines(params, window_radius, stream):
    """Poisson line process restricted to lines hitting B(0, window_radius).

    Mean count alpha * kappa_{d-1} * window_radius^(d-1); each line has a
    uniform direction and a uniform offset in the projected ball.
    """
    if window_radius <= 0.0:
        raise ValueError(f"window_radius must be positive, got {window_radius}")
    d = params.dimension
    mean = params.alpha * unit_ball_volume(d - 1) * window_radius ** (d - 1)
    n = stream.poisson(mean)
    if n == 0:
        return []
    vs = stream.unit_sphere(d, size=n)
    u = _perp_gaussian_unit(stream, vs)
    off = window_radius * stream.uniform(n) ** (1.0 / (d - 1))
    pts = u * off[:, None]
    return [ObstacleLine(p, v, params.rho) for p, v in zip(pts, vs)]


def _empty_line_scene(d, target, rho_w):
    return ObstacleScene("lines", np.empty((0, d)), np.empty(0), target,
                         rho_w, True, directions=np.empty((0, d)))


def sample_conditional_scene(params, r, q_cap, stream):
    """Cylinder scene conditioned on the sight segment being clear.

    Only lines passing within rho + q_cap of the segment can bind the
    clearance radius below the cap, so the sampler restricts the line
    process to that tube.  Directions follow the projected stadium volume
    (rejection against its peak); offsets are uniform on the stadium,
    split between its tube part and the two end caps; blocking lines are
    then deleted, which realizes the conditional law by restriction.
    """
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    if not 0.0 < q_cap < r:
        raise ValueError(f"q_cap must lie in (0, r), got {q_cap}")
    d = params.dimension
    rho = params.rho
    rho_w = rho + q_cap
    area_caps = unit_ball_volume(d - 1) * rho_w ** (d - 1)
    area_tube = unit_ball_volume(d - 2) * rho_w ** (d - 2) * r
    mu_w = area_caps + area_tube * e_norm_xi(d)
    target = np.r_[float(r), np.zeros(d - 1)]
    n = stream.poisson(params.alpha * mu_w)
    if n == 0:
        return _empty_line_scene(d, target, rho_w)

    # directions: density proportional to the stadium volume at the line's
    # polar angle, bounded by the volume at a right angle
    vs = np.empty((n, d))
    bound = area_caps + area_tube
    filled = 0
    while filled < n:
        m = max(128, 2 * (n - filled))
        cand = stream.unit_sphere(d, size=m)
        sin_t = np.sqrt(np.clip(1.0 - cand[:, 0] ** 2, 0.0, 1.0))
        accepted = cand[stream.uniform(m) * bound
                        <= area_caps + area_tube * sin_t]
        take = accepted[: n - filled]
        vs[filled:filled + take.shape[0]] = take
        filled += take.shape[0]

    sin_t = np.sqrt(np.clip(1.0 - vs[:, 0] ** 2, 0.0, 1.0))
    span = r * sin_t
    # unit image of the segment direction in each line's orthogonal
    # hyperplane; a perpendicular fallback covers near-axial directions
    x_perp = -vs * vs[:, :1]
    x_perp[:, 0] += 1.0
    fallback = np.zeros_like(vs)
    fallback[:, 0] = -vs[:, 1]
    fallback[:, 1] = vs[:, 0]
    fb_norm = np.sqrt(np.einsum("ij,ij->i", fallback, fallback))
    fb_norm[fb_norm == 0.0] = 1.0
    degenerate = sin_t < DEGENERATE_SIN
    xw = np.where(degenerate[:, None], fallback / fb_norm[:, None],
                  x_perp / np.maximum(sin_t, DEGENERATE_SIN)[:, None])

    if d == 2:
        # the stadium collapses to an interval of length span + 2 rho_w
        t_off = -rho_w + (span + 2.0 * rho_w) * stream.uniform(n)
        pts = xw * t_off[:, None]
    else:
        tube_part = unit_ball_volume(d - 2) * rho_w ** (d - 2) * span
        is_cap = stream.uniform(n) * (tube_part + area_caps) < area_caps
        is_cap |= degenerate
        y = _perp_gaussian_unit(stream, vs) \
            * (rho_w * stream.uniform(n) ** (1.0 / (d - 1)))[:, None]
        attach = (np.einsum("ij,ij->i", y, xw) >= 0.0) & ~degenerate
        cap_pts = y + np.where(attach, span, 0.0)[:, None] * xw
        u_tube = _perp_gaussian_unit(stream, vs, others=xw)
        tube_pts = xw * (span * stream.uniform(n))[:, None] \
            + u_tube * (rho_w * stream.uniform(n) ** (1.0 / (d - 2)))[:, None]
        pts = np.where(is_cap[:, None], cap_pts, tube_pts)

    keep = dist_lines_segment(pts, vs, target) > rho
    if not np.any(keep):
        return _empty_line_scene(d, target, rho_w)
    return ObstacleScene("lines", pts[keep], np.full(int(keep.sum()), rho),
                         target, rho_w, True, directions=vs[keep])