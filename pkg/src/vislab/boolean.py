"""Poisson ball obstacles: exact avoidance laws and conditional scenes.

Obstacle balls sit at a Poisson point process of intensity alpha with
i.i.d. radii.  Avoidance probabilities of a compact body are exponentials
of alpha times the expected volume of the body's radius-neighborhood, so
both the visibility probability and the full finite-distance law of the
clearance radius Q come out in closed form (up to one quadrature over the
radius law).  Scene sampling realizes the conditional process exactly by
thinning: conditioning a Poisson process on avoiding the sight segment is
the same process restricted to non-blocking centers.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    APERTURE_TOL,
    ConeSpec,
    LINE_SEARCH_TOL,
    ObstacleBall,
    ObstacleLine,
    ThickenedCone,
    _min_aperture_balls,
    _min_aperture_lines,
    axis_coordinates,
    dist_lines_segment,
    dist_points_segment,
    revolve_volume,
)
from .mathcore import check_dimension, unit_ball_volume

__all__ = [
    "RadiusLaw",
    "BooleanParams",
    "ObstacleScene",
    "expected_nbhd_volume",
    "visibility_probability",
    "conditional_survival_exact",
    "lambda_bm",
    "sample_conditional_scene",
    "sample_unconditioned_scene",
    "segment_blocked",
    "sample_Q",
]

QUADRATURE_NODES = 64


@dataclass(frozen=True)
class RadiusLaw:
    """Distribution of the obstacle ball radius.

    Three variants: a point mass ("constant"), uniform on an interval
    ("uniform"), and a finite mixture of atoms ("discrete").  All variants
    have bounded positive support, which the scene samplers require; the
    analytic paths only use moments.
    """

    kind: str
    values: tuple
    probs: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            if len(self.values) != 1 or self.values[0] <= 0.0:
                raise ValueError("constant law needs one positive value")
        elif self.kind == "uniform":
            if len(self.values) != 2 or not 0.0 < self.values[0] < self.values[1]:
                raise ValueError("uniform law needs bounds 0 < a < b")
        elif self.kind == "discrete":
            if not self.values or len(self.values) != len(self.probs):
                raise ValueError("discrete law needs matching values and probs")
            if any(v <= 0.0 for v in self.values):
                raise ValueError("discrete law values must be positive")
            if any(p <= 0.0 for p in self.probs):
                raise ValueError("discrete law probabilities must be positive")
            if abs(sum(self.probs) - 1.0) > 1e-12:
                raise ValueError("discrete law probabilities must sum to 1 (1e-12)")
        else:
            raise ValueError(f"unknown radius law kind {self.kind!r}")

    @classmethod
    def constant(cls, value):
        return cls("constant", (float(value),))

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", (float(lo), float(hi)))

    @classmethod
    def discrete(cls, pairs):
        vals = tuple(float(v) for v, _ in pairs)
        probs = tuple(float(p) for _, p in pairs)
        return cls("discrete", vals, probs)

    @classmethod
    def parse(cls, spec):
        """Parse the CLI grammar: const:V | unif:A:B | disc:v1@p1,v2@p2,...

        Discrete probabilities are accepted when they sum to 1 within 1e-9
        and are renormalized to satisfy the stricter type invariant.
        """
        def num(token):
            try:
                return float(token)
            except ValueError:
                raise ValueError(f"malformed radius law spec {spec!r}") from None

        parts = str(spec).split(":")
        if parts[0] == "const" and len(parts) == 2:
            return cls.constant(num(parts[1]))
        if parts[0] == "unif" and len(parts) == 3:
            return cls.uniform(num(parts[1]), num(parts[2]))
        if parts[0] == "disc" and len(parts) == 2 and parts[1]:
            pairs = []
            for atom in parts[1].split(","):
                bits = atom.split("@")
                if len(bits) != 2:
                    raise ValueError(f"malformed radius law spec {spec!r}")
                pairs.append((num(bits[0]), num(bits[1])))
            total = sum(p for _, p in pairs)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(
                    f"discrete probabilities sum to {total}, not 1 (tol 1e-9)"
                )
            return cls.discrete([(v, p / total) for v, p in pairs])
        raise ValueError(f"malformed radius law spec {spec!r}")

    @property
    def upper_bound(self):
        """Largest radius the law can produce."""
        return max(self.values)

    def moment(self, p):
        """E[radius^p], in closed form for every variant."""
        if self.kind == "constant":
            return self.values[0] ** p
        if self.kind == "discrete":
            return sum(w * v ** p for v, w in zip(self.values, self.probs))
        a, b = self.values
        if p == -1.0:
            return math.log(b / a) / (b - a)
        return (b ** (p + 1) - a ** (p + 1)) / ((p + 1) * (b - a))

    @property
    def expectation(self):
        return self.moment(1.0)

    def nodes(self, n_nodes=QUADRATURE_NODES):
        """Quadrature representation (values, weights) of the law.

        Exact for constant and discrete; Gauss-Legendre with n_nodes for
        uniform (node count validated against a doubled rule in tests).
        """
        if self.kind == "constant":
            return np.array(self.values), np.array([1.0])
        if self.kind == "discrete":
            return np.array(self.values), np.array(self.probs)
        xs, ws = np.polynomial.legendre.leggauss(int(n_nodes))
        a, b = self.values
        return (xs + 1.0) * 0.5 * (b - a) + a, ws * 0.5

    def sample(self, stream, size):
        """Draw radii; requires the bounded support every variant has."""
        n = int(size)
        if self.kind == "constant":
            return np.full(n, self.values[0])
        if self.kind == "uniform":
            a, b = self.values
            return a + (b - a) * stream.uniform(n)
        idx = np.searchsorted(np.cumsum(self.probs), stream.uniform(n),
                              side="right")
        return np.asarray(self.values)[np.minimum(idx, len(self.values) - 1)]


@dataclass(frozen=True)
class BooleanParams:
    """Intensity, radius law and ambient dimension of the ball process."""

    alpha: float
    law: RadiusLaw
    dimension: int

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        check_dimension(self.dimension)


@dataclass(frozen=True)
class ObstacleScene:
    """One sampled obstacle configuration around a sight segment.

    Obstacles are stored as arrays (positions, directions for lines, radii)
    for throughput; the `obstacles` property materializes dataclass views.
    A conditioned scene must leave the sight segment [0, target] clear,
    which is asserted on construction.
    """

    kind: str
    positions: np.ndarray
    radii: np.ndarray
    target: np.ndarray
    window_radius: float
    conditioned: bool
    directions: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("balls", "lines"):
            raise ValueError(f"scene kind must be balls or lines, got {self.kind!r}")
        pos = np.atleast_2d(np.asarray(self.positions, dtype=np.float64))
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "radii",
                           np.asarray(self.radii, dtype=np.float64))
        object.__setattr__(self, "target",
                           np.asarray(self.target, dtype=np.float64))
        if self.kind == "lines":
            if self.directions is None:
                raise ValueError("line scenes need directions")
            object.__setattr__(self, "directions",
                               np.atleast_2d(np.asarray(self.directions,
                                                        dtype=np.float64)))
        if self.window_radius <= 0.0:
            raise ValueError("window_radius must be positive")
        if self.conditioned and self.n_obstacles:
            if self.kind == "balls":
                d = dist_points_segment(self.positions, self.target)
            else:
                d = dist_lines_segment(self.positions, self.directions,
                                       self.target)
            if not np.all(d > self.radii):
                raise ValueError("conditioned scene contains a blocking obstacle")

    @property
    def n_obstacles(self):
        return 0 if self.positions.size == 0 else self.positions.shape[0]

    @property
    def obstacles(self):
        """Materialized obstacle objects (intended for small scenes)."""
        if self.kind == "balls":
            return [ObstacleBall(c, float(v))
                    for c, v in zip(self.positions, self.radii)]
        return [ObstacleLine(p, v, float(rad))
                for p, v, rad in zip(self.positions, self.directions, self.radii)]

    @classmethod
    def from_obstacles(cls, obstacles, target, window_radius, conditioned):
        if not obstacles:
            d = len(np.asarray(target))
            return cls("balls", np.empty((0, d)), np.empty(0), target,
                       window_radius, conditioned)
        if all(isinstance(o, ObstacleBall) for o in obstacles):
            return cls("balls", np.array([o.center for o in obstacles]),
                       np.array([o.radius for o in obstacles]),
                       target, window_radius, conditioned)
        if all(isinstance(o, ObstacleLine) for o in obstacles):
            return cls("lines", np.array([o.point for o in obstacles]),
                       np.array([o.radius for o in obstacles]),
                       target, window_radius, conditioned,
                       directions=np.array([o.direction for o in obstacles]))
        raise TypeError("obstacles must be all balls or all lines")


# ---------------------------------------------------------------------------
# exact functionals
# ---------------------------------------------------------------------------

def expected_nbhd_volume(cone, params):
    """Expected volume of the radius-law neighborhood of a viewing cone.

    Averages revolve_volume over the radius law via its quadrature nodes
    (exact for constant/discrete laws, 64-node Gauss-Legendre for uniform).
    Pass a zero-aperture cone for the bare sight segment.
    """
    if not isinstance(cone, ConeSpec):
        raise TypeError("expected_nbhd_volume takes a ConeSpec")
    d = params.dimension
    vals, ws = params.law.nodes()
    return float(sum(w * revolve_volume(ThickenedCone(cone, float(v)), d)
                     for v, w in zip(vals, ws)))


def _axis_cone(r, aperture=0.0, d=2):
    return ConeSpec(np.r_[float(r), np.zeros(d - 1)], aperture)


def visibility_probability(params, r):
    """Probability that the whole segment [0, x] is obstacle-free, |x| = r."""
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    cone = _axis_cone(r, 0.0, params.dimension)
    return math.exp(-params.alpha * expected_nbhd_volume(cone, params))


def conditional_survival_exact(params, r, s):
    """P[Q > s * delta_r | segment visible] at distance r, delta_r = 1/r.

    The clearance radius exceeds q exactly when the thickened viewing cone
    of aperture q is also avoided, so the conditional survival is the
    exponential of alpha times the expected volume increment from segment
    to cone.
    """
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    if s < 0.0:
        raise ValueError(f"s must be nonnegative, got {s}")
    if s == 0.0:
        return 1.0
    q = s / r
    if q >= r:
        raise ValueError(f"aperture s*delta_r = {q} must stay below r = {r}")
    d = params.dimension
    seg = expected_nbhd_volume(_axis_cone(r, 0.0, d), params)
    cone = expected_nbhd_volume(_axis_cone(r, q, d), params)
    return math.exp(-params.alpha * (cone - seg))


def lambda_bm(params):
    """Exponential rate of the limiting clearance law for ball obstacles."""
    d = params.dimension
    return 0.5 * params.alpha * (d - 1) * unit_ball_volume(d - 1) \
        * params.law.moment(d - 2)


# ---------------------------------------------------------------------------
# scene sampling
# ---------------------------------------------------------------------------

def _uniform_in_ball(stream, n, d, radius):
    dirs = stream.unit_sphere(d, size=max(n, 1))[:n]
    radii = radius * stream.uniform(n) ** (1.0 / d)
    return dirs * radii[:, None]


def sample_unconditioned_scene(params, r, stream, window_radius=None):
    """Plain Poisson ball scene in a window that covers every potential
    blocker of the sight segment (used for visibility frequency checks)."""
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    d = params.dimension
    r_w = window_radius if window_radius is not None \
        else r + params.law.upper_bound + 1.0
    n = stream.poisson(params.alpha * unit_ball_volume(d) * r_w ** d)
    centers = _uniform_in_ball(stream, n, d, r_w)
    radii = params.law.sample(stream, n)
    target = np.r_[float(r), np.zeros(d - 1)]
    return ObstacleScene("balls", centers, radii, target, r_w, False)


def segment_blocked(scene):
    """Whether any obstacle of the scene touches the sight segment."""
    if scene.n_obstacles == 0:
        return False
    if scene.kind == "balls":
        d = dist_points_segment(scene.positions, scene.target)
    else:
        d = dist_lines_segment(scene.positions, scene.directions, scene.target)
    return bool(np.any(d <= scene.radii))


def sample_conditional_scene(params, r, q_cap, stream):
    """Obstacle scene conditioned on the sight segment being clear.

    Samples the unconditioned Poisson process in the ball window
    B(0, r + q_cap + r_max + 1) -- big enough that every ball able to touch
    the capped viewing cone has its center inside -- and deletes blocking
    balls.  By the restriction property of Poisson processes the retained
    configuration has exactly the conditional law.
    """
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r}")
    if not 0.0 < q_cap < r:
        raise ValueError(f"q_cap must lie in (0, r), got {q_cap}")
    d = params.dimension
    r_w = r + q_cap + params.law.upper_bound + 1.0
    n = stream.poisson(params.alpha * unit_ball_volume(d) * r_w ** d)
    centers = _uniform_in_ball(stream, n, d, r_w)
    radii = params.law.sample(stream, n)
    target = np.r_[float(r), np.zeros(d - 1)]
    keep = dist_points_segment(centers, target) > radii
    return ObstacleScene("balls", centers[keep], radii[keep], target, r_w, True)


def sample_Q(scene, x, q_cap):
    """Clearance radius of the scene at target x, capped at q_cap.

    Q is the minimum over obstacles of the threshold aperture at which the
    viewing cone first touches the obstacle; obstacles too far from the
    segment to bind below q_cap are skipped outright.  Returns
    (q, censored); an empty scene is censored at the cap.
    """
    if not scene.conditioned:
        raise ValueError("sample_Q needs a conditioned scene")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != scene.target.shape or not np.allclose(x, scene.target):
        raise ValueError("scene was conditioned for a different target")
    r = float(np.linalg.norm(x))
    if not 0.0 < q_cap < r:
        raise ValueError(f"q_cap must lie in (0, |x|), got {q_cap}")
    if scene.n_obstacles == 0:
        return q_cap, True
    tol = APERTURE_TOL * r
    if scene.kind == "balls":
        near = dist_points_segment(scene.positions, x) \
            <= scene.radii + q_cap
        if not np.any(near):
            return q_cap, True
        us, hs = axis_coordinates(scene.positions[near], x)
        q = float(_min_aperture_balls(us, hs, scene.radii[near], r, q_cap, tol))
        return q, q >= q_cap
    rho = float(scene.radii[0])
    if not np.all(scene.radii == rho):
        raise ValueError("line scenes must share one cylinder radius")
    near = dist_lines_segment(scene.positions, scene.directions, x) \
        <= rho + q_cap
    if not np.any(near):
        return q_cap, True
    b = scene.positions[near]
    v = scene.directions[near]
    ax = x / r
    u0 = b @ ax
    du = v @ ax
    bb = np.einsum("ij,ij->i", b, b)
    bv = np.einsum("ij,ij->i", b, v)
    h2c = np.maximum(bb - u0 * u0, 0.0)
    h2l = 2.0 * (bv - u0 * du)
    h2q = np.maximum(1.0 - du * du, 0.0)
    t0 = -bv
    dmin = np.sqrt(np.maximum(bb - t0 * t0, 0.0))
    big = 2.0 * r
    w = np.sqrt(big * (2.0 * dmin + big)) + 1.0
    ltol = LINE_SEARCH_TOL * (r + 1.0)
    q = float(_min_aperture_lines(u0, du, h2c, h2l, h2q, t0 - w, t0 + w,
                                  rho, r, q_cap, ltol, tol))
    return q, q >= q_cap