"""Brownian-path obstacles: capacity functionals via walk-on-spheres.

Obstacle sets built from a Poisson soup of doubly infinite Brownian paths
avoid a compact K with probability exp(-alpha * cap(K)), where cap is the
Newtonian capacity.  No closed form exists for the capsule and cone
capacities the visibility laws need, so this module estimates them by
simulating Brownian hitting events exactly: a walker jumps to a uniform
point on the largest sphere around it that avoids the target (the exact
exit law of Brownian motion from a ball), declares a hit when it comes
within hit_tolerance of the target, and handles the transient escape to
infinity by Russian roulette with the exact return probability
(R_K/|y|)^(d-2), re-entering on the enclosing sphere with the exterior
harmonic kernel (sampled by rejection, which is exact).  Capacity then
equals the hitting probability from a uniform start on a sphere of radius
R times the known mass R^(d-2)/gamma_d.

Estimators:
  * direct: Bernoulli hits from the start sphere (fine while the expected
    hit count is large);
  * levels: multilevel splitting through geometrically shrinking distance
    thresholds with fixed effort per stage, for thin high-dimensional
    targets whose hit probability from the start sphere is tiny; the
    product of stage frequencies is unbiased for the same hit probability
    because stage entry points are i.i.d. draws from the true conditional
    entry law;
  * coupled difference: for the conditional clearance law, each walker is
    driven by the cone's distance (which never exceeds the cylinder's, so
    a cylinder hit can only occur at or after the cone hit); at the first
    cone graze the walker either already touches the cylinder (difference
    indicator zero) or hands its position to split_factor fresh
    continuation walks against the cylinder, whose miss frequency is the
    conditional-Monte-Carlo value of the indicator.  The splitting leaves
    the estimand untouched (strong Markov at the graze point) and shrinks
    the variance by the typical miss probability, which is what makes
    percent-level work on capacity differences affordable.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import _dist2d
from .mathcore import (
    RngStream,
    beta_fn,
    check_dimension,
    gamma_ln,
    green_constant,
)

__all__ = [
    "WosConfig",
    "CapacityEstimate",
    "TargetShape",
    "InterlacementParams",
    "wos_hits",
    "estimate_capacity",
    "capacity_asymptotic",
    "cylinder_capacity_constant",
    "polar_angle_average",
    "nonhit_asymptotic",
    "estimate_nonhit",
    "lambda_bi",
    "window_scale",
    "start_sphere_mass",
    "conditional_survival_mc",
]

CHUNK = 8192
STAGE_STRIDE = 100_000
NONHIT_OFFSET_BAND = 0.25  # admissible (offset - rho)/rho for the near-surface law

_BALL, _CAPSULE, _CONE = 0, 1, 2


# ---------------------------------------------------------------------------
# shapes and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TargetShape:
    """Compact target of the hitting walks, with an exact distance function.

    Variants: a ball anywhere, and the visibility bodies in canonical
    position -- their segment runs along the first axis and is recentered
    so the body sits symmetrically around the origin (walks start on an
    origin-centered sphere, so this halves the enclosing radius).
    """

    kind: str
    dimension: int
    params: tuple

    @classmethod
    def ball(cls, center, radius):
        center = tuple(float(c) for c in np.atleast_1d(center))
        if radius <= 0.0:
            raise ValueError(f"ball radius must be positive, got {radius}")
        check_dimension(len(center), 3)
        return cls("ball", len(center), (float(radius),) + center)

    @classmethod
    def segment_cylinder(cls, length, rho, dimension):
        if length <= 0.0 or rho <= 0.0:
            raise ValueError("segment_cylinder needs positive length and rho")
        check_dimension(dimension, 3)
        return cls("segment_cylinder", dimension, (float(length), float(rho)))

    @classmethod
    def cone(cls, length, aperture, rho, dimension):
        if length <= 0.0 or rho <= 0.0:
            raise ValueError("cone needs positive length and rho")
        if not 0.0 <= aperture < length:
            raise ValueError(
                f"aperture must lie in [0, length), got {aperture}")
        check_dimension(dimension, 3)
        return cls("cone", dimension,
                   (float(length), float(aperture), float(rho)))

    @property
    def enclosing_radius(self):
        if self.kind == "ball":
            rad, *center = self.params
            return float(math.hypot(*center) + rad)
        if self.kind == "segment_cylinder":
            length, rho = self.params
            return 0.5 * length + rho
        length, aperture, rho = self.params
        return 0.5 * length + aperture + rho

    def _packed(self):
        code = {"ball": _BALL, "segment_cylinder": _CAPSULE,
                "cone": _CONE}[self.kind]
        return code, np.array(self.params, dtype=np.float64)

    def distance(self, points):
        """Signed-free distance from points (d,) or (m, d) to the shape
        surface neighborhood (0 on the boundary, negative never)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.dimension:
            raise ValueError("points dimension mismatch")
        code, sp = self._packed()
        out = np.empty(pts.shape[0])
        _shape_dist_batch(code, sp, pts, out)
        return out[0] if np.asarray(points).ndim == 1 else out


@dataclass(frozen=True)
class WosConfig:
    """Geometry and safety limits of the hitting walks."""

    hit_tolerance: float
    enclosing_radius: float
    start_radius: float
    outer_radius: float
    max_steps: int = 1_000_000
    truncate_only: bool = False

    def __post_init__(self):
        if self.hit_tolerance <= 0.0:
            raise ValueError("hit_tolerance must be positive")
        if self.hit_tolerance > 0.1 * self.enclosing_radius:
            raise ValueError("hit_tolerance must be well below the shape scale")
        if not self.enclosing_radius < self.start_radius:
            raise ValueError("start_radius must exceed enclosing_radius")
        if self.outer_radius < 4.0 * self.enclosing_radius:
            raise ValueError("outer_radius must be at least 4x enclosing")
        if self.max_steps < 1000:
            raise ValueError("max_steps unreasonably small")

    @classmethod
    def for_shape(cls, shape, hit_tolerance=None, truncate_only=False,
                  max_steps=1_000_000):
        r_k = shape.enclosing_radius
        tol = 1e-6 * r_k if hit_tolerance is None else float(hit_tolerance)
        return cls(tol, r_k, 2.0 * r_k, 4.0 * r_k, int(max_steps),
                   truncate_only)


@dataclass(frozen=True)
class CapacityEstimate:
    """Monte Carlo capacity with statistical and systematic error fields.

    stderr is the binomial (or stage-product delta-method) standard error
    and stays positive via a half-count regularization at the extremes;
    bias_bound is a first-order bound on the systematic part: the capacity
    increment of inflating the target by hit_tolerance, plus, under
    truncate_only, the escaped-return mass (R_K/R_out)^(d-2) * value.
    """

    value: float
    stderr: float
    n_walkers: int
    bias_bound: float


@dataclass(frozen=True)
class InterlacementParams:
    """Soup intensity, sausage radius and ambient dimension (d >= 3)."""

    alpha: float
    rho: float
    dimension: int

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        check_dimension(self.dimension, 3)


# ---------------------------------------------------------------------------
# exact constants and asymptotics
# ---------------------------------------------------------------------------

def cylinder_capacity_constant(d):
    """Leading coefficient of the long-cylinder capacity: pi in dimension
    three, 2 pi^((d-1)/2) / Gamma((d-3)/2) above."""
    check_dimension(d, 3)
    if d == 3:
        return math.pi
    return 2.0 * math.pi ** ((d - 1) / 2.0) / math.exp(gamma_ln((d - 3) / 2.0))


def polar_angle_average(d):
    """Angular constant of the cylinder capacity derivation: 1 in dimension
    three, B(1/2, (d-3)/2)/2 above; satisfies
    cylinder_capacity_constant = 1 / (2 * this * green_constant)."""
    check_dimension(d, 3)
    if d == 3:
        return 1.0
    return 0.5 * beta_fn(0.5, (d - 3) / 2.0)


def capacity_asymptotic(r, rho, d):
    """Leading-order capacity of the rho-capsule around a segment of
    length r (no correction terms); requires r > e."""
    check_dimension(d, 3)
    if r <= math.e:
        raise ValueError(f"asymptotic form needs r > e, got {r}")
    if rho <= 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    scale = r / math.log(r) if d == 3 else r
    return cylinder_capacity_constant(d) * rho ** (d - 3) * scale


def lambda_bi(alpha, rho, d):
    """Exponential rate of the limiting clearance law for path obstacles."""
    check_dimension(d, 3)
    if alpha <= 0.0 or rho <= 0.0:
        raise ValueError("alpha and rho must be positive")
    factor = 1.0 if d == 3 else float(d - 3)
    return 0.5 * alpha * cylinder_capacity_constant(d) * rho ** (d - 4) * factor


def window_scale(r, d):
    """Visibility window delta_r of the path-obstacle model: log^2(r)/r in
    dimension three, 1/r above."""
    check_dimension(d, 3)
    if r <= (1.0 if d == 3 else 0.0):
        raise ValueError(f"r too small for the window scale, got {r}")
    return math.log(r) ** 2 / r if d == 3 else 1.0 / r


def nonhit_asymptotic(x_axis, offset, r, rho, d):
    """Central value of the near-surface non-hitting law for the capsule:
    (offset - rho)/rho times 1/log r (d = 3) or d - 3 (d >= 4).

    Valid for starts alongside the middle of the segment (x_axis within
    [r/log^2 r, r - r/log^2 r]) and just off the surface
    (rho < offset < rho * (1 + 1/4)); outside that window the formula is
    not asserted and a domain error is raised.
    """
    check_dimension(d, 3)
    if r <= math.e:
        raise ValueError(f"asymptotic form needs r > e, got {r}")
    edge = r / math.log(r) ** 2
    if not edge <= x_axis <= r - edge:
        raise ValueError(
            f"x_axis = {x_axis} outside the mid-segment window "
            f"[{edge}, {r - edge}]")
    if offset <= rho:
        if offset == rho:
            return 0.0
        raise ValueError(f"offset = {offset} must be at least rho = {rho}")
    if offset >= rho * (1.0 + NONHIT_OFFSET_BAND):
        raise ValueError(
            f"offset = {offset} beyond the near-surface band "
            f"{rho * (1.0 + NONHIT_OFFSET_BAND)}")
    factor = 1.0 / math.log(r) if d == 3 else float(d - 3)
    return (offset - rho) / rho * factor


def start_sphere_mass(d, radius):
    """Total mass of the capacity-normalizing start measure on a sphere:
    radius^(d-2) / green_constant(d)."""
    check_dimension(d, 3)
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    return radius ** (d - 2) / green_constant(d)


# ---------------------------------------------------------------------------
# walk kernels
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _shape_dist(code, sp, y):
    d = y.shape[0]
    if code == 0:
        s = 0.0
        for k in range(d):
            t = y[k] - sp[1 + k]
            s += t * t
        return math.sqrt(s) - sp[0]
    u = y[0] + 0.5 * sp[0]
    hh = 0.0
    for k in range(1, d):
        hh += y[k] * y[k]
    h = math.sqrt(hh)
    if code == 1:
        uc = u
        if uc < 0.0:
            uc = 0.0
        elif uc > sp[0]:
            uc = sp[0]
        du = u - uc
        return math.sqrt(du * du + h * h) - sp[1]
    return _dist2d(u, h, sp[0], sp[1]) - sp[2]


@njit(cache=True, nogil=True)
def _shape_dist_batch(code, sp, pts, out):
    for i in range(pts.shape[0]):
        out[i] = _shape_dist(code, sp, pts[i])


@njit(cache=True, nogil=True)
def _walk(gen, code, sp, y, z, level, enc_r, out_r, max_steps, truncate):
    """One hitting walk from y (overwritten): 1 hit, 0 escape, 2 abort.

    Jumps by the exact ball-exit law; beyond out_r plays roulette with the
    exact sphere-return probability and re-enters on the enclosing sphere
    through the exterior harmonic kernel (rejection against uniform with
    acceptance ((|y| - R)/|y - z|)^d, exact).
    """
    d = y.shape[0]
    dm2 = float(d - 2)
    for _ in range(max_steps):
        dist = _shape_dist(code, sp, y)
        if dist < level:
            return 1
        yn2 = 0.0
        for k in range(d):
            yn2 += y[k] * y[k]
        yn = math.sqrt(yn2)
        if yn >= out_r:
            if truncate:
                return 0
            if gen.random() >= (enc_r / yn) ** dm2:
                return 0
            tries = 0
            while True:
                tries += 1
                gg = 0.0
                for k in range(d):
                    t = gen.standard_normal()
                    z[k] = t
                    gg += t * t
                gn = math.sqrt(gg)
                if gn == 0.0:
                    continue
                dd = 0.0
                for k in range(d):
                    z[k] = enc_r * z[k] / gn
                    t = y[k] - z[k]
                    dd += t * t
                dd = math.sqrt(dd)
                if tries >= 1024 or gen.random() < ((yn - enc_r) / dd) ** d:
                    break
            for k in range(d):
                y[k] = z[k]
            continue
        gg = 0.0
        for k in range(d):
            t = gen.standard_normal()
            z[k] = t
            gg += t * t
        gn = math.sqrt(gg)
        if gn == 0.0:
            continue
        step = dist / gn
        for k in range(d):
            y[k] += step * z[k]
    return 2


@njit(cache=True, nogil=True)
def _sphere_start(gen, y, radius):
    d = y.shape[0]
    while True:
        gg = 0.0
        for k in range(d):
            t = gen.standard_normal()
            y[k] = t
            gg += t * t
        gn = math.sqrt(gg)
        if gn > 0.0:
            for k in range(d):
                y[k] = radius * y[k] / gn
            return


@njit(cache=True, nogil=True)
def _hits_sphere_chunk(gen, code, sp, d, n, level, start_r, enc_r, out_r,
                       max_steps, truncate):
    y = np.empty(d)
    z = np.empty(d)
    hits = 0
    aborts = 0
    for _ in range(n):
        _sphere_start(gen, y, start_r)
        st = _walk(gen, code, sp, y, z, level, enc_r, out_r, max_steps,
                   truncate)
        if st == 1:
            hits += 1
        elif st == 2:
            aborts += 1
    return hits, aborts


@njit(cache=True, nogil=True)
def _hits_point_chunk(gen, code, sp, start, n, level, enc_r, out_r,
                      max_steps, truncate):
    d = start.shape[0]
    y = np.empty(d)
    z = np.empty(d)
    hits = 0
    aborts = 0
    for _ in range(n):
        for k in range(d):
            y[k] = start[k]
        st = _walk(gen, code, sp, y, z, level, enc_r, out_r, max_steps,
                   truncate)
        if st == 1:
            hits += 1
        elif st == 2:
            aborts += 1
    return hits, aborts


@njit(cache=True, nogil=True)
def _stage_chunk(gen, code, sp, starts, start_r, from_sphere, n, level,
                 enc_r, out_r, max_steps, truncate, out_pos):
    """Walks toward the next distance level; records entry positions."""
    d = out_pos.shape[1]
    y = np.empty(d)
    z = np.empty(d)
    hits = 0
    aborts = 0
    for i in range(n):
        if from_sphere:
            _sphere_start(gen, y, start_r)
        else:
            for k in range(d):
                y[k] = starts[i, k]
        st = _walk(gen, code, sp, y, z, level, enc_r, out_r, max_steps,
                   truncate)
        if st == 1:
            for k in range(d):
                out_pos[hits, k] = y[k]
            hits += 1
        elif st == 2:
            aborts += 1
    return hits, aborts


@njit(cache=True, nogil=True)
def _coupled_chunk(gen, sp_cone, sp_cyl, d, n, level, start_r, enc_r, out_r,
                   max_steps, split_factor):
    """Capacity-difference walkers: cone-driven until the first graze, then
    split_factor cylinder continuations from the frozen graze point.

    Returns (sum_d, sum_d2, grazes, instant, aborts); instant counts the
    grazes already within tolerance of the cylinder (difference zero).
    """
    y = np.empty(d)
    z = np.empty(d)
    y0 = np.empty(d)
    sum_d = 0.0
    sum_d2 = 0.0
    grazes = 0
    instant = 0
    aborts = 0
    for _ in range(n):
        _sphere_start(gen, y, start_r)
        st = _walk(gen, 2, sp_cone, y, z, level, enc_r, out_r, max_steps,
                   False)
        if st == 2:
            aborts += 1
            continue
        if st == 0:
            continue
        grazes += 1
        if _shape_dist(1, sp_cyl, y) < level:
            instant += 1
            continue
        for k in range(d):
            y0[k] = y[k]
        miss = 0
        for _ in range(split_factor):
            for k in range(d):
                y[k] = y0[k]
            st2 = _walk(gen, 1, sp_cyl, y, z, level, enc_r, out_r,
                        max_steps, False)
            if st2 == 0:
                miss += 1
            elif st2 == 2:
                aborts += 1
        dval = miss / split_factor
        sum_d += dval
        sum_d2 += dval * dval
    return sum_d, sum_d2, grazes, instant, aborts


# ---------------------------------------------------------------------------
# public estimators
# ---------------------------------------------------------------------------

def _validate_cfg(shape, cfg):
    if cfg.enclosing_radius < shape.enclosing_radius * (1.0 - 1e-12):
        raise ValueError("config enclosing_radius does not cover the shape")


def wos_hits(shape, start, cfg, stream):
    """One Bernoulli sample of the event that Brownian motion from start
    ever hits the shape.  start must lie outside the shape; a start within
    hit_tolerance of it is an immediate hit."""
    check_dimension(shape.dimension, 3)
    _validate_cfg(shape, cfg)
    y = np.array(start, dtype=np.float64)
    if y.shape != (shape.dimension,):
        raise ValueError("start has the wrong dimension")
    code, sp = shape._packed()
    d0 = _shape_dist(code, sp, y)
    if d0 < 0.0:
        raise ValueError("start lies inside the shape")
    if d0 < cfg.hit_tolerance:
        return True
    z = np.empty_like(y)
    st = _walk(stream.generator, code, sp, y, z, cfg.hit_tolerance,
               cfg.enclosing_radius, cfg.outer_radius, cfg.max_steps,
               cfg.truncate_only)
    if st == 2:
        raise RuntimeError("walker exceeded max_steps")
    return st == 1


def _tolerance_bias(shape, cfg):
    """First-order capacity increment of inflating the target by the hit
    tolerance (leading-order forms; the d=3 capsule uses the log-corrected
    derivative pi r tol / (rho log^2(r/rho)))."""
    tol = cfg.hit_tolerance
    d = shape.dimension
    if shape.kind == "ball":
        a = shape.params[0]
        return ((a + tol) ** (d - 2) - a ** (d - 2)) / green_constant(d)
    if shape.kind == "segment_cylinder":
        length, rho = shape.params
    else:
        length, aperture, rho = shape.params
        rho = rho + aperture  # widest thickness dominates the inflation
    if d == 3:
        lg = math.log(max(length / rho, math.e))
        return math.pi * length * tol / (rho * lg * lg) \
            + 2.0 * math.pi * tol
    kappa = cylinder_capacity_constant(d)
    return kappa * ((rho + tol) ** (d - 3) - rho ** (d - 3)) * length \
        + ((rho + tol) ** (d - 2) - rho ** (d - 2)) / green_constant(d)


def _chunk_sizes(n, chunk=CHUNK):
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    return sizes


def _raise_on_aborts(aborts):
    if aborts:
        raise RuntimeError(f"{aborts} walkers exceeded max_steps; the "
                           "estimate would be biased")


def estimate_capacity(shape, cfg, n_walkers, stream, method="auto"):
    """Newtonian capacity of the shape from n_walkers hitting walks.

    method: "direct" runs all walkers from the start sphere; "levels" runs
    multilevel splitting through distance thresholds halving from the
    enclosing radius down to hit_tolerance, spending n_walkers across the
    stages (for targets the direct walkers would almost never hit);
    "auto" picks levels when the predicted mean hit count drops below 100.
    Chunked, ordered accumulation on per-chunk substreams makes the result
    independent of scheduling.
    """
    check_dimension(shape.dimension, 3)
    _validate_cfg(shape, cfg)
    n = int(n_walkers)
    if n < 2:
        raise ValueError("need at least 2 walkers")
    if method not in ("auto", "direct", "levels"):
        raise ValueError(f"unknown method {method!r}")
    d = shape.dimension
    mass = start_sphere_mass(d, cfg.start_radius)
    if method == "auto":
        if shape.kind == "ball":
            method = "direct"
        else:
            r_len = shape.params[0]
            guess = capacity_asymptotic(max(r_len, 3.0), shape.params[-1], d)
            method = "direct" if n * guess / mass >= 100.0 else "levels"
    if method == "direct":
        return _capacity_direct(shape, cfg, n, stream, mass)
    return _capacity_levels(shape, cfg, n, stream, mass)


def _capacity_direct(shape, cfg, n, stream, mass):
    code, sp = shape._packed()
    d = shape.dimension
    hits = 0
    aborts = 0
    for i, size in enumerate(_chunk_sizes(n)):
        gen = stream.child(i).generator
        h, a = _hits_sphere_chunk(gen, code, sp, d, size, cfg.hit_tolerance,
                                  cfg.start_radius, cfg.enclosing_radius,
                                  cfg.outer_radius, cfg.max_steps,
                                  cfg.truncate_only)
        hits += h
        aborts += a
    _raise_on_aborts(aborts)
    if hits == 0:
        raise RuntimeError("no walker hit the target; use more walkers or "
                           "method='levels'")
    p = hits / n
    p_reg = (hits + 0.5) / (n + 1.0)
    stderr = mass * math.sqrt(p_reg * (1.0 - p_reg) / n)
    bias = _tolerance_bias(shape, cfg)
    if cfg.truncate_only:
        bias += mass * p * (cfg.enclosing_radius / cfg.outer_radius) \
            ** (d - 2)
    return CapacityEstimate(mass * p, stderr, n, bias)


def _capacity_levels(shape, cfg, n, stream, mass):
    code, sp = shape._packed()
    d = shape.dimension
    r_k = cfg.enclosing_radius
    levels = []
    lvl = 0.5 * r_k
    while lvl > cfg.hit_tolerance * 2.0:
        levels.append(lvl)
        lvl *= 0.5
    levels.append(cfg.hit_tolerance)
    per_stage = max(n // len(levels), 256)
    log_p = 0.0
    var_sum = 0.0
    total = 0
    positions = np.empty((0, d))
    for j, level in enumerate(levels):
        from_sphere = j == 0
        if not from_sphere:
            picker = stream.child(j * STAGE_STRIDE + STAGE_STRIDE - 1)
            idx = (picker.uniform(per_stage) * positions.shape[0]).astype(
                np.int64)
            starts_all = positions[np.minimum(idx, positions.shape[0] - 1)]
        else:
            starts_all = np.empty((per_stage, d))
        hits = 0
        aborts = 0
        new_pos = np.empty((per_stage, d))
        done = 0
        for i, size in enumerate(_chunk_sizes(per_stage)):
            gen = stream.child(j * STAGE_STRIDE + i).generator
            out = np.empty((size, d))
            h, a = _stage_chunk(gen, code, sp, starts_all[done:done + size],
                                cfg.start_radius, from_sphere, size, level,
                                cfg.enclosing_radius, cfg.outer_radius,
                                cfg.max_steps, cfg.truncate_only, out)
            new_pos[hits:hits + h] = out[:h]
            hits += h
            aborts += a
            done += size
        _raise_on_aborts(aborts)
        total += per_stage
        if hits == 0:
            raise RuntimeError(
                f"splitting stage at level {level:.3g} had no survivors; "
                "increase n_walkers")
        p_j = hits / per_stage
        p_reg = (hits + 0.5) / (per_stage + 1.0)
        log_p += math.log(p_j)
        var_sum += (1.0 - p_reg) / (per_stage * p_reg)
        positions = new_pos[:hits]
    value = mass * math.exp(log_p)
    stderr = value * math.sqrt(var_sum)
    bias = _tolerance_bias(shape, cfg)
    if cfg.truncate_only:
        bias += value * (cfg.enclosing_radius / cfg.outer_radius) ** (d - 2)
    return CapacityEstimate(value, stderr, total, bias)


def estimate_nonhit(x, r, rho, cfg, n_walkers, stream):
    """Probability that Brownian motion from x never hits the rho-capsule
    around the segment [0, r e1], with its binomial standard error."""
    x = np.asarray(x, dtype=np.float64)
    d = check_dimension(x.shape[0], 3)
    shape = TargetShape.segment_cylinder(r, rho, d)
    _validate_cfg(shape, cfg)
    start = x.copy()
    start[0] -= 0.5 * r  # shape coordinates are recentered
    code, sp = shape._packed()
    if _shape_dist(code, sp, start) < 0.0:
        raise ValueError("x lies inside the capsule")
    n = int(n_walkers)
    hits = 0
    aborts = 0
    for i, size in enumerate(_chunk_sizes(n)):
        gen = stream.child(i).generator
        h, a = _hits_point_chunk(gen, code, sp, start, size,
                                 cfg.hit_tolerance, cfg.enclosing_radius,
                                 cfg.outer_radius, cfg.max_steps,
                                 cfg.truncate_only)
        hits += h
        aborts += a
    _raise_on_aborts(aborts)
    p = 1.0 - hits / n
    p_reg = (n - hits + 0.5) / (n + 1.0)
    return p, math.sqrt(p_reg * (1.0 - p_reg) / n)


def conditional_survival_mc(alpha, rho, r, s, dimension, cfg=None,
                            n_walkers=100_000, stream=None,
                            split_factor=2000):
    """Monte Carlo conditional survival P[Q > s * delta_r | visible] for
    path obstacles: exp(-alpha * Delta) where Delta is the capacity gap
    between the viewing cone (aperture s * window_scale) and the sight
    capsule, estimated by coupled cone-driven walkers with split
    continuations at the graze point (module docstring).

    Returns (survival, (lo, hi)): a 95 percent delta-method interval on
    the exponential scale.  s = 0 returns exactly (1.0, (1.0, 1.0)).
    """
    d = check_dimension(dimension, 3)
    if alpha <= 0.0 or rho <= 0.0:
        raise ValueError("alpha and rho must be positive")
    if s < 0.0:
        raise ValueError(f"s must be nonnegative, got {s}")
    if s == 0.0:
        return 1.0, (1.0, 1.0)
    q = s * window_scale(r, d)
    if q >= r:
        raise ValueError(f"aperture s * delta_r = {q} must stay below r")
    if stream is None:
        stream = RngStream(0)
    cone = TargetShape.cone(r, q, rho, d)
    if cfg is None:
        cfg = WosConfig.for_shape(cone)
    _validate_cfg(cone, cfg)
    _, sp_cone = cone._packed()
    sp_cyl = np.array([float(r), float(rho)])
    n = int(n_walkers)
    mass = start_sphere_mass(d, cfg.start_radius)
    sum_d = 0.0
    sum_d2 = 0.0
    aborts = 0
    for i, size in enumerate(_chunk_sizes(n)):
        gen = stream.child(i).generator
        sd, sd2, _, _, a = _coupled_chunk(
            gen, sp_cone, sp_cyl, d, size, cfg.hit_tolerance,
            cfg.start_radius, cfg.enclosing_radius, cfg.outer_radius,
            cfg.max_steps, int(split_factor))
        sum_d += sd
        sum_d2 += sd2
        aborts += a
    _raise_on_aborts(aborts)
    mean_d = sum_d / n
    var_d = max(sum_d2 / n - mean_d * mean_d, 0.0)
    delta = mass * mean_d
    se = mass * math.sqrt(var_d / n)
    survival = math.exp(-alpha * delta)
    lo = math.exp(-alpha * (delta + 1.96 * se))
    hi = math.exp(-alpha * (delta - 1.96 * se))
    return survival, (lo, hi)