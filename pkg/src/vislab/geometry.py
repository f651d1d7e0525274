"""Geometry of sight segments, viewing cones and obstacle distances.

The central object is the viewing cone: the convex hull of the origin and a
ball of radius q (the aperture) around the target point x.  Every distance
query in the package reduces to the distance from a point to that hull,
which by rotational symmetry about the axis is a 2-dimensional computation:
a point with axial coordinate u and radial offset h sees the hull as the
planar convex hull of (0,0) and the disk of radius q at (|x|, 0).  That
single kernel backs point, line and volume queries; there is deliberately
no separate lateral-surface case analysis anywhere else.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .mathcore import unit_ball_volume

__all__ = [
    "SegmentToTarget",
    "ConeSpec",
    "ThickenedCone",
    "ObstacleBall",
    "ObstacleLine",
    "axis_coordinates",
    "dist_point_segment",
    "dist_points_segment",
    "dist_lines_segment",
    "dist_point_cone",
    "dist_line_cone",
    "max_aperture",
    "revolve_volume",
    "mc_volume_oracle",
]

# Relative tolerance factors; see the individual operations.
LINE_SEARCH_TOL = 1e-10
APERTURE_TOL = 1e-9
PROFILE_TOL = 1e-10
VOLUME_REL_TOL = 1e-8


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _dist2d(u, h, r, q):
    """Distance from the half-plane point (u, h >= 0) to the planar hull of
    (0,0) and the disk of radius q centered at (r, 0).

    The hull is the union of that disk and the triangle spanned by the
    origin and the two tangent points, so the distance is the minimum of
    the two part distances.  q = 0 degenerates to the segment [0, r] and
    q >= r to the disk alone (it then swallows the origin).
    """
    if q <= 0.0:
        if u < 0.0:
            return math.hypot(u, h)
        if u > r:
            return math.hypot(u - r, h)
        return h
    if q >= r:
        d = math.hypot(u - r, h) - q
        return d if d > 0.0 else 0.0
    d_disk = math.hypot(u - r, h) - q
    if d_disk <= 0.0:
        return 0.0
    l2 = r * r - q * q
    l = math.sqrt(l2)
    # inside the tangent triangle (upper half): 0 <= u <= l^2/r, h*l <= u*q
    if u >= 0.0 and u * r <= l2 and h * l <= u * q:
        return 0.0
    # distance to the upper tangent segment from (0,0) to (l^2/r, l*q/r)
    tx = l2 / r
    ty = l * q / r
    s = (u * tx + h * ty) / l2
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    d_seg = math.hypot(u - s * tx, h - s * ty)
    return d_disk if d_disk < d_seg else d_seg


@njit(cache=True, nogil=True)
def _profile_height(u, r, q, t, tol):
    """Radial extent at axial position u of the t-neighborhood of the hull.

    Bisection on h of _dist2d(u, h) <= t; returns 0.0 outside the support.
    """
    if _dist2d(u, 0.0, r, q) > t:
        return 0.0
    lo = 0.0
    hi = q + t + 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _dist2d(u, mid, r, q) <= t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def _revolve_integrand(u, r, q, t, n, tol):
    h = _profile_height(u, r, q, t, tol)
    return h ** (n - 1)


@njit(cache=True, nogil=True)
def _adaptive_simpson(a, b, r, q, t, n, tol, eps):
    """Adaptive Simpson of the revolved profile power on [a, b].

    Stack-based so it compiles cleanly; eps is an absolute budget for the
    whole interval and halves on each split.
    """
    fa = _revolve_integrand(a, r, q, t, n, tol)
    fb = _revolve_integrand(b, r, q, t, n, tol)
    m = 0.5 * (a + b)
    fm = _revolve_integrand(m, r, q, t, n, tol)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    stack_a = np.empty(512)
    stack_b = np.empty(512)
    stack_fa = np.empty(512)
    stack_fb = np.empty(512)
    stack_fm = np.empty(512)
    stack_s = np.empty(512)
    stack_e = np.empty(512)
    top = 0
    stack_a[0] = a
    stack_b[0] = b
    stack_fa[0] = fa
    stack_fb[0] = fb
    stack_fm[0] = fm
    stack_s[0] = whole
    stack_e[0] = eps
    total = 0.0
    while top >= 0:
        a0 = stack_a[top]
        b0 = stack_b[top]
        f0 = stack_fa[top]
        f1 = stack_fb[top]
        fmid = stack_fm[top]
        s0 = stack_s[top]
        e0 = stack_e[top]
        top -= 1
        mid = 0.5 * (a0 + b0)
        lm = 0.5 * (a0 + mid)
        rm = 0.5 * (mid + b0)
        flm = _revolve_integrand(lm, r, q, t, n, tol)
        frm = _revolve_integrand(rm, r, q, t, n, tol)
        sl = (mid - a0) / 6.0 * (f0 + 4.0 * flm + fmid)
        sr = (b0 - mid) / 6.0 * (fmid + 4.0 * frm + f1)
        err = sl + sr - s0
        if abs(err) <= 15.0 * e0 or top >= 509 or (b0 - a0) < 1e-13 * (b - a + 1.0):
            total += sl + sr + err / 15.0
        else:
            top += 1
            stack_a[top] = a0
            stack_b[top] = mid
            stack_fa[top] = f0
            stack_fb[top] = fmid
            stack_fm[top] = flm
            stack_s[top] = sl
            stack_e[top] = 0.5 * e0
            top += 1
            stack_a[top] = mid
            stack_b[top] = b0
            stack_fa[top] = fmid
            stack_fb[top] = f1
            stack_fm[top] = frm
            stack_s[top] = sr
            stack_e[top] = 0.5 * e0
    return total


@njit(cache=True, nogil=True)
def _revolve_pieces(r, q, t, n, tol, rel_tol):
    """Integral of profile^(n-1) over the axis, split at the tangency
    abscissas where the profile switches between arc and straight pieces."""
    if q < r:
        lo = -t
        b1 = -t * q / r
        b2 = r - (q + t) * q / r
        hi = r + q + t
    else:
        lo = r - q - t
        b1 = r
        b2 = r
        hi = r + q + t
    # crude first pass to set the absolute budget
    rough = 0.0
    pieces = ((lo, b1), (b1, b2), (b2, hi))
    for k in range(3):
        a0, b0 = pieces[k]
        if b0 - a0 <= 0.0:
            continue
        fa = _revolve_integrand(a0, r, q, t, n, tol)
        fm = _revolve_integrand(0.5 * (a0 + b0), r, q, t, n, tol)
        fb = _revolve_integrand(b0, r, q, t, n, tol)
        rough += (b0 - a0) / 6.0 * (fa + 4.0 * fm + fb)
    eps = rel_tol * (abs(rough) + 1e-300)
    out = 0.0
    for k in range(3):
        a0, b0 = pieces[k]
        if b0 - a0 <= 0.0:
            continue
        out += _adaptive_simpson(a0, b0, r, q, t, n, tol, eps / 3.0)
    return out


@njit(cache=True, nogil=True)
def _aperture_ball(u, h, rad, r, cap, tol):
    """Largest aperture q <= cap whose cone stays clear of the ball at
    reduced coordinates (u, h) with radius rad.  Returns exactly cap when
    even the capped cone stays clear (the caller reads that as censoring)."""
    if _dist2d(u, h, r, cap) > rad:
        return cap
    lo = 0.0
    hi = cap
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _dist2d(u, h, r, mid) <= rad:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def _line_cone_dist(u0, du, h2c, h2l, h2q, r, q, t_lo, t_hi, tol):
    """Min over t in [t_lo, t_hi] of the distance from the line point at
    parameter t to the hull.  The distance is convex in t (affine path,
    convex target), so a ternary search converges; flat stretches at zero
    only shrink the bracket."""
    lo = t_lo
    hi = t_hi
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        hh1 = h2c + m1 * (h2l + m1 * h2q)
        hh2 = h2c + m2 * (h2l + m2 * h2q)
        f1 = _dist2d(u0 + m1 * du, math.sqrt(hh1 if hh1 > 0.0 else 0.0), r, q)
        f2 = _dist2d(u0 + m2 * du, math.sqrt(hh2 if hh2 > 0.0 else 0.0), r, q)
        if f1 < f2:
            hi = m2
        elif f2 < f1:
            lo = m1
        else:
            lo = m1
            hi = m2
    tm = 0.5 * (lo + hi)
    hh = h2c + tm * (h2l + tm * h2q)
    return _dist2d(u0 + tm * du, math.sqrt(hh if hh > 0.0 else 0.0), r, q)


@njit(cache=True, nogil=True)
def _aperture_line(u0, du, h2c, h2l, h2q, rad, r, cap, t_lo, t_hi, line_tol, tol):
    """Largest clear aperture against a line obstacle of radius rad."""
    if _line_cone_dist(u0, du, h2c, h2l, h2q, r, cap, t_lo, t_hi, line_tol) > rad:
        return cap
    lo = 0.0
    hi = cap
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _line_cone_dist(u0, du, h2c, h2l, h2q, r, mid, t_lo, t_hi, line_tol) <= rad:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def _contains_batch(us, hs, r, q, t, out):
    for i in range(us.shape[0]):
        out[i] = _dist2d(us[i], hs[i], r, q) <= t


@njit(cache=True, nogil=True)
def _min_aperture_balls(us, hs, rads, r, cap, tol):
    """Smallest threshold aperture over a batch of ball obstacles.

    The running minimum is fed back as the cap of later bisections: an
    obstacle whose own threshold is above the current best returns the cap
    unchanged after a single distance evaluation.
    """
    best = cap
    for i in range(us.shape[0]):
        a = _aperture_ball(us[i], hs[i], rads[i], r, best, tol)
        if a < best:
            best = a
    return best


@njit(cache=True, nogil=True)
def _min_aperture_lines(u0s, dus, h2cs, h2ls, h2qs, t_los, t_his,
                        rad, r, cap, line_tol, tol):
    """Smallest threshold aperture over a batch of line obstacles of a
    common radius rad (the cylinder radius)."""
    best = cap
    for i in range(u0s.shape[0]):
        a = _aperture_line(u0s[i], dus[i], h2cs[i], h2ls[i], h2qs[i],
                           rad, r, best, t_los[i], t_his[i], line_tol, tol)
        if a < best:
            best = a
    return best


# ---------------------------------------------------------------------------
# public types
# ---------------------------------------------------------------------------

def _as_vector(x, name):
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 2:
        raise ValueError(f"{name} must be a 1-d vector in dimension >= 2")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


@dataclass(frozen=True)
class SegmentToTarget:
    """The sight segment from the origin to a target point."""

    target: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target", _as_vector(self.target, "target"))
        if self.length <= 0.0:
            raise ValueError("target must be away from the origin")

    @property
    def length(self):
        return float(np.linalg.norm(self.target))

    @property
    def dimension(self):
        return self.target.shape[0]


@dataclass(frozen=True)
class ConeSpec:
    """Viewing cone: hull of the origin and the aperture ball at the target."""

    target: np.ndarray
    aperture: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "target", _as_vector(self.target, "target"))
        r = float(np.linalg.norm(self.target))
        if not (0.0 <= self.aperture < r):
            raise ValueError(
                f"aperture must satisfy 0 <= aperture < |target| = {r}, got {self.aperture}"
            )

    @property
    def length(self):
        return float(np.linalg.norm(self.target))

    @property
    def dimension(self):
        return self.target.shape[0]


@dataclass(frozen=True)
class ThickenedCone:
    """The thickness-neighborhood of a viewing cone (a solid of revolution)."""

    cone: ConeSpec
    thickness: float

    def __post_init__(self):
        if self.thickness <= 0.0:
            raise ValueError(f"thickness must be positive, got {self.thickness}")

    def reduced(self, points):
        """Axial and radial coordinates of points relative to the cone axis."""
        return axis_coordinates(points, self.cone.target)

    def contains(self, points):
        """Vectorized membership test; accepts one point or an (m, d) array."""
        single = np.asarray(points).ndim == 1
        us, hs = self.reduced(points)
        out = np.empty(us.shape[0], dtype=np.bool_)
        _contains_batch(us, hs, self.cone.length, self.cone.aperture,
                        self.thickness, out)
        return bool(out[0]) if single else out

    def bounding_box(self):
        """Axis-aligned box that surely contains the body."""
        x = self.cone.target
        reach = self.cone.aperture + self.thickness
        lo = np.minimum(-self.thickness, x - reach)
        hi = np.maximum(self.thickness, x + reach)
        return lo, hi


@dataclass(frozen=True)
class ObstacleBall:
    """A ball obstacle."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, "center"))
        if self.radius < 0.0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")


@dataclass(frozen=True)
class ObstacleLine:
    """A line obstacle carrying the radius of its solid cylinder."""

    point: np.ndarray
    direction: np.ndarray
    radius: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "point", _as_vector(self.point, "point"))
        object.__setattr__(self, "direction", _as_vector(self.direction, "direction"))
        if self.point.shape != self.direction.shape:
            raise ValueError("point and direction must have equal dimension")
        if abs(np.linalg.norm(self.direction) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector (within 1e-12)")
        if self.radius < 0.0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def axis_coordinates(points, target):
    """Axial and radial coordinates of points relative to the segment axis.

    Returns (us, hs) for an (m, d) array of points: us is the signed
    position along the unit axis through target, hs the distance to that
    axis.  The pair feeds the planar distance kernel.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    x = _as_vector(target, "target")
    r = float(np.linalg.norm(x))
    if r <= 0.0:
        raise ValueError("target must be away from the origin")
    us = pts @ (x / r)
    perp2 = np.einsum("ij,ij->i", pts, pts) - us * us
    hs = np.sqrt(np.maximum(perp2, 0.0))
    return us, hs


def dist_points_segment(points, target):
    """Vectorized distance from each point of an (m, d) array to [0, target]."""
    us, hs = axis_coordinates(points, target)
    r = float(np.linalg.norm(np.asarray(target, dtype=np.float64)))
    du = us - np.clip(us, 0.0, r)
    return np.hypot(du, hs)


def dist_lines_segment(points, directions, target):
    """Vectorized distance from each line (point, unit direction) to [0, target].

    Closed form: clamp the segment parameter of the unconstrained
    minimizer, then re-minimize over the free line parameter (exact by
    convexity of the squared distance).
    """
    b = np.atleast_2d(np.asarray(points, dtype=np.float64))
    v = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    x = _as_vector(target, "target")
    r = float(np.linalg.norm(x))
    ax = x / r
    b1 = b @ ax
    v1 = v @ ax
    bv = np.einsum("ij,ij->i", b, v)
    bb = np.einsum("ij,ij->i", b, b)
    vperp2 = np.maximum(1.0 - v1 * v1, 0.0)
    parallel = vperp2 < 1e-14
    safe = np.where(parallel, 1.0, vperp2)
    t_un = -(bv - b1 * v1) / safe
    w = np.clip((b1 + t_un * v1) / r, 0.0, 1.0)
    t = -(bv - w * r * v1)
    d2 = bb + t * t + (w * r) ** 2 + 2.0 * t * bv - 2.0 * w * r * b1 \
        - 2.0 * t * w * r * v1
    d2 = np.where(parallel, bb - b1 * b1, d2)
    return np.sqrt(np.maximum(d2, 0.0))


def _reduce_point(point, target):
    p = _as_vector(point, "point")
    x = _as_vector(target, "target")
    if p.shape != x.shape:
        raise ValueError("point and target must have equal dimension")
    r = float(np.linalg.norm(x))
    if r <= 0.0:
        raise ValueError("target must be away from the origin")
    u = float(p @ x) / r
    perp2 = float(p @ p) - u * u
    h = math.sqrt(perp2) if perp2 > 0.0 else 0.0
    return u, h, r


def dist_point_segment(point, target):
    """Distance from a point to the sight segment [0, target]."""
    u, h, r = _reduce_point(point, target)
    return float(_dist2d(u, h, r, 0.0))


def dist_point_cone(point, cone):
    """Distance from a point to the viewing cone (its convex hull body)."""
    u, h, r = _reduce_point(point, cone.target)
    return float(_dist2d(u, h, r, cone.aperture))


def _line_coeffs(line, target):
    """Scalars describing a line in the cone's reduced coordinates.

    Returns (u0, du, h2c, h2l, h2q, t_lo, t_hi): axial position of the line
    point at parameter t is u0 + t*du, squared radial offset is
    h2c + h2l*t + h2q*t^2, and [t_lo, t_hi] brackets the global minimizer
    of the distance to any cone of this target (derived from the distance
    lower bound |p| - |target| - aperture, which exceeds the value at the
    closest approach to the origin outside the bracket).
    """
    x = _as_vector(target, "target")
    r = float(np.linalg.norm(x))
    b = line.point
    v = line.direction
    axis = x / r
    u0 = float(b @ axis)
    du = float(v @ axis)
    bp2 = float(b @ b) - u0 * u0
    bpvp = float(b @ v) - u0 * du
    vp2 = max(0.0, 1.0 - du * du)
    t0 = -float(b @ v)
    dmin2 = max(0.0, float(b @ b) - t0 * t0)
    dmin = math.sqrt(dmin2)
    big = r + r  # aperture < r always, so |x| + q < 2r
    w = math.sqrt(big * (2.0 * dmin + big)) + 1.0
    return u0, du, max(0.0, bp2), 2.0 * bpvp, vp2, t0 - w, t0 + w


def dist_line_cone(line, cone):
    """Distance from a full line to the viewing cone.

    Ternary search along the line (the distance is convex there), bracketed
    where the line is close enough to the origin to possibly beat the value
    at its closest approach; tolerance 1e-10 * (|target| + 1).
    """
    u0, du, h2c, h2l, h2q, t_lo, t_hi = _line_coeffs(line, cone.target)
    tol = LINE_SEARCH_TOL * (cone.length + 1.0)
    return float(_line_cone_dist(u0, du, h2c, h2l, h2q,
                                 cone.length, cone.aperture, t_lo, t_hi, tol))


# ---------------------------------------------------------------------------
# apertures and volumes
# ---------------------------------------------------------------------------

def max_aperture(obstacle, target, cap):
    """Largest aperture in [0, cap] whose cone stays clear of the obstacle.

    The predicate "obstacle touches the cone of aperture q" is monotone in
    q, so a bisection to tolerance 1e-9 * |target| finds the threshold.
    Returns (aperture, censored); censored means even the capped cone is
    clear.  Raises if the obstacle already blocks the bare segment or if
    the cap is not a valid aperture.
    """
    x = _as_vector(target, "target")
    r = float(np.linalg.norm(x))
    if not (0.0 < cap < r):
        raise ValueError(f"cap must lie in (0, |target|), got {cap}")
    tol = APERTURE_TOL * r
    if isinstance(obstacle, ObstacleBall):
        u, h, _ = _reduce_point(obstacle.center, x)
        if _dist2d(u, h, r, 0.0) <= obstacle.radius:
            raise ValueError("obstacle blocks the sight segment itself")
        q = float(_aperture_ball(u, h, obstacle.radius, r, cap, tol))
    elif isinstance(obstacle, ObstacleLine):
        u0, du, h2c, h2l, h2q, t_lo, t_hi = _line_coeffs(obstacle, x)
        ltol = LINE_SEARCH_TOL * (r + 1.0)
        if _line_cone_dist(u0, du, h2c, h2l, h2q, r, 0.0,
                           t_lo, t_hi, ltol) <= obstacle.radius:
            raise ValueError("obstacle blocks the sight segment itself")
        q = float(_aperture_line(u0, du, h2c, h2l, h2q, obstacle.radius,
                                 r, cap, t_lo, t_hi, ltol, tol))
    else:
        raise TypeError(f"unsupported obstacle type {type(obstacle)!r}")
    return q, q >= cap


def revolve_volume(body, n):
    """n-dimensional volume of the thickened cone as a solid of revolution.

    The radial profile rho(u) is recovered by bisection on the distance
    kernel (tolerance 1e-10 * max(|target|, 1)) and
    kappa_{n-1} * integral rho(u)^(n-1) du is evaluated by adaptive Simpson
    quadrature at relative tolerance 1e-8, split at the tangency abscissas
    where the profile changes analytic form.  n = 1 reduces to the length
    of the axial support;  n >= 2 is the generic case.
    """
    if n < 1:
        raise ValueError(f"revolve_volume requires n >= 1, got {n}")
    r = body.cone.length
    q = body.cone.aperture
    t = body.thickness
    if n == 1:
        lo = -t if q < r else r - q - t
        return (r + q + t) - lo
    if q == 0.0:
        # capsule: ball of radius t plus cylinder of radius t and length r
        return unit_ball_volume(n) * t ** n \
            + unit_ball_volume(n - 1) * t ** (n - 1) * r
    tol = PROFILE_TOL * max(r, 1.0)
    integral = _revolve_pieces(r, q, t, n, tol, VOLUME_REL_TOL)
    return unit_ball_volume(n - 1) * float(integral)


def mc_volume_oracle(contains, box_lo, box_hi, n_points, stream,
                     chunk=2_000_000):
    """Hit-or-miss volume estimate inside an axis-aligned box.

    contains must accept an (m, d) array and return a boolean mask.
    Returns (estimate, stderr) with stderr = box_vol * sqrt(p(1-p)/n).
    Used as the independent oracle for revolve_volume; keep it dumb.
    """
    lo = np.asarray(box_lo, dtype=np.float64)
    hi = np.asarray(box_hi, dtype=np.float64)
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ValueError("box_hi must exceed box_lo componentwise")
    if n_points <= 0:
        raise ValueError("n_points must be positive")
    d = lo.shape[0]
    box_vol = float(np.prod(hi - lo))
    hits = 0
    done = 0
    while done < n_points:
        m = min(chunk, n_points - done)
        pts = stream.uniform((m, d)) * (hi - lo) + lo
        hits += int(np.count_nonzero(contains(pts)))
        done += m
    p = hits / n_points
    est = box_vol * p
    stderr = box_vol * math.sqrt(max(p * (1.0 - p), 0.0) / n_points)
    return est, stderr
