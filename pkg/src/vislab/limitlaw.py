"""The visibility window, the limiting clearance law, and the experiment
runner that verifies the scaled clearance radius converges to it.

Across all three obstacle models the conditional law of Q/delta_r given
visibility converges to Exp(lambda_model).  The runner checks this in two
tiers: the empirical samples against the exact finite-r law (simulation
correctness, a tight KS band at any r) and against the limit law (the
convergence trend along r_list).  Ball and line obstacles are sampled
scene by scene; path obstacles have no conditional scene sampler, so
their records evaluate the coupled capacity-difference estimator on a
grid of s values instead and are marked functional.
"""

import logging
import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import boolean, cylinders
from .boolean import BooleanParams, sample_Q
from .cylinders import CylinderParams
from .interlacements import (
    InterlacementParams,
    conditional_survival_mc,
    lambda_bi,
    window_scale,
)
from .mathcore import RngStream, check_dimension
from .simharness import SCHEMA_VERSION, bernoulli_ci, run_indexed

__all__ = [
    "ModelKind",
    "ExperimentConfig",
    "ExperimentReport",
    "visibility_window",
    "limit_rate",
    "limit_survival",
    "exact_survival",
    "ks_statistic",
    "aperture_cap",
    "simulate_q_samples",
    "run_experiment",
]

log = logging.getLogger(__name__)

CDF_GRID = 257
BI_STREAM_STRIDE = 10_000_000


class ModelKind(str, Enum):
    """The three obstacle models: Poisson balls, Poisson line cylinders,
    Brownian path sausages."""

    BM = "bm"
    PC = "pc"
    BI = "bi"

    @classmethod
    def parse(cls, token):
        try:
            return cls(str(token).lower())
        except ValueError:
            raise ValueError(
                f"unknown model {token!r}; expected bm, pc or bi") from None


_PARAMS_TYPE = {
    ModelKind.BM: BooleanParams,
    ModelKind.PC: CylinderParams,
    ModelKind.BI: InterlacementParams,
}


def visibility_window(model, d, r):
    """The window delta_r normalizing the clearance radius: 1/r for balls;
    1 (d=2) or 1/r for line cylinders; log^2(r)/r (d=3) or 1/r for path
    sausages, which need d >= 3."""
    model = ModelKind(model)
    check_dimension(d, 2)
    if r <= 1.0:
        raise ValueError(f"window needs r > 1, got {r}")
    if model is ModelKind.BM:
        return 1.0 / r
    if model is ModelKind.PC:
        return 1.0 if d == 2 else 1.0 / r
    return window_scale(r, d)


def _check_params(model, params):
    model = ModelKind(model)
    expected = _PARAMS_TYPE[model]
    if not isinstance(params, expected):
        raise TypeError(
            f"model {model.value} needs {expected.__name__}, "
            f"got {type(params).__name__}")
    return model


def limit_rate(model, params):
    """The exponential intensity lambda of the limiting clearance law."""
    model = _check_params(model, params)
    if model is ModelKind.BM:
        return boolean.lambda_bm(params)
    if model is ModelKind.PC:
        return cylinders.lambda_pc(params)
    return lambda_bi(params.alpha, params.rho, params.dimension)


def limit_survival(model, params, s):
    """P[Q/delta_r > s | visible] in the r -> infinity limit:
    exp(-lambda * s)."""
    if s < 0.0:
        raise ValueError(f"s must be nonnegative, got {s}")
    return math.exp(-limit_rate(model, params) * s)


def exact_survival(model, params, r, s):
    """The finite-r conditional survival of Q/delta_r at s (scene models
    only; the path model has no finite-r closed form)."""
    model = _check_params(model, params)
    if model is ModelKind.BM:
        return boolean.conditional_survival_exact(params, r, s)
    if model is ModelKind.PC:
        return cylinders.conditional_survival_exact(params, r, s)
    raise ValueError("no exact finite-r law for the path model")


def ks_statistic(samples, cdf, censor_at=None):
    """Two-sided Kolmogorov-Smirnov distance between sorted samples and a
    reference CDF.

    With censor_at, samples at or above the cap are treated as censored:
    the supremum runs over the uncensored range plus the boundary gap
    |F_hat(cap-) - cdf(cap)|, with the empirical CDF still normalized by
    the full sample count.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("samples must be a nonempty 1-d array")
    if np.any(np.diff(arr) < 0.0):
        raise ValueError("samples must be sorted")
    n = arr.size
    if censor_at is None:
        f = np.clip(np.asarray(cdf(arr), dtype=np.float64), 0.0, 1.0)
        upper = np.max(np.arange(1, n + 1) / n - f)
        lower = np.max(f - np.arange(0, n) / n)
        return float(min(max(upper, lower, 0.0), 1.0))
    if censor_at <= 0.0:
        raise ValueError(f"censor_at must be positive, got {censor_at}")
    keep = arr < censor_at
    k = int(np.count_nonzero(keep))
    dist = abs(k / n - float(np.clip(cdf(censor_at), 0.0, 1.0)))
    if k:
        f = np.clip(np.asarray(cdf(arr[:k]), dtype=np.float64), 0.0, 1.0)
        dist = max(dist,
                   float(np.max(np.arange(1, k + 1) / n - f)),
                   float(np.max(f - np.arange(0, k) / n)))
    return float(min(max(dist, 0.0), 1.0))


def aperture_cap(model, d, r, multiplier=50.0):
    """Censoring cap on the clearance radius: multiplier windows, clamped
    below the aperture-validity bound 0.9 r."""
    if multiplier <= 0.0:
        raise ValueError(f"multiplier must be positive, got {multiplier}")
    return min(multiplier * visibility_window(model, d, r), 0.9 * r)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelKind
    params: object
    r_list: tuple
    n_scenes: int
    s_grid: tuple
    seed: int
    q_cap_multiplier: float = 50.0

    def __post_init__(self):
        model = _check_params(self.model, self.params)
        object.__setattr__(self, "model", model)
        r_list = tuple(float(r) for r in self.r_list)
        if not r_list or any(r <= 1.0 for r in r_list):
            raise ValueError("r_list must be nonempty with every r > 1")
        if any(b <= a for a, b in zip(r_list, r_list[1:])):
            raise ValueError("r_list must be strictly increasing")
        object.__setattr__(self, "r_list", r_list)
        if self.n_scenes < 100:
            raise ValueError("n_scenes must be at least 100")
        s_grid = tuple(float(s) for s in self.s_grid)
        if not s_grid or any(s < 0.0 for s in s_grid):
            raise ValueError("s_grid must be nonempty and nonnegative")
        if any(b <= a for a, b in zip(s_grid, s_grid[1:])):
            raise ValueError("s_grid must be strictly increasing")
        object.__setattr__(self, "s_grid", s_grid)
        if self.q_cap_multiplier <= 0.0:
            raise ValueError("q_cap_multiplier must be positive")

    def params_dict(self):
        p = self.params
        if isinstance(p, BooleanParams):
            law = p.law
            return {"alpha": p.alpha, "dimension": p.dimension,
                    "radius_law": {"kind": law.kind,
                                   "values": list(law.values),
                                   "probs": list(law.probs)}}
        return {"alpha": p.alpha, "rho": p.rho, "dimension": p.dimension}

    def to_dict(self):
        return {"model": self.model.value, "params": self.params_dict(),
                "r_list": list(self.r_list), "n_scenes": self.n_scenes,
                "s_grid": list(self.s_grid), "seed": self.seed,
                "q_cap_multiplier": self.q_cap_multiplier}


@dataclass(frozen=True)
class ExperimentReport:
    """Config echo plus one record per r.

    Scene records: kind "scenes", the window, the scaled censor point,
    both KS statistics, the censored fraction, and Wilson-bracketed
    empirical survival on s_grid.  Functional records (path model): kind
    "functional", coupled-estimator survival with its interval next to
    the limit value.  A failed r yields kind "failed" with the error
    message; the other r entries stand.
    """

    config: ExperimentConfig
    lambda_limit: float
    records: tuple

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION,
                "config": self.config.to_dict(),
                "lambda": self.lambda_limit,
                "records": [dict(rec) for rec in self.records]}


def simulate_q_samples(model, params, r, n_scenes, stream,
                       q_cap_multiplier=50.0, threads=None):
    """Per-scene clearance samples for the ball and line models.

    Returns (rows, delta, q_cap) with rows of (q, q/delta, censored);
    scene j draws from stream.child(j), so the row list is a pure
    function of the parent stream regardless of thread count.
    """
    model = _check_params(model, params)
    if model is ModelKind.BI:
        raise ValueError("the path model has no conditional scene sampler")
    d = params.dimension
    delta = visibility_window(model, d, r)
    q_cap = aperture_cap(model, d, r, q_cap_multiplier)
    sampler = boolean.sample_conditional_scene if model is ModelKind.BM \
        else cylinders.sample_conditional_scene
    x = np.zeros(d)
    x[0] = r

    def one_scene(j):
        scene = sampler(params, r, q_cap, stream.child(j))
        q, censored = sample_Q(scene, x, q_cap)
        return float(q), float(q / delta), bool(censored)

    rows = run_indexed(one_scene, int(n_scenes), threads)
    return rows, delta, q_cap


def _exact_cdf(model, params, r, censor_scaled):
    """Monotone interpolant of the exact finite-r CDF of Q/delta_r on
    [0, censor]; grid evaluation keeps the KS pass affordable and its
    interpolation error sits orders below the KS bands."""
    grid = np.linspace(0.0, censor_scaled, CDF_GRID)
    vals = np.array([1.0 - exact_survival(model, params, r, s)
                     for s in grid])
    interp = PchipInterpolator(grid, vals, extrapolate=False)

    def cdf(t):
        out = interp(np.clip(t, 0.0, censor_scaled))
        return np.clip(out, 0.0, 1.0)

    return cdf


def _scene_record(config, i_r, r, lam, threads):
    parent = RngStream(config.seed, i_r * (config.n_scenes + 1))
    rows, delta, q_cap = simulate_q_samples(
        config.model, config.params, r, config.n_scenes, parent,
        config.q_cap_multiplier, threads)
    scaled = np.sort([row[1] for row in rows])
    censor_scaled = q_cap / delta
    n = len(rows)
    ks_exact = ks_statistic(scaled, _exact_cdf(config.model, config.params,
                                               r, censor_scaled),
                            censor_at=censor_scaled)
    ks_limit = ks_statistic(scaled, lambda t: 1.0 - np.exp(-lam * t),
                            censor_at=censor_scaled)
    survival = []
    for s in config.s_grid:
        if s >= censor_scaled:
            survival.append({"s": s, "estimate": None, "lo": None,
                             "hi": None, "limit": math.exp(-lam * s)})
            continue
        ci = bernoulli_ci(int(np.count_nonzero(scaled > s)), n)
        survival.append({"s": s, "estimate": ci.p_hat, "lo": ci.lo,
                         "hi": ci.hi, "limit": math.exp(-lam * s)})
    return {"r": r, "kind": "scenes", "delta": delta,
            "censor_at": censor_scaled, "n_scenes": n,
            "ks_exact": ks_exact, "ks_limit": ks_limit,
            "censored_fraction": sum(row[2] for row in rows) / n,
            "survival": survival}


def _functional_record(config, i_r, r, lam):
    p = config.params
    delta = visibility_window(config.model, p.dimension, r)
    survival = []
    for k, s in enumerate(config.s_grid):
        stream = RngStream(
            config.seed,
            (i_r * len(config.s_grid) + k + 1) * BI_STREAM_STRIDE)
        est, (lo, hi) = conditional_survival_mc(
            p.alpha, p.rho, r, s, p.dimension, n_walkers=config.n_scenes,
            stream=stream)
        survival.append({"s": s, "estimate": est, "lo": lo, "hi": hi,
                         "limit": math.exp(-lam * s)})
    return {"r": r, "kind": "functional", "delta": delta,
            "n_walkers": config.n_scenes, "survival": survival}


def run_experiment(config, threads=None):
    """Run the convergence experiment over config.r_list; per-r failures
    are recorded, not raised, so one bad r cannot void the rest."""
    lam = limit_rate(config.model, config.params)
    records = []
    for i_r, r in enumerate(config.r_list):
        t0 = time.perf_counter()
        try:
            if config.model is ModelKind.BI:
                rec = _functional_record(config, i_r, r, lam)
            else:
                rec = _scene_record(config, i_r, r, lam, threads)
        except Exception as exc:
            rec = {"r": r, "kind": "failed",
                   "failure": f"{type(exc).__name__}: {exc}"}
        log.info("r=%g finished in %.2fs", r, time.perf_counter() - t0)
        records.append(rec)
    return ExperimentReport(config, lam, tuple(records))