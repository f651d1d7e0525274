"""Command-line surface: exact evaluation, scene simulation, capacity
estimation, and the convergence experiment.

Every command prints one JSON document to stdout on success (diagnostics
go to stderr) and is byte-reproducible for a fixed seed, independent of
--threads.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import json
import logging
import math
import os
import sys
from contextlib import contextmanager

import numpy as np

from . import boolean, cylinders
from .boolean import BooleanParams, RadiusLaw
from .cylinders import CylinderParams
from .interlacements import (
    InterlacementParams,
    TargetShape,
    WosConfig,
    capacity_asymptotic,
    estimate_capacity,
)
from .limitlaw import (
    ExperimentConfig,
    ModelKind,
    _exact_cdf,
    aperture_cap,
    ks_statistic,
    limit_rate,
    run_experiment,
    simulate_q_samples,
    visibility_window,
)
from .mathcore import RngStream, green_constant
from .simharness import (
    SCHEMA_VERSION,
    bernoulli_ci,
    write_report_json,
    write_samples_csv,
)

__all__ = ["main"]

log = logging.getLogger(__name__)


class UsageError(Exception):
    """Invalid flags or parameter combinations: exit code 2."""


@contextmanager
def _usage_phase():
    """Convert validation-time exceptions into usage errors."""
    try:
        yield
    except UsageError:
        raise
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _pick(ns, conf, key, default=None, required=False):
    """Flag value, falling back to the --config file, then the default."""
    attr = key.replace("-", "_")
    val = getattr(ns, attr, None)
    if val is None:
        val = conf.get(key, conf.get(attr, default))
    if val is None and required:
        raise UsageError(f"--{key} is required")
    return val


def _pick_flag(ns, conf, key):
    attr = key.replace("-", "_")
    if getattr(ns, attr, False):
        return True
    return bool(conf.get(key, conf.get(attr, False)))


def _build_params(model, d, alpha, rho, law_spec):
    if model is ModelKind.BM:
        if law_spec is not None:
            law = RadiusLaw.parse(str(law_spec))
        elif rho is not None:
            law = RadiusLaw.constant(float(rho))
        else:
            raise UsageError("model bm needs --radius-law (or --rho as a "
                             "constant-radius shorthand)")
        return BooleanParams(float(alpha), law, int(d))
    if rho is None:
        raise UsageError(f"--rho is required for model {model.value}")
    if model is ModelKind.PC:
        return CylinderParams(float(alpha), float(rho), int(d))
    return InterlacementParams(float(alpha), float(rho), int(d))


def _params_echo(model, params):
    if model is ModelKind.BM:
        law = params.law
        return {"alpha": params.alpha, "dimension": params.dimension,
                "radius_law": {"kind": law.kind, "values": list(law.values),
                               "probs": list(law.probs)}}
    return {"alpha": params.alpha, "rho": params.rho,
            "dimension": params.dimension}


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_exact(ns, conf, threads):
    with _usage_phase():
        model = ModelKind.parse(_pick(ns, conf, "model", required=True))
        d = int(_pick(ns, conf, "d", required=True))
        alpha = float(_pick(ns, conf, "alpha", required=True))
        r = float(_pick(ns, conf, "r", required=True))
        s = float(_pick(ns, conf, "s", required=True))
        rho = _pick(ns, conf, "rho")
        params = _build_params(model, d, alpha, rho,
                               _pick(ns, conf, "radius-law"))
        delta = visibility_window(model, d, r)
        lam = limit_rate(model, params)
        if model is ModelKind.BM:
            vis = boolean.visibility_probability(params, r)
            surv = boolean.conditional_survival_exact(params, r, s)
            exactness = "exact"
        elif model is ModelKind.PC:
            vis = cylinders.visibility_probability(params, r)
            surv = cylinders.conditional_survival_exact(params, r, s)
            exactness = "exact"
        else:
            vis = math.exp(-alpha * capacity_asymptotic(r, float(rho), d))
            surv = math.exp(-lam * s)
            exactness = "asymptotic"
    return {"schema_version": SCHEMA_VERSION, "model": model.value,
            "params": _params_echo(model, params), "r": r, "s": s,
            "delta": delta, "lambda": lam, "visibility_prob": vis,
            "conditional_survival": surv, "exactness": exactness}


def _simulate_survival_record(r, scaled, censor_scaled, n, lam):
    """Survival entries on a lambda-scaled grid, for the optional figure."""
    survival = []
    for mult in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0):
        s = mult / lam
        if s >= censor_scaled:
            continue
        ci = bernoulli_ci(int(np.count_nonzero(scaled > s)), n)
        survival.append({"s": s, "estimate": ci.p_hat, "lo": ci.lo,
                         "hi": ci.hi, "limit": math.exp(-lam * s)})
    return {"r": r, "kind": "scenes", "survival": survival}


def cmd_simulate(ns, conf, threads):
    with _usage_phase():
        model = ModelKind.parse(_pick(ns, conf, "model", required=True))
        if model is ModelKind.BI:
            raise UsageError(
                "simulate supports bm and pc only: the path model has no "
                "conditional scene sampler (use limit-check, which "
                "evaluates its survival functionally)")
        d = int(_pick(ns, conf, "d", required=True))
        alpha = float(_pick(ns, conf, "alpha", required=True))
        r = float(_pick(ns, conf, "r", required=True))
        n = int(_pick(ns, conf, "n", required=True))
        if n < 0:
            raise UsageError(f"--n must be nonnegative, got {n}")
        seed = int(_pick(ns, conf, "seed", default=0))
        out = str(_pick(ns, conf, "out", required=True))
        mult = float(_pick(ns, conf, "q-cap-mult", default=50.0))
        figures = _pick_flag(ns, conf, "figures")
        params = _build_params(model, d, alpha,
                               _pick(ns, conf, "rho"),
                               _pick(ns, conf, "radius-law"))
        delta = visibility_window(model, d, r)
        q_cap = aperture_cap(model, d, r, mult)
        lam = limit_rate(model, params)
    summary = {"schema_version": SCHEMA_VERSION, "model": model.value,
               "params": _params_echo(model, params), "r": r,
               "n_scenes": n, "seed": seed, "delta": delta, "q_cap": q_cap,
               "lambda": lam, "csv_path": out}
    if n == 0:
        write_samples_csv(out, [])
        summary.update(insufficient_data=True, ks_exact=None,
                       ks_limit=None, censored=None)
        return summary
    rows, _, _ = simulate_q_samples(model, params, r, n, RngStream(seed),
                                    mult, threads)
    write_samples_csv(out, rows)
    scaled = np.sort([row[1] for row in rows])
    censor_scaled = q_cap / delta
    cens = bernoulli_ci(sum(row[2] for row in rows), n)
    summary.update(
        insufficient_data=False,
        ks_exact=ks_statistic(scaled,
                              _exact_cdf(model, params, r, censor_scaled),
                              censor_at=censor_scaled),
        ks_limit=ks_statistic(scaled, lambda t: 1.0 - np.exp(-lam * t),
                              censor_at=censor_scaled),
        censored={"count": int(round(cens.p_hat * n)),
                  "fraction": cens.p_hat, "lo": cens.lo, "hi": cens.hi})
    if figures:
        from .viz import render_survival_figure
        pseudo = {"lambda": lam, "config": {"model": model.value},
                  "records": [_simulate_survival_record(
                      r, scaled, censor_scaled, n, lam)]}
        render_survival_figure(pseudo, out + ".survival.png")
        log.info("wrote %s", out + ".survival.png")
    return summary


def cmd_capacity(ns, conf, threads):
    with _usage_phase():
        kind = str(_pick(ns, conf, "shape", required=True)).lower()
        if kind not in ("ball", "cylinder", "cone"):
            raise UsageError(f"unknown shape {kind!r}; expected ball, "
                             "cylinder or cone")
        d = int(_pick(ns, conf, "d", required=True))
        r = float(_pick(ns, conf, "r", required=True))
        n = int(_pick(ns, conf, "n", default=200_000))
        seed = int(_pick(ns, conf, "seed", default=0))
        method = str(_pick(ns, conf, "method", default="auto"))
        if method not in ("auto", "direct", "levels"):
            raise UsageError(f"unknown method {method!r}; expected auto, "
                             "direct or levels")
        truncate = _pick_flag(ns, conf, "truncate-only")
        rho = _pick(ns, conf, "rho")
        if kind == "ball":
            shape = TargetShape.ball((0.0,) * d, r)
            asym = r ** (d - 2) / green_constant(d)
        else:
            if rho is None:
                raise UsageError(f"--rho is required for shape {kind!r}")
            rho = float(rho)
            if kind == "cylinder":
                shape = TargetShape.segment_cylinder(r, rho, d)
            else:
                aperture = _pick(ns, conf, "aperture")
                if aperture is None:
                    raise UsageError("--aperture is required for cones")
                shape = TargetShape.cone(r, float(aperture), rho, d)
            asym = capacity_asymptotic(r, rho, d)
        cfg = WosConfig.for_shape(shape, truncate_only=truncate)
    est = estimate_capacity(shape, cfg, n, RngStream(seed), method=method)
    return {"schema_version": SCHEMA_VERSION, "shape": kind,
            "dimension": d, "length_or_radius": r,
            "rho": rho if kind != "ball" else None,
            "n_walkers": est.n_walkers, "seed": seed, "method": method,
            "truncate_only": truncate, "estimate": est.value,
            "stderr": est.stderr, "bias_bound": est.bias_bound,
            "asymptotic": asym, "ratio": est.value / asym}


def _parse_float_list(text, flag):
    try:
        vals = tuple(float(tok) for tok in str(text).split(",") if tok != "")
    except ValueError:
        raise UsageError(f"malformed {flag}: {text!r}") from None
    if not vals:
        raise UsageError(f"{flag} must list at least one value")
    return vals


def cmd_limit_check(ns, conf, threads):
    with _usage_phase():
        model = ModelKind.parse(_pick(ns, conf, "model", required=True))
        d = int(_pick(ns, conf, "d", required=True))
        alpha = float(_pick(ns, conf, "alpha", required=True))
        params = _build_params(model, d, alpha,
                               _pick(ns, conf, "rho"),
                               _pick(ns, conf, "radius-law"))
        r_list = _parse_float_list(_pick(ns, conf, "r-list", required=True),
                                   "--r-list")
        s_grid = _parse_float_list(
            _pick(ns, conf, "s-grid", default="0.5,1.0,2.0"), "--s-grid")
        n = int(_pick(ns, conf, "n", required=True))
        seed = int(_pick(ns, conf, "seed", default=0))
        mult = float(_pick(ns, conf, "q-cap-mult", default=50.0))
        out = str(_pick(ns, conf, "out", required=True))
        figures = _pick_flag(ns, conf, "figures")
        config = ExperimentConfig(model, params, r_list, n, s_grid, seed,
                                  mult)
    report = run_experiment(config, threads)
    payload = report.to_dict()
    write_report_json(out, payload)
    log.info("wrote %s", out)
    if figures:
        from .viz import render_ks_trend_figure, render_survival_figure
        render_survival_figure(payload, out + ".survival.png")
        render_ks_trend_figure(payload, out + ".ks_trend.png")
        log.info("wrote %s and %s", out + ".survival.png",
                 out + ".ks_trend.png")
    return payload


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker cap (default: VISLAB_THREADS or all "
                             "cores); results do not depend on it")
    common.add_argument("--config", default=None,
                        help="JSON file of flag defaults (flags win)")

    parser = argparse.ArgumentParser(
        prog="vislab",
        description="Visibility in obstacle soups: exact laws, scene "
                    "simulation, capacity estimation, convergence checks.")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("exact", parents=[common],
                       help="evaluate the exact (or asymptotic) laws")
    for flag, kw in (("--model", {}), ("--d", {"type": int}),
                     ("--alpha", {"type": float}), ("--rho", {"type": float}),
                     ("--radius-law", {}), ("--r", {"type": float}),
                     ("--s", {"type": float})):
        p.add_argument(flag, **kw)
    p.set_defaults(handler=cmd_exact)

    p = sub.add_parser("simulate", parents=[common],
                       help="sample conditional scenes to CSV + summary")
    for flag, kw in (("--model", {}), ("--d", {"type": int}),
                     ("--alpha", {"type": float}), ("--rho", {"type": float}),
                     ("--radius-law", {}), ("--r", {"type": float}),
                     ("--n", {"type": int}), ("--seed", {"type": int}),
                     ("--out", {}), ("--q-cap-mult", {"type": float})):
        p.add_argument(flag, **kw)
    p.add_argument("--figures", action="store_true")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("capacity", parents=[common],
                       help="walk-on-spheres capacity of a target shape")
    for flag, kw in (("--shape", {}), ("--d", {"type": int}),
                     ("--r", {"type": float}), ("--rho", {"type": float}),
                     ("--aperture", {"type": float}), ("--n", {"type": int}),
                     ("--seed", {"type": int}), ("--method", {})):
        p.add_argument(flag, **kw)
    p.add_argument("--truncate-only", action="store_true")
    p.set_defaults(handler=cmd_capacity)

    p = sub.add_parser("limit-check", parents=[common],
                       help="convergence experiment over an r list")
    for flag, kw in (("--model", {}), ("--d", {"type": int}),
                     ("--alpha", {"type": float}), ("--rho", {"type": float}),
                     ("--radius-law", {}), ("--r-list", {}),
                     ("--s-grid", {}), ("--n", {"type": int}),
                     ("--seed", {"type": int}), ("--out", {}),
                     ("--q-cap-mult", {"type": float})):
        p.add_argument(flag, **kw)
    p.add_argument("--figures", action="store_true")
    p.set_defaults(handler=cmd_limit_check)
    return parser


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            conf = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load config {path!r}: {exc}") from exc
    if not isinstance(conf, dict):
        raise UsageError(f"config {path!r} must hold a JSON object")
    return conf


def _resolve_threads(ns, conf):
    val = getattr(ns, "threads", None)
    if val is None:
        val = conf.get("threads")
    if val is None:
        val = os.environ.get("VISLAB_THREADS")
    if val is None:
        return os.cpu_count() or 1
    try:
        n = int(val)
    except ValueError:
        raise UsageError(f"invalid thread count {val!r}") from None
    if n < 1:
        raise UsageError(f"thread count must be at least 1, got {n}")
    return n


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(name)s: %(message)s")
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if getattr(ns, "handler", None) is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        conf = _load_config_file(getattr(ns, "config", None))
        threads = _resolve_threads(ns, conf)
        payload = ns.handler(ns, conf, threads)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: exit 1, diagnostics to stderr
        log.exception("command failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True,
                                ensure_ascii=False) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())