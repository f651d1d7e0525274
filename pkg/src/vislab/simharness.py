"""Simulation harness utilities: Wilson intervals, empirical CDFs,
deterministic index-parallel mapping, and the CSV/JSON formats the CLI
and the experiment runner share.

Serialization renders floats with repr (shortest round-trip decimal), so
written files are byte-stable for equal inputs and parse back to the
exact binary64 values.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

__all__ = [
    "SCHEMA_VERSION",
    "BinomialCI",
    "bernoulli_ci",
    "ecdf",
    "run_indexed",
    "write_samples_csv",
    "write_report_json",
    "read_report_json",
]

SCHEMA_VERSION = 1
CSV_HEADER = "scene_index,q,q_over_delta,censored"


@dataclass(frozen=True)
class BinomialCI:
    p_hat: float
    lo: float
    hi: float
    n: int
    level: float

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.p_hat <= self.hi <= 1.0:
            raise ValueError("interval must satisfy 0 <= lo <= p <= hi <= 1")


def bernoulli_ci(successes, n, level=0.95):
    """Wilson score interval for a Bernoulli proportion."""
    n = int(n)
    k = int(successes)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"successes must lie in [0, {n}], got {k}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    p = k / n
    z = float(norm.ppf(0.5 * (1.0 + level)))
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    lo = 0.0 if k == 0 else max(center - half, 0.0)
    hi = 1.0 if k == n else min(center + half, 1.0)
    return BinomialCI(p, lo, hi, n, level)


def ecdf(samples):
    """Right-continuous empirical CDF of the samples, as a callable that
    accepts scalars or arrays."""
    arr = np.sort(np.asarray(samples, dtype=np.float64))
    n = arr.size
    if n == 0:
        raise ValueError("ecdf needs at least one sample")

    def cdf(t):
        counts = np.searchsorted(arr, np.asarray(t, dtype=np.float64),
                                 side="right")
        out = counts / n
        return float(out) if np.ndim(t) == 0 else out

    return cdf


def run_indexed(fn, n, threads=None):
    """[fn(0), ..., fn(n-1)], evaluated by up to `threads` workers.

    Results are collected in index order, so any fn that depends only on
    its index (e.g. via per-index random substreams) yields output
    independent of the thread count.
    """
    n = int(n)
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(int(threads), 1)
    if threads == 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def write_samples_csv(path, rows):
    """Per-scene sample table: scene_index, q, q_over_delta, censored
    (0/1); LF endings, UTF-8, shortest round-trip decimals."""
    lines = [CSV_HEADER]
    for i, (q, q_over_delta, censored) in enumerate(rows):
        lines.append(
            f"{i},{float(q)!r},{float(q_over_delta)!r},{int(bool(censored))}")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write samples CSV {path!r}: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def write_report_json(path, report):
    """Serialize a report (a dict or an object with to_dict) with a
    schema_version stamp, sorted keys and stable float rendering."""
    payload = _jsonable(report)
    if not isinstance(payload, dict):
        raise TypeError("report must serialize to a JSON object")
    payload.setdefault("schema_version", SCHEMA_VERSION)
    text = json.dumps(payload, indent=2, sort_keys=True,
                      ensure_ascii=False) + "\n"
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report JSON {path!r}: {exc}") from exc


def read_report_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read report JSON {path!r}: {exc}") from exc