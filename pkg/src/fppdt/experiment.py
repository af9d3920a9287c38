"""Campaign plumbing: seed derivation, statistics, result containers, and
deterministic CSV/JSON emission.

Every campaign derives one RNG stream per (label, replica) from a master seed
with a splitmix64 finisher, runs replicas as pure functions of their stream,
and aggregates in replica order. Thread count therefore never changes any
output byte.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_FNV_BASIS = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

SCHEMA = "fppdt-1"


class ExperimentError(ValueError):
    """Invalid campaign parameters or malformed results."""


def _splitmix64(x: int) -> int:
    x &= _MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK
    x ^= x >> 31
    return x


def _fnv1a64(data: bytes) -> int:
    h = _FNV_BASIS
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK
    return h


def derive_seed(master: int, label: str, index: int = 0) -> int:
    """Stable 64-bit stream seed for (master, label, index).

    master is xor-folded with an FNV-1a hash of the label and a golden-ratio
    spread of the index, then passed through the splitmix64 finisher. Distinct
    labels and indices give well-separated streams; the map is pure, so any
    replica can be recomputed in isolation.
    """
    h = (int(master) & _MASK) ^ _fnv1a64(label.encode("utf-8"))
    h ^= (int(index) * _GOLDEN) & _MASK
    return _splitmix64(h)


def thread_count() -> int:
    try:
        k = int(os.environ.get("FPPDT_THREADS", "1"))
    except ValueError:
        k = 1
    return max(1, k)


def parallel_map(fn: Callable[[int], object], count: int) -> List[object]:
    """fn(0..count-1), results in index order.

    fn must be a pure function of its index; replicas then commute and the
    result list is independent of the worker count.
    """
    workers = thread_count()
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def mean_ci(values: Sequence[float]) -> Dict[str, float]:
    """Sample mean, variance (ddof=1), and normal-approximation 95% CI."""
    xs = np.asarray(values, dtype=float)
    n = len(xs)
    if n == 0:
        raise ExperimentError("no samples")
    mean = float(xs.mean())
    if n >= 2:
        var = float(xs.var(ddof=1))
        half = 1.96 * math.sqrt(var / n)
    else:
        var = float("nan")
        half = 0.0
    return {"count": n, "mean": mean, "var": var,
            "ci_low": mean - half, "ci_high": mean + half}


def ls_fit(x: Sequence[float], y: Sequence[float]) -> Dict[str, float]:
    """Unweighted least-squares line y = slope*x + intercept with the
    residual-based standard error of the slope."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    m = len(xs)
    if m < 3:
        raise ExperimentError("need at least 3 points for a slope with stderr")
    xbar = xs.mean()
    sxx = float(((xs - xbar) ** 2).sum())
    if sxx == 0:
        raise ExperimentError("degenerate fit grid")
    slope = float(((xs - xbar) * (ys - ys.mean())).sum() / sxx)
    intercept = float(ys.mean() - slope * xbar)
    resid = ys - (slope * xs + intercept)
    s2 = float((resid ** 2).sum() / (m - 2))
    return {"slope": slope, "intercept": intercept,
            "slope_stderr": math.sqrt(s2 / sxx)}


# ---------------------------------------------------------------------------
# result container
# ---------------------------------------------------------------------------

def _pyify(obj):
    if isinstance(obj, np.ndarray):
        return [_pyify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    return obj


def format_cell(v) -> str:
    """Deterministic CSV token: ints verbatim, floats at 17 significant
    digits (lossless), strings as-is."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return "%d" % int(v)
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


@dataclass
class ExperimentResult:
    """One campaign's raw table plus its per-cell statistics and fits.

    rows hold the replica-level data behind columns; cells hold one dict per
    grid point with at least a mean and a 95% CI; fits hold named fitted
    exponents with standard errors.
    """

    command: str
    params: Dict[str, object]
    columns: List[str]
    rows: List[Tuple]
    cells: List[Dict[str, object]] = field(default_factory=list)
    fits: Dict[str, Dict[str, float]] = field(default_factory=dict)
    extra: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ExperimentError("row width does not match columns")
        for cell in self.cells:
            if "ci_low" in cell and "ci_high" in cell:
                if not cell["ci_high"] >= cell["ci_low"]:
                    raise ExperimentError("negative CI width")
            if "var" in cell and not math.isnan(cell["var"]):
                if cell.get("count", 0) < 2:
                    raise ExperimentError("variance reported with fewer than 2 replicas")

    def summary(self) -> Dict[str, object]:
        return _pyify({
            "schema": SCHEMA,
            "command": self.command,
            "params": self.params,
            "cells": self.cells,
            "fits": self.fits,
            "extra": self.extra,
        })

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(",".join(self.columns) + "\n")
            for row in self.rows:
                f.write(",".join(format_cell(v) for v in row) + "\n")

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            json.dump(self.summary(), f, sort_keys=True, indent=2)
            f.write("\n")
