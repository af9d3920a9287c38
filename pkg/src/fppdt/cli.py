"""Campaign driver behind the ``fppdt`` console script.

Thirteen subcommands map one-to-one onto the library's sampling and
estimation routines.  Parameters come from a flat key=value config file,
optionally overridden with ``--set KEY=VALUE`` and ``--seed``; every run
writes three files under a common prefix: the replica-level CSV, a JSON
summary, and a manifest recording the effective configuration, the code
version, and the derived per-replica seeds.  Replicas are pure functions
of their derived seed and results are reduced in replica order, so the
(config, seed) pair pins down every output byte regardless of thread
count.

Exit status: 0 on success, 2 when the configuration fails validation
(nothing is written), 3 when the computation itself fails.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .experiment import SCHEMA, ExperimentResult, derive_seed, mean_ci
from .fpp import (
    estimate_time_constant,
    point_passage_time,
    shape_deviation,
    truncation_gap,
    variance_scaling,
)
from .geometry import (
    Window,
    build_delaunay,
    build_voronoi_dual,
    nearest_vertex,
    sample_poisson,
)
from .paths import kappa_table, min_animal_scan, walk_length_scan
from .percolation import estimate_eta, estimate_pc_delaunay, estimate_pc_star
from .renorm import animal_growth_scan, good_box_density_probe
from .weights import WeightDistribution, WeightError, assign_weights


class ConfigError(ValueError):
    """Invalid campaign configuration; nothing has been written."""


# ---------------------------------------------------------------------------
# config file format
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"[+-]?\d+$")
_KEY_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_BOOLS = {"true": True, "yes": True, "on": True,
          "false": False, "no": False, "off": False}


def _scalar(token: str):
    t = token.strip()
    if not t:
        raise ConfigError("empty value")
    if _INT_RE.match(t):
        return int(t)
    try:
        return float(t)
    except ValueError:
        pass
    if t.lower() in _BOOLS:
        return _BOOLS[t.lower()]
    return t


def _split_top(text: str) -> List[str]:
    # commas nested in parentheses stay inside their token, so a value like
    # bernoulliAtom(0.4, 1) is one scalar and 16,32,64 is a list
    parts: List[str] = []
    cur: List[str] = []
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_value(text: str):
    """One typed value: int, float, bool, or string; 'a,b,c' becomes a list."""
    parts = _split_top(text)
    if len(parts) == 1:
        return _scalar(parts[0])
    return [_scalar(p) for p in parts]


def parse_config(text: str) -> Dict[str, object]:
    """Flat key=value lines; '#' starts a comment; no sections, no nesting."""
    options: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key = value" % lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError("line %d: bad key %r" % (lineno, key))
        if key in options:
            raise ConfigError("line %d: duplicate key %r" % (lineno, key))
        options[key] = parse_value(value)
    return options


# ---------------------------------------------------------------------------
# campaign configuration
# ---------------------------------------------------------------------------

_MISSING = object()

_COMMON_KEYS = ("seed", "out", "threads")

_ALLOWED: Dict[str, frozenset] = {
    "gen": frozenset(_COMMON_KEYS + ("window", "margin", "intensity")),
    "triangulate": frozenset(_COMMON_KEYS + ("window", "margin", "intensity")),
    "fpp": frozenset(_COMMON_KEYS + ("replicas", "dist", "n", "window",
                                     "margin", "intensity")),
    "mu": frozenset(_COMMON_KEYS + ("replicas", "dist", "n", "window",
                                    "margin", "intensity")),
    "fluct": frozenset(_COMMON_KEYS + ("replicas", "dist", "n", "window",
                                       "margin", "intensity", "point_seed")),
    "shape": frozenset(_COMMON_KEYS + ("replicas", "dist", "t", "kappa",
                                       "mu_hat", "n_rays", "window", "margin",
                                       "intensity")),
    "perc": frozenset(_COMMON_KEYS + ("replicas", "p", "R", "margin",
                                      "intensity")),
    "pcstar": frozenset(_COMMON_KEYS + ("replicas", "R", "tol", "duality",
                                        "margin", "intensity")),
    "renorm": frozenset(_COMMON_KEYS + ("replicas", "variant", "L", "G", "p",
                                        "l", "margin", "intensity")),
    "animals": frozenset(_COMMON_KEYS + ("replicas", "dist", "s")),
    "paths": frozenset(_COMMON_KEYS + ("replicas", "r", "mode", "L",
                                       "exact_limit", "walks", "margin",
                                       "intensity")),
    "kappa": frozenset(_COMMON_KEYS + ("window", "r", "margin", "intensity")),
    "truncgap": frozenset(_COMMON_KEYS + ("replicas", "dist", "n", "a",
                                          "delta", "window", "margin",
                                          "intensity")),
}

_REQUIRED: Dict[str, tuple] = {
    "gen": ("window",),
    "triangulate": ("window",),
    "fpp": ("dist", "n"),
    "mu": ("dist", "n"),
    "fluct": ("dist", "n"),
    "shape": ("dist", "t", "mu_hat"),
    "perc": ("p", "R"),
    "pcstar": ("R",),
    "renorm": ("L",),
    "animals": ("dist", "s"),
    "paths": ("r",),
    "kappa": ("window", "r"),
    "truncgap": ("dist", "n", "a"),
}


@dataclass
class CampaignConfig:
    """One campaign: a command name plus its typed options.

    Options hold scalars or flat lists exactly as parsed; the accessors
    coerce with the offending key in the message, so validation errors read
    like the config file that caused them.
    """

    command: str
    options: Dict[str, object] = field(default_factory=dict)

    # typed accessors --------------------------------------------------------

    def _fetch(self, key: str, default):
        if key in self.options:
            return self.options[key]
        if default is _MISSING:
            raise ConfigError("%s: missing required key %r"
                              % (self.command, key))
        return default

    def get_float(self, key: str, default=_MISSING) -> Optional[float]:
        v = self._fetch(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError("%r must be a number" % (key,))
        return float(v)

    def get_int(self, key: str, default=_MISSING) -> Optional[int]:
        v = self._fetch(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            if isinstance(v, float) and float(v).is_integer():
                return int(v)
            raise ConfigError("%r must be an integer" % (key,))
        return int(v)

    def get_str(self, key: str, default=_MISSING) -> Optional[str]:
        v = self._fetch(key, default)
        if v is None or isinstance(v, str):
            return v
        raise ConfigError("%r must be a string" % (key,))

    def get_bool(self, key: str, default=_MISSING) -> Optional[bool]:
        v = self._fetch(key, default)
        if v is None or isinstance(v, bool):
            return v
        raise ConfigError("%r must be a boolean" % (key,))

    def floats(self, key: str, default=_MISSING) -> List[float]:
        v = self._fetch(key, default)
        vals = v if isinstance(v, list) else [v]
        if not vals:
            raise ConfigError("%r grid is empty" % (key,))
        out = []
        for x in vals:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError("%r must hold numbers" % (key,))
            out.append(float(x))
        return out

    def ints(self, key: str, default=_MISSING) -> List[int]:
        out = []
        for x in self.floats(key, default):
            if not float(x).is_integer():
                raise ConfigError("%r must hold integers" % (key,))
            out.append(int(x))
        return out

    def dist(self) -> WeightDistribution:
        text = self.get_str("dist")
        try:
            return WeightDistribution.parse(text)
        except WeightError as exc:
            raise ConfigError(str(exc)) from exc

    # resolved fields ---------------------------------------------------------

    @property
    def seed(self) -> int:
        return self.get_int("seed", 0)

    @property
    def replicas(self) -> int:
        return self.get_int("replicas", 1)

    @property
    def out(self) -> str:
        return self.get_str("out", self.command)

    @property
    def threads(self) -> Optional[int]:
        return self.get_int("threads", None)

    def validate(self) -> None:
        """Full check of key set, types, and ranges; raises ConfigError."""
        if self.command not in _ALLOWED:
            raise ConfigError("unknown command %r" % (self.command,))
        allowed = _ALLOWED[self.command]
        for key in self.options:
            if key not in allowed:
                raise ConfigError("%s: unknown key %r" % (self.command, key))
        for key in _REQUIRED[self.command]:
            if key not in self.options:
                raise ConfigError("%s: missing required key %r"
                                  % (self.command, key))
        if not (-2 ** 63 <= self.seed < 2 ** 64):
            raise ConfigError("seed must fit in 64 bits")
        if self.replicas < 1:
            raise ConfigError("replicas must be at least 1")
        threads = self.threads
        if threads is not None and threads < 1:
            raise ConfigError("threads must be at least 1")
        if "intensity" in allowed:
            intensity = self.get_float("intensity", 1.0)
            if intensity <= 0:
                raise ConfigError("intensity must be positive")
        if "margin" in allowed:
            m = self.get_float("margin", None)
            if m is not None and m < 0:
                raise ConfigError("margin must be nonnegative")
        _check_command(self)


def _span_fit(cfg: CampaignConfig, span: float) -> None:
    """An explicit window must leave room for the largest span after the
    margin band on both sides; auto-sized windows always do."""
    side = cfg.get_float("window", None)
    if side is None:
        return
    if side <= 0:
        raise ConfigError("window side must be positive")
    m = cfg.get_float("margin", None)
    m = m if m is not None else side / 8.0
    if span > side - 2.0 * m:
        raise ConfigError("distance %g does not fit window %g with margin %g"
                          % (span, side, m))


def _check_command(cfg: CampaignConfig) -> None:
    c = cfg.command
    if c in ("gen", "triangulate", "kappa"):
        side = cfg.get_float("window")
        if side <= 0:
            raise ConfigError("window side must be positive")
        if 2.0 * cfg.get_float("margin", side / 8.0) >= side:
            raise ConfigError("margins leave no interior")
        if c == "kappa":
            rs = cfg.ints("r")
            if min(rs) < 1 or max(rs) > 10:
                raise ConfigError("step counts must lie in 1..10")
    elif c in ("fpp", "mu", "fluct"):
        cfg.dist()
        grid = cfg.floats("n")
        if min(grid) < 8:
            raise ConfigError("distances must be at least 8")
        if len(set(grid)) != len(grid):
            raise ConfigError("distances must be distinct")
        if c == "fluct":
            if cfg.replicas < 100:
                raise ConfigError("fluct needs at least 100 replicas")
            if len(grid) < 2:
                raise ConfigError("fluct needs at least 2 distances")
            cfg.get_int("point_seed", None)
        _span_fit(cfg, max(grid))
    elif c == "shape":
        cfg.dist()
        if min(cfg.floats("t")) <= 0:
            raise ConfigError("times must be positive")
        kappa = cfg.get_float("kappa", 0.75)
        if not 0.5 < kappa <= 1.0:
            raise ConfigError("kappa must lie in (1/2, 1]")
        if cfg.get_float("mu_hat") <= 0:
            raise ConfigError("mu_hat must be positive")
        if cfg.get_int("n_rays", 64) < 64:
            raise ConfigError("need at least 64 rays")
    elif c == "perc":
        for p in cfg.floats("p"):
            if not 0.0 <= p <= 1.0:
                raise ConfigError("p must lie in [0, 1], got %g" % p)
        if min(cfg.floats("R")) <= 0:
            raise ConfigError("R must be positive")
    elif c == "pcstar":
        if cfg.get_float("R") <= 0:
            raise ConfigError("R must be positive")
        if cfg.get_float("tol", 0.05) < 0.01:
            raise ConfigError("tol below 0.01 is not resolvable")
        cfg.get_bool("duality", False)
    elif c == "renorm":
        if cfg.get_str("variant", "Z") not in ("Y", "Z", "V", "W"):
            raise ConfigError("variant must be one of Y, Z, V, W")
        if min(cfg.floats("L")) <= 0:
            raise ConfigError("box sides must be positive")
        if cfg.get_int("G", 5) < 1:
            raise ConfigError("G must be at least 1")
        p = cfg.get_float("p", 0.9)
        if not 0.0 <= p <= 1.0:
            raise ConfigError("p must lie in [0, 1], got %g" % p)
        sep = cfg.get_int("l", None)
        if sep is not None and sep < 1:
            raise ConfigError("separation l must be at least 1")
    elif c == "animals":
        cfg.dist()
        sizes = cfg.ints("s")
        if min(sizes) < 1 or max(sizes) > 12:
            raise ConfigError("animal sizes must lie in 1..12")
    elif c == "paths":
        mode = cfg.get_str("mode", "walk")
        if mode not in ("walk", "extrema"):
            raise ConfigError("mode must be walk or extrema")
        if mode == "walk":
            if min(cfg.floats("r")) <= 0:
                raise ConfigError("distances must be positive")
        else:
            if min(cfg.ints("r")) < 1:
                raise ConfigError("step bounds must be at least 1")
            if cfg.get_float("L", 1.0) <= 0:
                raise ConfigError("box scale must be positive")
            if cfg.get_int("exact_limit", 9) < 1:
                raise ConfigError("exact_limit must be at least 1")
            if cfg.get_int("walks", 16) < 1:
                raise ConfigError("walks must be at least 1")
    elif c == "truncgap":
        cfg.dist()
        n = cfg.get_int("n")
        if n < 8:
            raise ConfigError("span must be at least 8")
        if cfg.replicas < 2:
            raise ConfigError("truncgap needs at least 2 replicas")
        if cfg.get_float("a") <= 0:
            raise ConfigError("a must be positive")
        if not 0.0 < cfg.get_float("delta", 1.0 / 14.0) < 1.0:
            raise ConfigError("delta must lie in (0, 1)")


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def _instance_window(cfg: CampaignConfig):
    side = cfg.get_float("window")
    margin = cfg.get_float("margin", side / 8.0)
    return Window.square(side, margin), cfg.get_float("intensity", 1.0)


def _run_gen(cfg: CampaignConfig) -> ExperimentResult:
    window, intensity = _instance_window(cfg)
    pts = sample_poisson(window, intensity, derive_seed(cfg.seed, "points"))
    rows = [(i, float(x), float(y))
            for i, (x, y) in enumerate(pts.coords.tolist())]
    return ExperimentResult(
        command="gen",
        params=dict(window_side=window.width, margin=window.margin,
                    intensity=intensity, seed=cfg.seed),
        columns=["index", "x", "y"],
        rows=rows,
        extra=dict(count=len(rows), mean_count=intensity * window.area))


def _run_triangulate(cfg: CampaignConfig) -> ExperimentResult:
    window, intensity = _instance_window(cfg)
    pts = sample_poisson(window, intensity, derive_seed(cfg.seed, "points"))
    graph = build_delaunay(pts)
    deg = np.bincount(graph.edges.ravel(), minlength=graph.n_vertices)
    rows = [(v, float(x), float(y), int(deg[v]))
            for v, (x, y) in enumerate(pts.coords.tolist())]
    n_v, n_e, n_t = graph.n_vertices, len(graph.edges), len(graph.triangles)
    return ExperimentResult(
        command="triangulate",
        params=dict(window_side=window.width, margin=window.margin,
                    intensity=intensity, seed=cfg.seed),
        columns=["vertex", "x", "y", "degree"],
        rows=rows,
        extra=dict(n_vertices=n_v, n_edges=n_e, n_triangles=n_t,
                   v_minus_e_plus_t=n_v - n_e + n_t,
                   mean_degree=float(deg.mean()) if n_v else 0.0))


def _run_fpp(cfg: CampaignConfig) -> ExperimentResult:
    dist = cfg.dist()
    grid = sorted(cfg.floats("n"))
    intensity = cfg.get_float("intensity", 1.0)
    span = max(grid)
    side = cfg.get_float("window", None)
    side = side if side is not None else 2.5 * span
    margin = cfg.get_float("margin", None)
    margin = margin if margin is not None else side / 8.0
    window = Window.square(side, margin)
    x0 = window.lo.x + (window.width - span) / 2.0
    y0 = window.lo.y + window.height / 2.0
    rows = []
    per_n: Dict[float, List[float]] = {n: [] for n in grid}
    for rep in range(cfg.replicas):
        rep_seed = derive_seed(cfg.seed, "replica", rep)
        pts = sample_poisson(window, intensity, derive_seed(rep_seed, "points"))
        graph = build_delaunay(pts)
        weights = assign_weights(graph, dist, derive_seed(rep_seed, "weights"))
        diagram = build_voronoi_dual(graph, window)
        for n in grid:
            res = point_passage_time((x0, y0), (x0 + n, y0),
                                     diagram, graph, weights)
            rows.append((n, rep, res.time, len(res.geodesic) - 1, rep_seed))
            per_n[n].append(res.time)
    cells = [dict(n=n, **mean_ci(per_n[n])) for n in grid]
    return ExperimentResult(
        command="fpp",
        params=dict(dist=str(dist), n_grid=grid, replicas=cfg.replicas,
                    seed=cfg.seed, window_side=side, margin=margin,
                    intensity=intensity),
        columns=["n", "replica", "T", "hops", "seed"],
        rows=rows, cells=cells)


def _run_mu(cfg: CampaignConfig) -> ExperimentResult:
    return estimate_time_constant(
        cfg.dist(), cfg.floats("n"), cfg.replicas, cfg.seed,
        window_side=cfg.get_float("window", None),
        margin=cfg.get_float("margin", None),
        intensity=cfg.get_float("intensity", 1.0))


def _run_fluct(cfg: CampaignConfig) -> ExperimentResult:
    return variance_scaling(
        cfg.dist(), cfg.floats("n"), cfg.replicas, cfg.seed,
        window_side=cfg.get_float("window", None),
        margin=cfg.get_float("margin", None),
        intensity=cfg.get_float("intensity", 1.0),
        point_seed=cfg.get_int("point_seed", None))


def _run_shape(cfg: CampaignConfig) -> ExperimentResult:
    return shape_deviation(
        cfg.dist(), cfg.floats("t"), cfg.get_float("kappa", 0.75),
        cfg.replicas, cfg.seed,
        mu_hat=cfg.get_float("mu_hat"),
        n_rays=cfg.get_int("n_rays", 64),
        window_side=cfg.get_float("window", None),
        margin=cfg.get_float("margin", None),
        intensity=cfg.get_float("intensity", 1.0))


def _run_perc(cfg: CampaignConfig) -> ExperimentResult:
    """Crossing frequency over the p grid at each scale R.

    All probes share the master seed, so within one R the frequencies are
    monotonically coupled across p and any decrease counts as a violation.
    """
    p_grid = sorted(cfg.floats("p"))
    r_grid = sorted(cfg.floats("R"))
    intensity = cfg.get_float("intensity", 1.0)
    margin = cfg.get_float("margin", 6.0)
    rows = []
    cells = []
    violations = 0
    failures = 0
    for R in r_grid:
        prev = None
        for p in p_grid:
            res = estimate_eta(p, R, cfg.replicas, cfg.seed,
                               intensity=intensity, margin=margin)
            rows.extend(res.rows)
            cells.extend(res.cells)
            failures += int(res.extra["geometry_failures"])
            eta = float(res.extra["eta_hat"])
            if prev is not None and eta < prev:
                violations += 1
            prev = eta
    return ExperimentResult(
        command="perc",
        params=dict(p_grid=p_grid, R_grid=r_grid, replicas=cfg.replicas,
                    seed=cfg.seed, intensity=intensity, margin=margin),
        columns=["p", "R", "replica", "crossed", "seed"],
        rows=rows, cells=cells,
        extra=dict(monotone_violations=violations,
                   geometry_failures=failures))


def _run_pcstar(cfg: CampaignConfig) -> ExperimentResult:
    kwargs = dict(intensity=cfg.get_float("intensity", 1.0),
                  margin=cfg.get_float("margin", 6.0))
    R = cfg.get_float("R")
    tol = cfg.get_float("tol", 0.05)
    res = estimate_pc_star(R, cfg.replicas, tol, cfg.seed, **kwargs)
    if cfg.get_bool("duality", False):
        dual = estimate_pc_delaunay(R, cfg.replicas, tol, cfg.seed, **kwargs)
        res.extra = {
            **res.extra,
            "delaunay_midpoint": dual.extra["midpoint"],
            "delaunay_bracket": dual.cells[0],
            "duality_sum": res.extra["midpoint"] + dual.extra["midpoint"],
        }
    return res


def _run_renorm(cfg: CampaignConfig) -> ExperimentResult:
    params = dict(L_grid=cfg.floats("L"),
                  G=cfg.get_int("G", 5),
                  p=cfg.get_float("p", 0.9),
                  intensity=cfg.get_float("intensity", 1.0),
                  margin=cfg.get_float("margin", 6.0))
    sep = cfg.get_int("l", None)
    if sep is not None:
        params["l"] = sep
    return good_box_density_probe(cfg.get_str("variant", "Z"), params,
                                  cfg.replicas, cfg.seed)


def _run_animals(cfg: CampaignConfig) -> ExperimentResult:
    return animal_growth_scan(cfg.dist(), cfg.ints("s"),
                              cfg.replicas, cfg.seed)


def _run_paths(cfg: CampaignConfig) -> ExperimentResult:
    if cfg.get_str("mode", "walk") == "walk":
        return walk_length_scan(cfg.floats("r"), cfg.replicas, cfg.seed,
                                intensity=cfg.get_float("intensity", 1.0),
                                margin=cfg.get_float("margin", 6.0))
    return min_animal_scan(cfg.ints("r"), cfg.get_float("L", 1.0),
                           cfg.replicas, cfg.seed,
                           intensity=cfg.get_float("intensity", 1.0),
                           margin=cfg.get_float("margin", 4.0),
                           exact_limit=cfg.get_int("exact_limit", 9),
                           sample_walks=cfg.get_int("walks", 16))


def _run_kappa(cfg: CampaignConfig) -> ExperimentResult:
    window, intensity = _instance_window(cfg)
    pts = sample_poisson(window, intensity, derive_seed(cfg.seed, "points"))
    graph = build_delaunay(pts)
    center = window.center
    v = nearest_vertex(pts, center.x, center.y)
    res = kappa_table(graph, v, cfg.ints("r"))
    res.params = {**res.params, "window_side": window.width,
                  "margin": window.margin, "intensity": intensity,
                  "seed": cfg.seed, "vertex": v}
    res.extra = {**res.extra, "n_vertices": graph.n_vertices}
    return res


def _run_truncgap(cfg: CampaignConfig) -> ExperimentResult:
    return truncation_gap(
        cfg.dist(), cfg.get_int("n"), cfg.get_float("a"),
        cfg.replicas, cfg.seed,
        delta=cfg.get_float("delta", 1.0 / 14.0),
        window_side=cfg.get_float("window", None),
        margin=cfg.get_float("margin", None),
        intensity=cfg.get_float("intensity", 1.0))


_RUNNERS = {
    "gen": _run_gen,
    "triangulate": _run_triangulate,
    "fpp": _run_fpp,
    "mu": _run_mu,
    "fluct": _run_fluct,
    "shape": _run_shape,
    "perc": _run_perc,
    "pcstar": _run_pcstar,
    "renorm": _run_renorm,
    "animals": _run_animals,
    "paths": _run_paths,
    "kappa": _run_kappa,
    "truncgap": _run_truncgap,
}


# ---------------------------------------------------------------------------
# manifest and orchestration
# ---------------------------------------------------------------------------

def _code_version() -> str:
    from . import __version__
    return __version__


@dataclass
class RunManifest:
    """Everything needed to reproduce a campaign byte for byte.

    The config echo holds the effective options after command-line
    overrides; replica_seeds are the derived per-replica stream roots, so
    any single replica can be recomputed without rerunning the campaign.
    """

    command: str
    config: Dict[str, object]
    code_version: str
    schema: str
    replica_seeds: List[int]
    wall_clock_s: float
    outputs: Dict[str, str]

    def to_json(self, path: str) -> None:
        payload = {
            "schema": self.schema,
            "command": self.command,
            "config": self.config,
            "code_version": self.code_version,
            "replica_seeds": self.replica_seeds,
            "wall_clock_s": self.wall_clock_s,
            "outputs": self.outputs,
        }
        with open(path, "w", encoding="utf-8", newline="") as f:
            json.dump(payload, f, sort_keys=True, indent=2)
            f.write("\n")


def run_campaign(config: CampaignConfig) -> int:
    """Validate, execute, and write <out>.csv, <out>.json, <out>.manifest.json.

    Returns the process exit status: 0 done, 2 config rejected before any
    file was touched, 3 the computation or the output write failed.
    """
    try:
        config.validate()
    except ConfigError as exc:
        print("config error: %s" % (exc,), file=sys.stderr)
        return 2
    env_threads = "FPPDT_THREADS" in os.environ
    if config.threads is not None and not env_threads:
        # the environment variable, when set, wins over the config key
        os.environ["FPPDT_THREADS"] = str(config.threads)
    t0 = time.perf_counter()
    try:
        result = _RUNNERS[config.command](config)
        wall = time.perf_counter() - t0
        prefix = config.out
        parent = os.path.dirname(prefix)
        if parent:
            os.makedirs(parent, exist_ok=True)
        outputs = {"csv": prefix + ".csv",
                   "summary": prefix + ".json",
                   "manifest": prefix + ".manifest.json"}
        result.to_csv(outputs["csv"])
        result.to_json(outputs["summary"])
        echo = dict(config.options)
        echo.update(command=config.command, seed=config.seed,
                    replicas=config.replicas, out=config.out)
        RunManifest(
            command=config.command,
            config=echo,
            code_version=_code_version(),
            schema=SCHEMA,
            replica_seeds=[derive_seed(config.seed, "replica", i)
                           for i in range(config.replicas)],
            wall_clock_s=wall,
            outputs=outputs,
        ).to_json(outputs["manifest"])
    except Exception as exc:
        print("%s failed: %s" % (config.command, exc), file=sys.stderr)
        return 3
    finally:
        if config.threads is not None and not env_threads:
            os.environ.pop("FPPDT_THREADS", None)
    print("%s: %d rows -> %s" % (config.command, len(result.rows),
                                 outputs["csv"]))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_COMMAND_HELP = {
    "gen": "sample a Poisson configuration and write its points",
    "triangulate": "triangulate a sample and report graph statistics",
    "fpp": "passage times and geodesic hop counts between anchored points",
    "mu": "time-constant estimate from T(0, n) over a distance grid",
    "fluct": "variance of T(0, n) and its log-log growth rate",
    "shape": "directional radii of the reached set against the limit disk",
    "perc": "coupled dual crossing frequencies over a p grid",
    "pcstar": "bisection bracket for the dual crossing threshold",
    "renorm": "good-box densities and the dependence-range correlation",
    "animals": "greedy animal growth per size cap",
    "paths": "segment-walk lengths or path-animal extrema",
    "kappa": "self-avoiding path counts on one instance",
    "truncgap": "coupling gap from truncating tails and thin regions",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fppdt",
        description="first-passage percolation campaigns on Delaunay "
                    "triangulations of planar Poisson samples")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")
    for name, blurb in _COMMAND_HELP.items():
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", metavar="FILE",
                       help="flat key=value parameter file")
        p.add_argument("--seed", type=int,
                       help="master seed, overrides the config")
        p.add_argument("--out", metavar="PREFIX", help="output path prefix")
        p.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="KEY=VALUE", help="override one config key")
    return parser


def _config_from_args(args: argparse.Namespace) -> CampaignConfig:
    options: Dict[str, object] = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError("cannot read %s: %s" % (args.config, exc)) from exc
        options = parse_config(text)
    named = options.pop("command", None)
    if named is not None and named != args.command:
        raise ConfigError("config is for %r, invoked as %r"
                          % (named, args.command))
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError("--set needs KEY=VALUE, got %r" % (item,))
        key, _, value = item.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError("bad key %r" % (key,))
        options[key] = parse_value(value)
    if args.seed is not None:
        options["seed"] = args.seed
    if args.out is not None:
        options["out"] = args.out
    return CampaignConfig(args.command, options)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print("config error: %s" % (exc,), file=sys.stderr)
        return 2
    return run_campaign(config)


if __name__ == "__main__":
    sys.exit(main())
