"""First-passage times on weighted Delaunay graphs, and the Monte Carlo
campaigns that estimate the time constant, fluctuation scaling, and the
limit-shape behavior built on top of them.

Passage times returned by first_passage_time / reached_set are exact: float64
weights are dyadic rationals, so all weights are rescaled by their common
power-of-two denominator and the label-setting search runs in integer
arithmetic. The reported float time is the correctly rounded value of the
exact minimum, which makes the metric identities (symmetry, triangle
inequality) hold under exact comparison and makes geodesic tie detection
meaningful rather than a rounding accident. The statistical campaigns use a
compiled float shortest-path engine instead; estimators do not need exact
sums, and each replica is a pure function of its derived seed, so outputs
are byte-reproducible at any thread count.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from .experiment import (
    ExperimentResult,
    derive_seed,
    ls_fit,
    mean_ci,
    parallel_map,
)
from .geometry import (
    DelaunayGraph,
    PointSet,
    VoronoiDiagram,
    Window,
    build_delaunay,
    locate_tile,
    nearest_vertex,
    sample_poisson,
    truncated_process,
)
from .weights import EdgeWeights, WeightDistribution, assign_weights, truncate_weights


class FPPError(ValueError):
    """Invalid passage-time query or campaign parameters."""


# ---------------------------------------------------------------------------
# exact passage times
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PassageResult:
    """Minimal passage time and the canonical geodesic attaining it.

    time is the correctly rounded float of the exact minimum; the exact value
    itself is kept as _numerator / _denominator for exact comparisons. The
    geodesic is self-avoiding and, among all optimal paths, lexicographically
    smallest as a vertex sequence. time == math.fsum of the geodesic's
    weights (fsum is exactly rounded, so the accumulation order is fixed by
    definition).
    """

    time: float
    geodesic: List[int]
    _numerator: int = field(default=0, repr=False)
    _denominator: int = field(default=1, repr=False)

    @property
    def exact_time(self) -> Fraction:
        return Fraction(self._numerator, self._denominator)


@dataclass(frozen=True)
class ReachedSet:
    """Vertices whose passage time from the source is at most the horizon."""

    horizon: float
    vertices: frozenset

    def __contains__(self, v: int) -> bool:
        return v in self.vertices

    def __len__(self) -> int:
        return len(self.vertices)


def _exact_int_weights(weights: EdgeWeights) -> Tuple[List[int], int]:
    """Rescale float weights to exact integers over a shared power-of-two
    denominator; cached on the weight object."""
    cache = getattr(weights, "_int_cache", None)
    if cache is not None:
        return cache
    fracs = [Fraction(float(v)) for v in weights.values]
    den = 1
    for f in fracs:
        if f.denominator > den:
            den = f.denominator
    iw = [f.numerator * (den // f.denominator) for f in fracs]
    weights._int_cache = (iw, den)
    return iw, den


def _dijkstra_exact(graph: DelaunayGraph, iw: List[int], source: int) -> List[Optional[int]]:
    """Label-setting shortest-path in integer arithmetic; exact by construction."""
    n = graph.n_vertices
    indptr, tails, eids = graph._adjacency()
    dist: List[Optional[int]] = [None] * n
    heap: List[Tuple[int, int]] = [(0, source)]
    while heap:
        dv, v = heapq.heappop(heap)
        if dist[v] is not None:
            continue
        dist[v] = dv
        for k in range(indptr[v], indptr[v + 1]):
            u = int(tails[k])
            if dist[u] is None:
                heapq.heappush(heap, (dv + iw[eids[k]], u))
    return dist


def _tight_walk(graph: DelaunayGraph, iw: List[int], dist: List[int],
                source: int, target: int) -> Tuple[List[int], bool]:
    """Lexicographically smallest geodesic via greedy tight-edge descent.

    An edge (c, x) is tight when dist[c] == w(c,x) + dist[x] (dist measured to
    the target); every tight step continues some geodesic. With zero weights
    present, tight cycles exist, so each step additionally requires that the
    target stays reachable through tight edges avoiding the visited prefix.
    """
    indptr, tails, eids = graph._adjacency()
    has_zero = any(w == 0 for w in iw)
    path = [source]
    visited: Set[int] = {source}
    ties = False
    c = source
    guard = graph.n_vertices + 1
    while c != target and guard:
        guard -= 1
        allowed = None
        if has_zero:
            # reverse reachability of target in the tight graph minus visited
            allowed = {target}
            stack = [target]
            while stack:
                b = stack.pop()
                for k in range(indptr[b], indptr[b + 1]):
                    a = int(tails[k])
                    if a in allowed or a in visited:
                        continue
                    if dist[a] == iw[eids[k]] + dist[b]:
                        allowed.add(a)
                        stack.append(a)
        chosen = None
        branches = 0
        for k in range(indptr[c], indptr[c + 1]):
            x = int(tails[k])
            if x in visited:
                continue
            if dist[c] != iw[eids[k]] + dist[x]:
                continue
            if allowed is not None and x != target and x not in allowed:
                continue
            branches += 1
            if chosen is None or x < chosen:
                chosen = x
        if branches >= 2:
            ties = True
        if chosen is None:
            raise FPPError("tight-edge walk lost the geodesic (graph inconsistency)")
        path.append(chosen)
        visited.add(chosen)
        c = chosen
    if not guard:
        raise FPPError("geodesic walk exceeded the vertex budget")
    return path, ties


def _passage_with_ties(graph: DelaunayGraph, weights: EdgeWeights,
                       u: int, v: int) -> Tuple[PassageResult, bool]:
    n = graph.n_vertices
    if not (0 <= u < n and 0 <= v < n):
        raise FPPError("vertex index out of range")
    iw, den = _exact_int_weights(weights)
    if u == v:
        return PassageResult(0.0, [u], 0, den), False
    dist = _dijkstra_exact(graph, iw, v)
    if dist[u] is None:
        raise FPPError("vertices are disconnected")
    path, ties = _tight_walk(graph, iw, dist, u, v)
    num = dist[u]
    return PassageResult(num / den, path, num, den), ties


def first_passage_time(graph: DelaunayGraph, weights: EdgeWeights,
                       u: int, v: int) -> PassageResult:
    """Exact minimal passage time between two vertices.

    The minimum runs over all paths (equivalently all self-avoiding paths,
    weights being nonnegative); ties among geodesics are broken by the
    lexicographically smallest vertex sequence.
    """
    res, _ = _passage_with_ties(graph, weights, u, v)
    return res


def point_passage_time(x, y, diagram: VoronoiDiagram, graph: DelaunayGraph,
                       weights: EdgeWeights) -> PassageResult:
    """Passage time between planar points: T(x, y) = T(v(x), v(y)) where v(.)
    is the generator of the containing Voronoi tile."""
    return first_passage_time(graph, weights,
                              locate_tile(x, diagram), locate_tile(y, diagram))


def reached_set(graph: DelaunayGraph, weights: EdgeWeights,
                source: int, t: float) -> ReachedSet:
    """All vertices with exact passage time from source at most t."""
    if not t >= 0:
        raise FPPError("horizon must be nonnegative")
    if not (0 <= source < graph.n_vertices):
        raise FPPError("vertex index out of range")
    iw, den = _exact_int_weights(weights)
    dist = _dijkstra_exact(graph, iw, source)
    ft = Fraction(float(t))
    verts = frozenset(v for v, d in enumerate(dist)
                      if d is not None and d * ft.denominator <= ft.numerator * den)
    return ReachedSet(float(t), verts)


# ---------------------------------------------------------------------------
# float campaign engine
# ---------------------------------------------------------------------------

def _float_distances(graph: DelaunayGraph, values: np.ndarray, source: int,
                     limit: Optional[float] = None) -> np.ndarray:
    """Compiled single-source shortest-path distances (float64).

    With a limit, vertices farther than it come back as inf; callers that
    only threshold at horizons <= limit lose nothing.
    """
    from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

    mat = graph.csr_graph(np.asarray(values, dtype=float))
    d = _csgraph_dijkstra(mat, directed=True, indices=[source],
                          limit=np.inf if limit is None else float(limit))
    return d[0]


def _campaign_window(span: float, window_side: Optional[float],
                     margin: Optional[float]) -> Window:
    side = float(window_side) if window_side is not None else 2.5 * span
    m = float(margin) if margin is not None else side / 8.0
    w = Window.square(side, m)
    if span > side - 2.0 * m:
        raise FPPError("distance does not fit the window minus its margin")
    return w


def _anchor(window: Window, span: float) -> Tuple[float, float]:
    """Left endpoint of a horizontal span centered on the window midline."""
    return (window.lo.x + (window.width - span) / 2.0,
            window.lo.y + window.height / 2.0)


def _replica_seed(master: int, rep: int) -> int:
    return derive_seed(master, "replica", rep)


def _replica_instance(rep_seed: int, dist: WeightDistribution, window: Window,
                      intensity: float, point_seed: Optional[int] = None):
    gseed = point_seed if point_seed is not None else derive_seed(rep_seed, "points")
    wseed = derive_seed(rep_seed, "weights")
    ps = sample_poisson(window, intensity, gseed)
    g = build_delaunay(ps)
    wt = assign_weights(g, dist, wseed)
    return ps, g, wt


def _span_times(master: int, rep: int, dist: WeightDistribution,
                n_grid: Sequence[float], window: Window, intensity: float,
                point_seed: Optional[int] = None) -> Tuple[List[float], int]:
    """One replica: all T(0, n) on the grid from a single source distance map."""
    rep_seed = _replica_seed(master, rep)
    ps, g, wt = _replica_instance(rep_seed, dist, window, intensity, point_seed)
    n_max = max(n_grid)
    x0, y0 = _anchor(window, n_max)
    src = nearest_vertex(ps, x0, y0)
    d = _float_distances(g, wt.values, src)
    times = []
    for n in n_grid:
        tv = nearest_vertex(ps, x0 + float(n), y0)
        times.append(float(d[tv]))
    return times, rep_seed


def _check_grid(n_grid: Sequence[float]) -> List[float]:
    grid = [float(n) for n in n_grid]
    if not grid:
        raise FPPError("empty distance grid")
    if any(n < 8 for n in grid):
        raise FPPError("grid distances must be at least 8")
    if len(set(grid)) != len(grid):
        raise FPPError("grid distances must be distinct")
    return grid


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------

def estimate_time_constant(dist: WeightDistribution, n_grid: Sequence[float],
                           replicas: int, seed: int, *,
                           window_side: Optional[float] = None,
                           margin: Optional[float] = None,
                           intensity: float = 1.0) -> ExperimentResult:
    """Sample means of T(0, n)/n over a distance grid.

    The reported time-constant estimate mu_hat is the mean at the largest
    grid distance: the per-n means decrease toward the limit, so the largest
    n is the least biased desk-scale proxy.
    """
    grid = _check_grid(n_grid)
    if replicas < 1:
        raise FPPError("need at least one replica")
    window = _campaign_window(max(grid), window_side, margin)
    results = parallel_map(
        lambda rep: _span_times(seed, rep, dist, grid, window, intensity),
        replicas)
    rows = []
    for rep, (times, rep_seed) in enumerate(results):
        for n, t in zip(grid, times):
            rows.append((n, rep, t, rep_seed))
    cells = []
    ratio_means = []
    for i, n in enumerate(grid):
        stats = mean_ci([results[rep][0][i] / n for rep in range(replicas)])
        cells.append({"n": n, **stats})
        ratio_means.append(stats["mean"])
    top = max(range(len(grid)), key=lambda i: grid[i])
    extra = {
        "mu_hat": cells[top]["mean"],
        "mu_ci_low": cells[top]["ci_low"],
        "mu_ci_high": cells[top]["ci_high"],
        "ratio_means": ratio_means,
    }
    return ExperimentResult(
        command="time-constant",
        params={"dist": str(dist), "n_grid": grid, "replicas": replicas,
                "seed": seed, "window_side": window.width,
                "margin": window.margin, "intensity": intensity},
        columns=["n", "replica", "T", "seed"],
        rows=rows, cells=cells, extra=extra)


def variance_scaling(dist: WeightDistribution, n_grid: Sequence[float],
                     replicas: int, seed: int, *,
                     window_side: Optional[float] = None,
                     margin: Optional[float] = None,
                     intensity: float = 1.0,
                     point_seed: Optional[int] = None) -> ExperimentResult:
    """Sample variance of T(0, n) per grid point and the log-log slope.

    point_seed freezes the geometry across replicas (weights still vary);
    with a deterministic weight law that makes every replica identical and
    the variance exactly zero.
    """
    grid = _check_grid(n_grid)
    if replicas < 100:
        raise FPPError("variance scaling needs at least 100 replicas")
    if len(grid) < 2:
        raise FPPError("variance scaling needs at least 2 grid distances")
    window = _campaign_window(max(grid), window_side, margin)
    results = parallel_map(
        lambda rep: _span_times(seed, rep, dist, grid, window, intensity, point_seed),
        replicas)
    rows = []
    for rep, (times, rep_seed) in enumerate(results):
        for n, t in zip(grid, times):
            rows.append((n, rep, t, rep_seed))
    cells = []
    for i, n in enumerate(grid):
        stats = mean_ci([results[rep][0][i] for rep in range(replicas)])
        cells.append({"n": n, **stats})
    fits = {}
    variances = [c["var"] for c in cells]
    if len(grid) >= 3 and all(v > 0 for v in variances):
        fits["log_variance_vs_log_n"] = ls_fit(
            [math.log(n) for n in grid], [math.log(v) for v in variances])
    return ExperimentResult(
        command="variance-scaling",
        params={"dist": str(dist), "n_grid": grid, "replicas": replicas,
                "seed": seed, "window_side": window.width,
                "margin": window.margin, "intensity": intensity,
                "point_seed": point_seed},
        columns=["n", "replica", "T", "seed"],
        rows=rows, cells=cells, fits=fits)


def concentration_profile(dist: WeightDistribution, n: float, kappa: float,
                          replicas: int, seed: int, *,
                          r_grid: Optional[Sequence[float]] = None,
                          window_side: Optional[float] = None,
                          margin: Optional[float] = None,
                          intensity: float = 1.0,
                          point_seed: Optional[int] = None) -> ExperimentResult:
    """Empirical tail table P(|T(0,n) - mean| >= r * n^kappa) over a grid of r.

    Both candidate tail exponents are reported alongside, without fitting:
    (4*kappa - 2)/7, and 4*d/(1 + 7*d) with d = (2*kappa - 1)/7. No
    adjudication between them is attempted.
    """
    if not (0.5 < kappa <= 1.0):
        raise FPPError("kappa must lie in (1/2, 1]")
    if replicas < 50:
        raise FPPError("too few replicas for a tail table")
    grid = _check_grid([n])
    rs = [float(r) for r in (r_grid if r_grid is not None
                             else (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0))]
    if any(r < 0 for r in rs):
        raise FPPError("r grid must be nonnegative")
    window = _campaign_window(grid[0], window_side, margin)
    results = parallel_map(
        lambda rep: _span_times(seed, rep, dist, grid, window, intensity, point_seed),
        replicas)
    times = np.array([res[0][0] for res in results])
    center = float(times.mean())
    scale = grid[0] ** kappa
    rows = [(grid[0], rep, float(times[rep]), results[rep][1])
            for rep in range(replicas)]
    cells = []
    for r in sorted(rs):
        freq = float((np.abs(times - center) >= r * scale).mean())
        cells.append({"r": r, "frequency": freq, "count": replicas})
    delta = (2.0 * kappa - 1.0) / 7.0
    extra = {
        "n": grid[0], "kappa": kappa, "center": center,
        "nu_stated": (4.0 * kappa - 2.0) / 7.0,
        "delta": delta,
        "nu_derived": 4.0 * delta / (1.0 + 7.0 * delta),
    }
    return ExperimentResult(
        command="concentration",
        params={"dist": str(dist), "n": grid[0], "kappa": kappa,
                "replicas": replicas, "seed": seed,
                "window_side": window.width, "margin": window.margin,
                "intensity": intensity, "r_grid": sorted(rs),
                "point_seed": point_seed},
        columns=["n", "replica", "T", "seed"],
        rows=rows, cells=cells, extra=extra)


def shape_deviation(dist: WeightDistribution, t_grid: Sequence[float],
                    kappa: float, replicas: int, seed: int, *,
                    mu_hat: float,
                    n_rays: int = 64,
                    window_side: Optional[float] = None,
                    margin: Optional[float] = None,
                    intensity: float = 1.0) -> ExperimentResult:
    """Directional-radius band check of the reached set against the disk.

    For each horizon t, the boundary radius of the reached set is measured on
    n_rays directions as the maximal projection of reached tile centers onto
    the ray (support function), from the source tile center; the reported
    fraction counts radii inside [(t - t^kappa)/mu_hat, (t + t^kappa)/mu_hat].
    """
    if not mu_hat > 0:
        raise FPPError("shape comparison needs a previously estimated mu_hat > 0")
    if not (0.5 < kappa <= 1.0):
        raise FPPError("kappa must lie in (1/2, 1]")
    if n_rays < 64:
        raise FPPError("need at least 64 rays")
    ts = sorted(float(t) for t in t_grid)
    if not ts or ts[0] < 0:
        raise FPPError("horizons must be nonnegative")
    t_max = ts[-1]
    r_max = (t_max + t_max ** kappa) / mu_hat
    m = float(margin) if margin is not None else 6.0
    # growth is radial, so the instance only needs the disc of radius
    # half-side minus margin around the source: the clip radius must clear
    # the upper band edge, at which point a clipped radius reads above
    # band_high and lands out of band on the same side the unclipped value
    # would
    side = (float(window_side) if window_side is not None
            else 2.0 * (1.025 * r_max + m + 1.0))
    window = Window.square(side, m)
    cut = max(side / 2.0 - m, m)
    if cut < 1.02 * r_max:
        raise FPPError("horizon too large for the window")
    rays = np.stack([np.cos(2 * np.pi * np.arange(n_rays) / n_rays),
                     np.sin(2 * np.pi * np.arange(n_rays) / n_rays)], axis=1)

    def one(rep: int):
        rep_seed = _replica_seed(seed, rep)
        gseed = derive_seed(rep_seed, "points")
        wseed = derive_seed(rep_seed, "weights")
        cx, cy = window.center
        rng = np.random.default_rng(gseed & 0xFFFFFFFFFFFFFFFF)
        count = int(rng.poisson(intensity * math.pi * cut * cut))
        rad = cut * np.sqrt(rng.uniform(0.0, 1.0, count))
        ang = rng.uniform(0.0, 2.0 * np.pi, count)
        ps = PointSet(np.column_stack([cx + rad * np.cos(ang),
                                       cy + rad * np.sin(ang)]), window)
        g = build_delaunay(ps)
        wt = assign_weights(g, dist, wseed)
        src = int(np.argmin(rad))
        d = _float_distances(g, wt.values, src, limit=t_max)
        rel = ps.coords - ps.coords[src]
        out = []
        for t in ts:
            sub = rel[d <= t]
            radii = np.full(n_rays, -np.inf)
            for k0 in range(0, len(sub), 262144):
                np.maximum(radii, (sub[k0:k0 + 262144] @ rays.T).max(axis=0),
                           out=radii)
            out.append(radii)
        return out, rep_seed

    results = parallel_map(one, replicas)
    rows = []
    cells = []
    for i, t in enumerate(ts):
        lo = (t - t ** kappa) / mu_hat
        hi = (t + t ** kappa) / mu_hat
        fracs = []
        for rep in range(replicas):
            radii, rep_seed = results[rep][0][i], results[rep][1]
            inband = (radii >= lo) & (radii <= hi)
            fracs.append(float(inband.mean()))
            for k in range(n_rays):
                rows.append((t, rep, k, float(radii[k]), int(inband[k]), rep_seed))
        cells.append({"t": t, "band_low": lo, "band_high": hi,
                      **mean_ci(fracs)})
    return ExperimentResult(
        command="shape",
        params={"dist": str(dist), "t_grid": ts, "kappa": kappa,
                "replicas": replicas, "seed": seed, "mu_hat": mu_hat,
                "n_rays": n_rays, "window_side": window.width,
                "margin": window.margin, "intensity": intensity},
        columns=["t", "replica", "ray", "radius", "in_band", "seed"],
        rows=rows, cells=cells)


def subadditivity_check(dist: WeightDistribution, n_grid: Sequence[float],
                        replicas: int, seed: int, *,
                        window_side: Optional[float] = None,
                        margin: Optional[float] = None,
                        intensity: float = 1.0) -> ExperimentResult:
    """Paired doubling gaps E T(0,2n) - 2 E T(0,n) and ratio excesses over the
    largest-n mean, with CIs.

    The grid must contain at least one (n, 2n) pair; all times per replica
    come from one shared source map, so the gaps are paired statistics.
    """
    grid = _check_grid(n_grid)
    pairs = [(n, 2 * n) for n in grid if 2 * n in grid]
    if not pairs:
        raise FPPError("grid contains no (n, 2n) pair")
    window = _campaign_window(max(grid), window_side, margin)
    results = parallel_map(
        lambda rep: _span_times(seed, rep, dist, grid, window, intensity),
        replicas)
    idx = {n: i for i, n in enumerate(grid)}
    rows = []
    for rep, (times, rep_seed) in enumerate(results):
        for n, t in zip(grid, times):
            rows.append((n, rep, t, rep_seed))
    cells = []
    for n, n2 in pairs:
        gaps = [results[rep][0][idx[n2]] - 2.0 * results[rep][0][idx[n]]
                for rep in range(replicas)]
        cells.append({"kind": "doubling_gap", "n": n, **mean_ci(gaps)})
    n_top = max(grid)
    for n in grid:
        if n == n_top:
            continue
        ex = [results[rep][0][idx[n]] / n - results[rep][0][idx[n_top]] / n_top
              for rep in range(replicas)]
        cells.append({"kind": "ratio_excess", "n": n, **mean_ci(ex)})
    return ExperimentResult(
        command="subadditivity",
        params={"dist": str(dist), "n_grid": grid, "replicas": replicas,
                "seed": seed, "window_side": window.width,
                "margin": window.margin, "intensity": intensity},
        columns=["n", "replica", "T", "seed"],
        rows=rows, cells=cells)


def geodesic_uniqueness_probe(dist: WeightDistribution, n: float,
                              replicas: int, seed: int, *,
                              window_side: Optional[float] = None,
                              margin: Optional[float] = None,
                              intensity: float = 1.0) -> ExperimentResult:
    """Frequency of exact geodesic ties over random instances.

    A replica counts as tied when the canonical geodesic walk sees at least
    two continuable optimal branches anywhere, which happens if and only if
    two distinct geodesics attain the exact minimum. Comparisons run in exact
    arithmetic, so continuous laws report ties only on genuine coincidences.
    """
    if n < 8:
        raise FPPError("span must be at least 8")
    if replicas < 1:
        raise FPPError("need at least one replica")
    window = _campaign_window(float(n), window_side, margin)

    def one(rep: int):
        rep_seed = _replica_seed(seed, rep)
        ps, g, wt = _replica_instance(rep_seed, dist, window, intensity)
        x0, y0 = _anchor(window, float(n))
        u = nearest_vertex(ps, x0, y0)
        v = nearest_vertex(ps, x0 + float(n), y0)
        _, tied = _passage_with_ties(g, wt, u, v)
        return int(tied), rep_seed

    results = parallel_map(one, replicas)
    rows = [(float(n), rep, results[rep][0], results[rep][1])
            for rep in range(replicas)]
    freq = float(np.mean([r[0] for r in results]))
    cells = [{"n": float(n), "tie_frequency": freq, "count": replicas}]
    return ExperimentResult(
        command="uniqueness",
        params={"dist": str(dist), "n": float(n), "replicas": replicas,
                "seed": seed, "window_side": window.width,
                "margin": window.margin, "intensity": intensity},
        columns=["n", "replica", "tied", "seed"],
        rows=rows, cells=cells, extra={"tie_frequency": freq})


# ---------------------------------------------------------------------------
# truncation coupling
# ---------------------------------------------------------------------------

def _splitmix_vec(h: np.ndarray) -> np.ndarray:
    h = h.astype(np.uint64, copy=True)
    h ^= h >> np.uint64(30)
    h *= np.uint64(0xBF58476D1CE4E5B9)
    h ^= h >> np.uint64(27)
    h *= np.uint64(0x94D049BB133111EB)
    h ^= h >> np.uint64(31)
    return h


def coupled_edge_weights(graph: DelaunayGraph, dist: WeightDistribution,
                         seed: int) -> EdgeWeights:
    """Weights keyed by endpoint coordinates instead of vertex indices.

    An edge present in two different triangulations (same endpoint
    coordinates) receives the identical weight under the identical seed; this
    couples a configuration with its regularized copy edge-for-edge.
    """
    c = graph.vertices.coords
    bits = c.copy().view(np.uint64)
    e = graph.edges
    a = bits[e[:, 0]]
    b = bits[e[:, 1]]
    # canonical endpoint order by coordinate so the key is index-free
    swap = (a[:, 0] > b[:, 0]) | ((a[:, 0] == b[:, 0]) & (a[:, 1] > b[:, 1]))
    a2 = np.where(swap[:, None], b, a)
    b2 = np.where(swap[:, None], a, b)
    h = np.full(len(e), derive_seed(seed, "coupled-weights"), dtype=np.uint64)
    for col in (a2[:, 0], a2[:, 1], b2[:, 0], b2[:, 1]):
        h = _splitmix_vec(h ^ col)
    u = (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    return EdgeWeights(graph, dist.quantile(u))


def truncation_gap(dist: WeightDistribution, n: int, a: float,
                   replicas: int, seed: int, *,
                   delta: float = 1.0 / 14.0,
                   window_side: Optional[float] = None,
                   margin: Optional[float] = None,
                   intensity: float = 1.0) -> ExperimentResult:
    """Distribution of |T_n - T_trunc| under the regularizing coupling.

    T_n is the passage time over span n on the raw configuration; T_trunc
    uses the regularized point process and weights capped at 8 log(n)/a.
    Shared edges carry identical weights (coordinate-keyed draws), so the gap
    is exactly zero whenever the regularization changes nothing.
    """
    if n < 8:
        raise FPPError("span must be at least 8")
    if replicas < 2:
        raise FPPError("need at least two replicas")
    window = _campaign_window(float(n), window_side, margin)

    def one(rep: int):
        rep_seed = _replica_seed(seed, rep)
        gseed = derive_seed(rep_seed, "points")
        cseed = derive_seed(rep_seed, "weights")
        fseed = derive_seed(rep_seed, "fill")
        ps = sample_poisson(window, intensity, gseed)
        ps_n = truncated_process(ps, n, delta, seed=fseed)
        g = build_delaunay(ps)
        g_n = build_delaunay(ps_n)
        wt = coupled_edge_weights(g, dist, cseed)
        wt_n = truncate_weights(coupled_edge_weights(g_n, dist, cseed), n, a)
        x0, y0 = _anchor(window, float(n))
        t_full = float(_float_distances(g, wt.values, nearest_vertex(ps, x0, y0))
                       [nearest_vertex(ps, x0 + float(n), y0)])
        t_trunc = float(_float_distances(g_n, wt_n.values, nearest_vertex(ps_n, x0, y0))
                        [nearest_vertex(ps_n, x0 + float(n), y0)])
        return t_full, t_trunc, rep_seed

    results = parallel_map(one, replicas)
    rows = [(int(n), rep, tf, tt, abs(tf - tt), rs)
            for rep, (tf, tt, rs) in enumerate(results)]
    gaps = [abs(tf - tt) for tf, tt, _ in results]
    sq = mean_ci([g * g for g in gaps])
    cells = [{"n": int(n), "mean_square_gap": sq["mean"],
              "ci_low": sq["ci_low"], "ci_high": sq["ci_high"],
              "count": replicas, "mean": sq["mean"], "var": sq["var"]}]
    return ExperimentResult(
        command="truncation-gap",
        params={"dist": str(dist), "n": int(n), "a": float(a),
                "delta": delta, "replicas": replicas, "seed": seed,
                "window_side": window.width, "margin": window.margin,
                "intensity": intensity},
        columns=["n", "replica", "T_full", "T_trunc", "gap", "seed"],
        rows=rows, cells=cells,
        extra={"mean_square_gap": sq["mean"],
               "ci_low": sq["ci_low"], "ci_high": sq["ci_high"]})
