"""Bond percolation on the Voronoi dual graph.

Open/closed marks live on the dual edges of a Delaunay triangulation
(equivalently, on the shared borders of adjacent Voronoi cells).  The module
decides rectangle crossings by open dual paths, estimates the crossing
probability and its p-threshold, detects open circuits in annuli, and
classifies renormalized grid boxes as good or bad under several definitions.

Hull-adjacent dual edges are excluded from every percolation universe: their
geometry is an artifact of the sampling window.
"""

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .experiment import (ExperimentResult, derive_seed, mean_ci, parallel_map)
from .geometry import (BoxGrid, DelaunayGraph, GeometryError, PointSet,
                       VoronoiDiagram, Window, build_delaunay,
                       build_voronoi_dual, sample_poisson, seg_seg_intersect,
                       seg_intersects_rect)

_SEED_MASK = (1 << 64) - 1


class PercolationError(ValueError):
    """Invalid percolation input or a failed bracket search."""


# ----------------------------------------------------------------------------
# bond configurations
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class BondConfiguration:
    """Open/closed marks on the dual (interior) edges of a triangulation.

    ``edge_ids`` indexes into ``graph.edges`` and must list interior edges
    only; ``open`` is the aligned boolean mark vector.
    """

    graph: DelaunayGraph
    edge_ids: np.ndarray
    open: np.ndarray

    def __post_init__(self):
        eids = np.ascontiguousarray(np.asarray(self.edge_ids, dtype=np.int64))
        marks = np.ascontiguousarray(np.asarray(self.open, dtype=bool))
        if eids.ndim != 1 or marks.shape != eids.shape:
            raise PercolationError("edge ids and open marks must align")
        if eids.size:
            if eids.min() < 0 or eids.max() >= len(self.graph.edges):
                raise PercolationError("edge id out of range")
        eids.setflags(write=False)
        marks.setflags(write=False)
        object.__setattr__(self, "edge_ids", eids)
        object.__setattr__(self, "open", marks)

    @property
    def n_open(self) -> int:
        return int(self.open.sum())

    def fraction_open(self) -> float:
        return float(self.open.mean()) if self.open.size else 0.0

    def open_map(self) -> Dict[Tuple[int, int], bool]:
        """Dual-edge marks keyed by the primal edge's vertex pair."""
        pairs = self.graph.edges[self.edge_ids]
        return {(int(u), int(v)): bool(o)
                for (u, v), o in zip(pairs, self.open)}


def open_bonds(diagram: VoronoiDiagram, p: float, seed: int) -> BondConfiguration:
    """I.i.d. Bernoulli(p) marks on the dual edges.

    One uniform is drawn per edge and the edge is open iff u < p, so runs
    with the same seed are monotonically coupled across p.
    """
    if not (0.0 <= p <= 1.0):
        raise PercolationError("p must lie in [0, 1], got %r" % (p,))
    eids = diagram.dual_edge_ids
    rng = np.random.default_rng(seed & _SEED_MASK)
    u = rng.uniform(size=len(eids))
    return BondConfiguration(diagram.graph, eids, u < p)


# ----------------------------------------------------------------------------
# rectangle crossings
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossingSpec:
    """Left-to-right crossing of the rectangle offset + [0,3R] x [0,R].

    The source side is the left vertical boundary segment, the target side
    the right one.  The rectangle must sit inside the window minus its
    margin; ``validate`` checks that.
    """

    R: float
    offset: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.R > 0.0) or not math.isfinite(self.R):
            raise PercolationError("crossing scale R must be positive")

    @property
    def rect(self) -> Tuple[float, float, float, float]:
        ox, oy = self.offset
        return (ox, oy, ox + 3.0 * self.R, oy + self.R)

    @property
    def source_side(self):
        x0, y0, _, y1 = self.rect
        return ((x0, y0), (x0, y1))

    @property
    def target_side(self):
        _, y0, x1, y1 = self.rect
        return ((x1, y0), (x1, y1))

    def validate(self, window: Window) -> None:
        x0, y0, x1, y1 = self.rect
        ix0, iy0, ix1, iy1 = window.inner_bounds()
        if not (x0 >= ix0 and y0 >= iy0 and x1 <= ix1 and y1 <= iy1):
            raise PercolationError(
                "crossing rectangle escapes the window's inner region")


def _segments_hitting(pos: np.ndarray, pairs: np.ndarray, seg) -> np.ndarray:
    """Boolean mask over pairs: does the edge segment meet seg?

    Bounding-box prefilter, then the exact orientation test.
    """
    (sx0, sy0), (sx1, sy1) = seg
    a = pos[pairs[:, 0]]
    b = pos[pairs[:, 1]]
    lox = np.minimum(a[:, 0], b[:, 0])
    hix = np.maximum(a[:, 0], b[:, 0])
    loy = np.minimum(a[:, 1], b[:, 1])
    hiy = np.maximum(a[:, 1], b[:, 1])
    cand = ((lox <= max(sx0, sx1)) & (hix >= min(sx0, sx1))
            & (loy <= max(sy0, sy1)) & (hiy >= min(sy0, sy1)))
    out = np.zeros(len(pairs), dtype=bool)
    p0, p1 = (sx0, sy0), (sx1, sy1)
    for e in np.nonzero(cand)[0]:
        out[e] = seg_seg_intersect(tuple(a[e]), tuple(b[e]), p0, p1)
    return out


def _verify_crossing_path(seq: List[int], pos: np.ndarray,
                          adj: Dict[int, list], rect, src, dst) -> bool:
    """Full check that seq is a valid open crossing path.

    Distinct vertices, consecutive pairs adjacent in the open graph, the
    first segment meets src, the last meets dst, interior vertices confined
    to rect.
    """
    if len(seq) < 2 or len(set(seq)) != len(seq):
        return False
    for u, v in zip(seq, seq[1:]):
        if not any(w == v for w, _ in adj.get(u, ())):
            return False
    x0, y0, x1, y1 = rect
    for v in seq[1:-1]:
        x, y = pos[v]
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            return False
    first = (tuple(pos[seq[0]]), tuple(pos[seq[1]]))
    last = (tuple(pos[seq[-2]]), tuple(pos[seq[-1]]))
    return (seg_seg_intersect(first[0], first[1], src[0], src[1])
            and seg_seg_intersect(last[0], last[1], dst[0], dst[1]))


def _exhaustive_crossing(starts, adj, in_rect, cap=2_000_000):
    """Backtracking search over self-avoiding paths; None if cap exceeded."""
    budget = cap
    for far, near in starts:
        visited = {far, near}
        stack = [(near, iter(adj.get(near, ())))]
        while stack:
            if budget <= 0:
                return None
            budget -= 1
            u, it = stack[-1]
            step = next(it, None)
            if step is None:
                stack.pop()
                visited.discard(u)
                continue
            w, thit = step
            if thit and w not in visited:
                return True
            if in_rect[w] and w not in visited:
                visited.add(w)
                stack.append((w, iter(adj.get(w, ()))))
    return False


def _crossing_search(pos: np.ndarray, pairs: np.ndarray, rect, src, dst) -> bool:
    """Existence of an open self-avoiding path crossing the rectangle.

    Path vertices are rows of pos; pairs lists the open edges.  The first
    segment must meet src, the last must meet dst, and every interior vertex
    must lie in rect (closed).  End vertices are unconfined.
    """
    if len(pairs) == 0:
        return False
    hit_s = _segments_hitting(pos, pairs, src)
    if not hit_s.any():
        return False
    hit_t = _segments_hitting(pos, pairs, dst)
    if (hit_s & hit_t).any():
        return True
    if not hit_t.any():
        return False

    x0, y0, x1, y1 = rect
    in_rect = ((pos[:, 0] >= x0) & (pos[:, 0] <= x1)
               & (pos[:, 1] >= y0) & (pos[:, 1] <= y1))
    adj: Dict[int, list] = defaultdict(list)
    for e in range(len(pairs)):
        a, b = int(pairs[e, 0]), int(pairs[e, 1])
        t = bool(hit_t[e])
        adj[a].append((b, t))
        adj[b].append((a, t))

    # BFS from a virtual source through every source-hitting edge.  Tree
    # vertices are distinct, so a found exit assembles into a path that can
    # repeat at most the two unconfined endpoints; those repeats are repaired
    # by re-anchoring on the entry or exit edge (each repair is re-verified).
    parent: Dict[int, Optional[int]] = {}
    entry_far: Dict[int, int] = {}
    starts = []
    queue = deque()
    for e in np.nonzero(hit_s)[0]:
        a, b = int(pairs[e, 0]), int(pairs[e, 1])
        for far, near in ((a, b), (b, a)):
            if in_rect[near]:
                starts.append((far, near))
                if near not in parent:
                    parent[near] = None
                    entry_far[near] = far
                    queue.append(near)

    pending = False
    while queue:
        u = queue.popleft()
        for w, thit in adj[u]:
            if thit:
                chain = [u]
                while parent[chain[-1]] is not None:
                    chain.append(parent[chain[-1]])
                chain.reverse()
                v1 = entry_far[chain[0]]
                cands = [[v1] + chain + [w]]
                if w in chain:
                    i = chain.index(w)
                    cands.append([v1] + chain[:i + 1] + [chain[-1]])
                if v1 in chain:
                    j = chain.index(v1)
                    if j >= 1:
                        cands.append([chain[0]] + chain[j:] + [w])
                        if w in chain and j <= chain.index(w):
                            i = chain.index(w)
                            cands.append([chain[0]] + chain[j:i + 1]
                                         + [chain[-1]])
                cands.append([chain[0], v1, chain[-1]])
                for seq in cands:
                    if _verify_crossing_path(seq, pos, adj, rect, src, dst):
                        return True
                pending = True
            elif in_rect[w] and w not in parent:
                parent[w] = u
                entry_far[w] = entry_far[u]
                queue.append(w)

    if pending:
        # A constrained walk exists but no assembled path verified.  Decide
        # exactly while the budget lasts; an exhausted budget falls back to
        # the walk certificate.
        got = _exhaustive_crossing(starts, adj, in_rect)
        return True if got is None else got
    return False


def crossing_event(config: BondConfiguration, spec: CrossingSpec,
                   diagram: VoronoiDiagram) -> bool:
    """True iff an open self-avoiding dual path crosses spec's rectangle.

    The path's first segment must meet the source side, its last segment the
    target side, and every interior vertex must lie in the rectangle; the
    two end vertices are unconfined.
    """
    if config.graph is not diagram.graph:
        raise PercolationError("bond field was built on a different graph")
    spec.validate(diagram.window)
    tri_pairs = config.graph.edge_triangles()[config.edge_ids]
    if (tri_pairs < 0).any():
        raise PercolationError("bond field touches hull-adjacent edges")
    pairs = tri_pairs[config.open]
    return _crossing_search(diagram.vor_vertices, pairs, spec.rect,
                            spec.source_side, spec.target_side)


# ----------------------------------------------------------------------------
# crossing-probability campaigns
# ----------------------------------------------------------------------------

def _eta_window(R: float, margin: float) -> Tuple[Window, CrossingSpec]:
    side = 3.0 * R + 2.0 * margin
    window = Window((0.0, 0.0), (side, side), margin)
    # rectangle vertically centered to keep both long sides margin-safe
    oy = margin + (side - 2.0 * margin - R) / 2.0
    return window, CrossingSpec(R, (margin, oy))


def _eta_replica(rep: int, master: int, p: float, window: Window,
                 spec: CrossingSpec, intensity: float):
    rep_seed = derive_seed(master, "replica", rep)
    try:
        pts = sample_poisson(window, intensity, derive_seed(rep_seed, "points"))
        graph = build_delaunay(pts)
        diagram = build_voronoi_dual(graph, window)
    except GeometryError:
        return rep, rep_seed, None
    rng = np.random.default_rng(derive_seed(rep_seed, "bonds") & _SEED_MASK)
    u = rng.uniform(size=len(diagram.dual_edge_ids))
    config = BondConfiguration(graph, diagram.dual_edge_ids, u < p)
    return rep, rep_seed, bool(crossing_event(config, spec, diagram))


def _eta_run(p: float, R: float, replicas: int, master: int,
             intensity: float, margin: float):
    window, spec = _eta_window(R, margin)
    rows = parallel_map(
        lambda rep: _eta_replica(rep, master, p, window, spec, intensity),
        replicas)
    ok = [(rep, s, c) for rep, s, c in rows if c is not None]
    failures = replicas - len(ok)
    return ok, failures


def estimate_eta(p: float, R: float, replicas: int, seed: int, *,
                 intensity: float = 1.0, margin: float = 6.0) -> ExperimentResult:
    """Empirical crossing probability at (p, R) over fresh replicas.

    Bond uniforms depend on the seed but not on p, so calls sharing a seed
    are monotonically coupled across p.  Replicas whose geometry degenerates
    are dropped from the estimate and counted in extra["geometry_failures"].
    """
    if not (0.0 <= p <= 1.0):
        raise PercolationError("p must lie in [0, 1], got %r" % (p,))
    if replicas < 1:
        raise PercolationError("need at least one replica")
    ok, failures = _eta_run(p, R, replicas, seed, intensity, margin)
    if not ok:
        raise PercolationError("all replicas degenerate")
    crossed = [1.0 if c else 0.0 for _, _, c in ok]
    stats = mean_ci(crossed)
    cells = [dict(p=p, R=R, **stats)]
    rows = [(p, R, rep, 1 if c else 0, s) for rep, s, c in ok]
    return ExperimentResult(
        command="eta",
        params=dict(p=p, R=R, replicas=replicas, seed=seed,
                    intensity=intensity, margin=margin),
        columns=["p", "R", "replica", "crossed", "seed"],
        rows=rows,
        cells=cells,
        extra=dict(eta_hat=stats["mean"], geometry_failures=failures))


def _bisect_eta(eval_eta, tol: float):
    lo, hi = 0.0, 1.0
    eta_lo = eval_eta(lo)
    eta_hi = eval_eta(hi)
    probes = [(lo, eta_lo), (hi, eta_hi)]
    if eta_lo >= 0.5 or eta_hi < 0.5:
        raise PercolationError(
            "bracket failure: crossing frequency does not pass 0.5 on [0, 1]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        eta_mid = eval_eta(mid)
        probes.append((mid, eta_mid))
        if eta_mid >= 0.5:
            hi, eta_hi = mid, eta_mid
        else:
            lo, eta_lo = mid, eta_mid
    return dict(p_lo=lo, p_hi=hi, eta_lo=eta_lo, eta_hi=eta_hi,
                midpoint=0.5 * (lo + hi)), probes


def estimate_pc_star(R: float, replicas: int, tol: float, seed: int, *,
                     intensity: float = 1.0, margin: float = 6.0) -> ExperimentResult:
    """Threshold estimate: bisection of p against crossing frequency >= 0.5.

    Runs at R and at 2R so the scale trend is visible next to the brackets.
    Within one scale all probes share the replica seeds, hence are coupled
    across p and the frequency is exactly nondecreasing.
    """
    if tol < 0.01:
        raise PercolationError("tol below 0.01 is not resolvable here")
    if replicas < 1:
        raise PercolationError("need at least one replica")
    cells = []
    rows = []
    for k, R_cur in enumerate((R, 2.0 * R)):
        master = derive_seed(seed, "pc-star", k)

        def eval_eta(p, _R=R_cur, _m=master):
            ok, _ = _eta_run(p, _R, replicas, _m, intensity, margin)
            if not ok:
                raise PercolationError("all replicas degenerate")
            return sum(1.0 for _, _, c in ok if c) / len(ok)

        bracket, probes = _bisect_eta(eval_eta, tol)
        cells.append(dict(R=R_cur, **bracket))
        rows.extend((R_cur, p, e) for p, e in probes)
    gap = abs(cells[0]["midpoint"] - cells[1]["midpoint"])
    return ExperimentResult(
        command="pc-star",
        params=dict(R=R, replicas=replicas, tol=tol, seed=seed,
                    intensity=intensity, margin=margin),
        columns=["R", "p", "eta_hat"],
        rows=rows,
        cells=cells,
        extra=dict(R_list=[R, 2.0 * R],
                   midpoint=cells[0]["midpoint"],
                   midpoint_doubled=cells[1]["midpoint"],
                   midpoint_gap=gap,
                   bracket_width=tol))


def _delaunay_crossing_replica(rep: int, master: int, p: float,
                               window: Window, spec: CrossingSpec,
                               intensity: float):
    rep_seed = derive_seed(master, "replica", rep)
    try:
        pts = sample_poisson(window, intensity, derive_seed(rep_seed, "points"))
        graph = build_delaunay(pts)
    except GeometryError:
        return rep, rep_seed, None
    rng = np.random.default_rng(derive_seed(rep_seed, "bonds") & _SEED_MASK)
    u = rng.uniform(size=len(graph.edges))
    pairs = graph.edges[u < p]
    crossed = _crossing_search(pts.coords, pairs, spec.rect,
                               spec.source_side, spec.target_side)
    return rep, rep_seed, bool(crossed)


def estimate_pc_delaunay(R: float, replicas: int, tol: float, seed: int, *,
                         intensity: float = 1.0, margin: float = 6.0) -> ExperimentResult:
    """Bond threshold on the triangulation itself, same bisection protocol.

    Companion probe for the duality inequality: its midpoint plus the dual
    threshold's midpoint should be at least 1 up to Monte Carlo error.
    """
    if tol < 0.01:
        raise PercolationError("tol below 0.01 is not resolvable here")
    if replicas < 1:
        raise PercolationError("need at least one replica")
    window, spec = _eta_window(R, margin)
    master = derive_seed(seed, "pc-delaunay")

    def eval_eta(p):
        rows = parallel_map(
            lambda rep: _delaunay_crossing_replica(rep, master, p, window,
                                                   spec, intensity),
            replicas)
        ok = [c for _, _, c in rows if c is not None]
        if not ok:
            raise PercolationError("all replicas degenerate")
        return sum(1.0 for c in ok if c) / len(ok)

    bracket, probes = _bisect_eta(eval_eta, tol)
    return ExperimentResult(
        command="pc-delaunay",
        params=dict(R=R, replicas=replicas, tol=tol, seed=seed,
                    intensity=intensity, margin=margin),
        columns=["R", "p", "eta_hat"],
        rows=[(R, p, e) for p, e in probes],
        cells=[dict(R=R, **bracket)],
        extra=dict(midpoint=bracket["midpoint"], bracket_width=tol))


# ----------------------------------------------------------------------------
# annulus circuits
# ----------------------------------------------------------------------------

def _check_boxes(inner, outer):
    ix0, iy0, ix1, iy1 = inner
    ox0, oy0, ox1, oy1 = outer
    if not (ix0 < ix1 and iy0 < iy1 and ox0 < ox1 and oy0 < oy1):
        raise PercolationError("boxes must have positive extent")
    if not (ox0 < ix0 and oy0 < iy0 and ix1 < ox1 and iy1 < oy1):
        raise PercolationError("inner box must lie strictly inside outer box")


def _ray_cross_sign(pa, pb, cx: float, cy: float) -> int:
    """Signed crossing of segment pa->pb with the rightward ray from (cx,cy).

    Half-open rule: an endpoint exactly on the ray's line counts as above.
    +1 for an upward crossing, -1 downward, 0 for none.
    """
    ya, yb = pa[1], pb[1]
    below_a = ya < cy
    below_b = yb < cy
    if below_a == below_b:
        return 0
    t = (cy - ya) / (yb - ya)
    xstar = pa[0] + t * (pb[0] - pa[0])
    if xstar <= cx:
        return 0
    return 1 if below_a else -1


def _winding_cycle_exists(pos: np.ndarray, pairs: np.ndarray,
                          center: Tuple[float, float]) -> bool:
    """True iff some cycle of the given edges winds around center.

    Assigns a potential along a spanning forest counting signed crossings of
    a cut ray; any edge violating the potential closes a cycle with nonzero
    winding number.  Edges must avoid center's box so crossings are robust.
    """
    cx, cy = center
    adj: Dict[int, list] = defaultdict(list)
    for a, b in pairs:
        a, b = int(a), int(b)
        w = _ray_cross_sign(pos[a], pos[b], cx, cy)
        adj[a].append((b, w))
        adj[b].append((a, -w))
    phi: Dict[int, int] = {}
    for s in adj:
        if s in phi:
            continue
        phi[s] = 0
        stack = [s]
        while stack:
            u = stack.pop()
            for v, w in adj[u]:
                nv = phi[u] + w
                if v not in phi:
                    phi[v] = nv
                    stack.append(v)
                elif phi[v] != nv:
                    return True
    return False


def circuit_certificate(config: BondConfiguration, inner_box, outer_box,
                        diagram: VoronoiDiagram, *,
                        exact_limit: int = 1000) -> Tuple[bool, str]:
    """Open dual circuit in the annulus outer minus inner, with its method.

    Small annuli (at most exact_limit dual vertices) are decided exactly by
    winding-potential search.  Larger ones use the four-rectangle criterion:
    simultaneous open crossings of the four overlapping annulus rectangles
    imply a surrounding circuit.  That test is sufficient but not necessary,
    so its negative verdicts may under-report; the method tag says which
    rule produced the answer.
    """
    if config.graph is not diagram.graph:
        raise PercolationError("bond field was built on a different graph")
    _check_boxes(inner_box, outer_box)
    ix0, iy0, ix1, iy1 = inner_box
    ox0, oy0, ox1, oy1 = outer_box
    pos = diagram.vor_vertices
    in_outer = ((pos[:, 0] >= ox0) & (pos[:, 0] <= ox1)
                & (pos[:, 1] >= oy0) & (pos[:, 1] <= oy1))
    in_inner = ((pos[:, 0] >= ix0) & (pos[:, 0] <= ix1)
                & (pos[:, 1] >= iy0) & (pos[:, 1] <= iy1))
    annulus = in_outer & ~in_inner
    if not annulus.any():
        return False, "empty-annulus"

    tri_pairs = config.graph.edge_triangles()[config.edge_ids]
    open_pairs = tri_pairs[config.open]
    keep = annulus[open_pairs[:, 0]] & annulus[open_pairs[:, 1]]
    ann_pairs = open_pairs[keep]
    if len(ann_pairs):
        ann_pairs = ann_pairs[[not seg_intersects_rect(
            tuple(pos[a]), tuple(pos[b]), (ix0, iy0, ix1, iy1))
            for a, b in ann_pairs]]

    cx = 0.5 * (ix0 + ix1)
    cy = 0.5 * (iy0 + iy1)
    a_half = max(ix1 - ix0, iy1 - iy0) / 2.0
    b_half = min(cx - ox0, ox1 - cx, cy - oy0, oy1 - cy)

    if int(annulus.sum()) <= exact_limit or b_half <= a_half:
        return _winding_cycle_exists(pos, ann_pairs, (cx, cy)), "exact"

    a, b = a_half, b_half
    strips = [
        ((cx + a, cy - b, cx + b, cy + b), "y"),
        ((cx - b, cy + a, cx + b, cy + b), "x"),
        ((cx - b, cy - b, cx - a, cy + b), "y"),
        ((cx - b, cy - b, cx + b, cy - a), "x"),
    ]
    for rect, axis in strips:
        rx0, ry0, rx1, ry1 = rect
        if axis == "y":
            src = ((rx0, ry0), (rx1, ry0))
            dst = ((rx0, ry1), (rx1, ry1))
        else:
            src = ((rx0, ry0), (rx0, ry1))
            dst = ((rx1, ry0), (rx1, ry1))
        if not _crossing_search(pos, open_pairs, rect, src, dst):
            return False, "four-rectangle"
    return True, "four-rectangle"


def circuit_exists(config: BondConfiguration, inner_box, outer_box,
                   diagram: VoronoiDiagram, *, exact_limit: int = 1000) -> bool:
    """Boolean form of circuit_certificate."""
    return circuit_certificate(config, inner_box, outer_box, diagram,
                               exact_limit=exact_limit)[0]


# ----------------------------------------------------------------------------
# good-box classification
# ----------------------------------------------------------------------------

_SPHERE1 = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
            if max(abs(dx), abs(dy)) == 1]
_BALL1 = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
_SPHERE2 = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3)
            if max(abs(dx), abs(dy)) == 2]


def _as_bond_field(field, eps: float) -> BondConfiguration:
    if isinstance(field, BondConfiguration):
        return field
    from .weights import EdgeWeights, threshold_indicator
    if isinstance(field, EdgeWeights):
        return threshold_indicator(field, eps)
    raise PercolationError("need a bond configuration or edge weights")


def classify_good_boxes(variant: str, params: Dict[str, float],
                        points: PointSet, diagram: Optional[VoronoiDiagram],
                        field=None):
    """Boolean good/bad verdict per grid box under the chosen definition.

    Boxes have side L = params["L"], centered on the lattice L * z.  Only
    sites whose full neighborhood requirement fits the window (minus margin)
    are classified.

    variant Z: the box itself is full (each of its 36 sub-boxes occupied).
    variant Y: every box at sup-distance exactly 1 is full.
    variant V: every box at sup-distance at most 1 is full with at most
        4 L^2 points, and every dual edge meeting the tripled box is open.
    variant W: every box at sup-distance exactly 2 is full, and the tripled
        box's annulus carries an open dual circuit (sufficient certificate
        via circuit_certificate, so W may under-report).

    V and W need bond marks: pass a BondConfiguration, or EdgeWeights to be
    thresholded at params.get("eps", 1.0).
    """
    from .renorm import SiteField, is_full_box

    if variant not in ("Y", "Z", "V", "W"):
        raise PercolationError("unknown good-box variant %r" % (variant,))
    L = float(params["L"])
    if not (L > 0.0):
        raise PercolationError("box side L must be positive")
    window = points.window
    grid = BoxGrid.covering(window, L)
    halfw = {"Z": 0.5, "Y": 1.5, "V": 1.5, "W": 2.5}[variant] * L
    sites = grid.inner_sites(window, halfw)

    full_cache: Dict[Tuple[int, int], bool] = {}

    def full(z):
        if z not in full_cache:
            full_cache[z] = is_full_box(grid.box_bounds(z), points)
        return full_cache[z]

    counts: Dict[Tuple[int, int], int] = {}
    if variant == "V" and len(points.coords):
        zx, zy = grid.site_of(points.coords[:, 0], points.coords[:, 1])
        for sx, sy in zip(zx, zy):
            counts[(int(sx), int(sy))] = counts.get((int(sx), int(sy)), 0) + 1

    config = None
    closed_pairs = None
    closed_bbox = None
    if variant in ("V", "W") and field is not None:
        config = _as_bond_field(field, float(params.get("eps", 1.0)))
        if diagram is None:
            raise PercolationError("variants V and W need the dual diagram")
        if config.graph is not diagram.graph:
            raise PercolationError("bond field was built on a different graph")
    if variant == "V" and config is not None:
        tri_pairs = config.graph.edge_triangles()[config.edge_ids]
        closed_pairs = tri_pairs[~config.open]
        pos = diagram.vor_vertices
        if len(closed_pairs):
            ca = pos[closed_pairs[:, 0]]
            cb = pos[closed_pairs[:, 1]]
            closed_bbox = (np.minimum(ca, cb), np.maximum(ca, cb))

    def v_edges_ok(z):
        if closed_pairs is None or not len(closed_pairs):
            return True
        cx, cy = grid.r * z[0], grid.r * z[1]
        rect = (cx - 1.5 * L, cy - 1.5 * L, cx + 1.5 * L, cy + 1.5 * L)
        lo, hi = closed_bbox
        cand = np.nonzero((lo[:, 0] <= rect[2]) & (hi[:, 0] >= rect[0])
                          & (lo[:, 1] <= rect[3]) & (hi[:, 1] >= rect[1]))[0]
        pos = diagram.vor_vertices
        for e in cand:
            a, b = closed_pairs[e]
            if seg_intersects_rect(tuple(pos[a]), tuple(pos[b]), rect):
                return False
        return True

    cap = 4.0 * L * L
    values: Dict[Tuple[int, int], bool] = {}
    for z in sites:
        if variant == "Z":
            good = full(z)
        elif variant == "Y":
            good = all(full((z[0] + dx, z[1] + dy)) for dx, dy in _SPHERE1)
        elif variant == "V":
            good = all(full((z[0] + dx, z[1] + dy))
                       and counts.get((z[0] + dx, z[1] + dy), 0) <= cap
                       for dx, dy in _BALL1)
            if good:
                if config is None:
                    raise PercolationError("variant V needs bond marks")
                good = v_edges_ok(z)
        else:
            good = all(full((z[0] + dx, z[1] + dy)) for dx, dy in _SPHERE2)
            if good:
                if config is None:
                    raise PercolationError("variant W needs bond marks")
                cx, cy = grid.r * z[0], grid.r * z[1]
                inner = (cx - L / 2, cy - L / 2, cx + L / 2, cy + L / 2)
                outer = (cx - 1.5 * L, cy - 1.5 * L,
                         cx + 1.5 * L, cy + 1.5 * L)
                good = circuit_certificate(config, inner, outer, diagram)[0]
        values[z] = bool(good)

    if sites:
        zlo = (min(z[0] for z in sites), min(z[1] for z in sites))
        zhi = (max(z[0] for z in sites), max(z[1] for z in sites))
    else:
        zlo = zhi = (0, 0)
    return SiteField(values=values, zlo=zlo, zhi=zhi)
