"""Segment walks, path-to-box animals, and exact small-path statistics.

The segment walk traces the tiles met by a straight query segment and
returns the corresponding generator path in the triangulation.  Path
animals map a vertex path to the set of scaled lattice boxes its segments
touch.  The exact operations (cheapest long path, self-avoiding counts,
animal extrema) enumerate paths exhaustively and are bounded accordingly.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .experiment import ExperimentResult, derive_seed, mean_ci, parallel_map
from .geometry import (DelaunayGraph, GeometryError, VoronoiDiagram, Window,
                       build_delaunay, build_voronoi_dual, locate_tile,
                       nearest_vertex, sample_poisson)

_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_TIE_OFFSET = (1e-9, 1e-9 * _PHI)


class PathError(ValueError):
    """Invalid path query or an exceeded exact-enumeration bound."""


class DegenerateQueryError(PathError):
    """Segment query stayed degenerate after the deterministic tie offset."""


# ----------------------------------------------------------------------------
# path and animal types
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class VertexPath:
    """Ordered vertex indices; self-avoidance is computed, never assumed.

    offset_applied records whether the tie rule moved the originating query;
    it stays False for paths built directly from vertex lists.
    """

    vertices: Tuple[int, ...]
    self_avoiding: bool = field(init=False)
    offset_applied: bool = False

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        if not verts:
            raise PathError("a vertex path cannot be empty")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "self_avoiding",
                           len(set(verts)) == len(verts))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_steps(self) -> int:
        return len(self.vertices) - 1

    def validate_on(self, graph: DelaunayGraph) -> None:
        """Raise unless every consecutive pair is a graph edge."""
        for a, b in zip(self.vertices, self.vertices[1:]):
            if b not in set(int(w) for w in graph.neighbors(a)):
                raise PathError("vertices %d and %d are not adjacent" % (a, b))

    def save_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            json.dump({"vertices": list(self.vertices),
                       "self_avoiding": self.self_avoiding,
                       "offset_applied": self.offset_applied},
                      f, sort_keys=True)
            f.write("\n")


@dataclass(frozen=True)
class PathAnimal:
    """Lattice sites whose side-L boxes (centered at L*z) meet the path."""

    boxes: frozenset
    L: float
    connected: bool = field(init=False)

    def __post_init__(self):
        boxes = frozenset((int(a), int(b)) for a, b in self.boxes)
        if not boxes:
            raise PathError("a path animal cannot be empty")
        if not (self.L > 0.0):
            raise PathError("box side must be positive")
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "connected", _four_connected(boxes))

    @property
    def size(self) -> int:
        return len(self.boxes)

    def save_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            json.dump({"L": self.L, "sites": sorted(self.boxes)},
                      f, sort_keys=True)
            f.write("\n")


def _four_connected(boxes) -> bool:
    start = next(iter(boxes))
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            q = (x + dx, y + dy)
            if q in boxes and q not in seen:
                seen.add(q)
                stack.append(q)
    return len(seen) == len(boxes)


# ----------------------------------------------------------------------------
# box rasterization
# ----------------------------------------------------------------------------

def _boxes_of_point(x: float, y: float, L: float) -> Set[Tuple[int, int]]:
    # closed boxes share boundaries, so a point can belong to up to four
    out = set()
    zx0 = math.floor(x / L - 0.5)
    zy0 = math.floor(y / L - 0.5)
    for zx in (zx0, zx0 + 1):
        for zy in (zy0, zy0 + 1):
            if (abs(x - L * zx) <= L / 2.0) and (abs(y - L * zy) <= L / 2.0):
                out.add((zx, zy))
    return out


def _seg_meets_box(px, py, qx, qy, x0, y0, x1, y1) -> bool:
    """Closed segment against closed box, by interval clipping."""
    t0, t1 = 0.0, 1.0
    for p0, d, lo, hi in ((px, qx - px, x0, x1), (py, qy - py, y0, y1)):
        if d == 0.0:
            if p0 < lo or p0 > hi:
                return False
            continue
        ta = (lo - p0) / d
        tb = (hi - p0) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


def _boxes_of_segment(p, q, L: float) -> Set[Tuple[int, int]]:
    px, py = float(p[0]), float(p[1])
    qx, qy = float(q[0]), float(q[1])
    zx_lo = math.floor(min(px, qx) / L - 0.5)
    zx_hi = math.ceil(max(px, qx) / L + 0.5)
    zy_lo = math.floor(min(py, qy) / L - 0.5)
    zy_hi = math.ceil(max(py, qy) / L + 0.5)
    out = set()
    half = L / 2.0
    for zx in range(zx_lo, zx_hi + 1):
        cx = L * zx
        for zy in range(zy_lo, zy_hi + 1):
            cy = L * zy
            if _seg_meets_box(px, py, qx, qy,
                              cx - half, cy - half, cx + half, cy + half):
                out.add((zx, zy))
    return out


def path_animal(path: VertexPath, L: float,
                coords: np.ndarray) -> PathAnimal:
    """Exact set of boxes met by the path's segments (or its single vertex).

    coords holds the generator positions indexed by the path's vertices.
    """
    if not (L > 0.0) or not math.isfinite(L):
        raise PathError("box side must be positive and finite")
    verts = path.vertices
    boxes: Set[Tuple[int, int]] = set()
    if len(verts) == 1:
        x, y = coords[verts[0]]
        boxes |= _boxes_of_point(float(x), float(y), L)
    for a, b in zip(verts, verts[1:]):
        boxes |= _boxes_of_segment(coords[a], coords[b], L)
    return PathAnimal(frozenset(boxes), L)


# ----------------------------------------------------------------------------
# segment walk
# ----------------------------------------------------------------------------

def _orient(ax, ay, bx, by, cx, cy) -> int:
    """Sign of the triangle (a, b, c), exact.

    A float evaluation with a forward error bound decides fast; borderline
    values fall back to rational arithmetic on the exact binary floats.
    """
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    bound = 3.33e-16 * (abs((bx - ax) * (cy - ay)) + abs((by - ay) * (cx - ax)))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    d = (Fraction(bx) - Fraction(ax)) * (Fraction(cy) - Fraction(ay)) \
        - (Fraction(by) - Fraction(ay)) * (Fraction(cx) - Fraction(ax))
    return (d > 0) - (d < 0)


def _proper_cross(p, q, a, b) -> bool:
    o1 = _orient(p[0], p[1], q[0], q[1], a[0], a[1])
    o2 = _orient(p[0], p[1], q[0], q[1], b[0], b[1])
    if o1 * o2 >= 0:
        return False
    o3 = _orient(a[0], a[1], b[0], b[1], p[0], p[1])
    o4 = _orient(a[0], a[1], b[0], b[1], q[0], q[1])
    return o3 * o4 < 0


def _on_segment(px, py, qx, qy, cx, cy) -> bool:
    if _orient(px, py, qx, qy, cx, cy) != 0:
        return False
    return (min(px, qx) <= cx <= max(px, qx)
            and min(py, qy) <= cy <= max(py, qy))


def _walk_once(x, y, diagram: VoronoiDiagram, dual_map):
    graph = diagram.graph
    v = locate_tile(x, diagram)
    target = locate_tile(y, diagram)
    out = [v]
    prev = -1
    cap = graph.n_vertices + 1
    while v != target:
        if len(out) > cap:
            return None
        chosen = -1
        hits = 0
        for w in graph.neighbors(v):
            w = int(w)
            if w == prev:
                continue
            key = (v, w) if v < w else (w, v)
            seg = dual_map.get(key)
            if seg is None:
                continue
            if _proper_cross(x, y, seg[0], seg[1]):
                hits += 1
                chosen = w
        if hits != 1:
            return None
        prev = v
        v = chosen
        out.append(v)
    return out


def segment_walk(x, y, diagram: VoronoiDiagram) -> VertexPath:
    """Generator path following the tiles crossed by the segment [x, y].

    Starts at the tile of x and repeatedly steps through the unique tile
    boundary (other than the one just used) that the query segment properly
    crosses, stopping at the tile of y.  A query degenerate against the tile
    boundaries (through a tile corner, or collinear with an edge) is moved
    once by a fixed offset of 1e-9 * (1, golden ratio); if the moved query
    is still degenerate the walk fails rather than guess.
    """
    qx = (float(x[0]), float(x[1]))
    qy = (float(y[0]), float(y[1]))
    dual_map = diagram.dual_edges()

    def degenerate(a, b):
        cc = diagram.vor_vertices
        lo_x, hi_x = min(a[0], b[0]), max(a[0], b[0])
        lo_y, hi_y = min(a[1], b[1]), max(a[1], b[1])
        box = ((cc[:, 0] >= lo_x - 1.0) & (cc[:, 0] <= hi_x + 1.0)
               & (cc[:, 1] >= lo_y - 1.0) & (cc[:, 1] <= hi_y + 1.0))
        for cx, cy in cc[box]:
            if _on_segment(a[0], a[1], b[0], b[1], float(cx), float(cy)):
                return True
        return False

    offset = False
    if degenerate(qx, qy):
        offset = True
    else:
        verts = _walk_once(qx, qy, diagram, dual_map)
        if verts is not None:
            return VertexPath(tuple(verts), offset_applied=False)
        offset = True
    if offset:
        ox = (qx[0] + _TIE_OFFSET[0], qx[1] + _TIE_OFFSET[1])
        oy = (qy[0] + _TIE_OFFSET[0], qy[1] + _TIE_OFFSET[1])
        if not degenerate(ox, oy):
            verts = _walk_once(ox, oy, diagram, dual_map)
            if verts is not None:
                return VertexPath(tuple(verts), offset_applied=True)
    raise DegenerateQueryError(
        "segment query degenerate against the tiling even after the offset")


# ----------------------------------------------------------------------------
# walk-length campaign
# ----------------------------------------------------------------------------

def walk_length_scan(r_grid: Sequence[float], replicas: int, seed: int, *,
                     intensity: float = 1.0, margin: float = 6.0,
                     direction: Tuple[float, float] = (1.0, 1.0),
                     z_grid: Sequence[float] = (1.0, 2.0, 3.0, 4.0, 6.0, 8.0),
                     ) -> ExperimentResult:
    """Distribution of walk length over distance for straight queries.

    For each r the query runs from the origin to r * direction on a fresh
    point sample; the reported length is the number of tiles visited.  Tail
    frequencies P(length/r > z) are tabulated on the given z grid.
    """
    r_grid = sorted(set(float(r) for r in r_grid))
    if not r_grid or r_grid[0] <= 0:
        raise PathError("r grid must hold positive reals")
    if replicas < 1:
        raise PathError("need at least one replica")
    dx, dy = float(direction[0]), float(direction[1])
    if dx == 0.0 and dy == 0.0:
        raise PathError("direction must be a nonzero vector")
    z_grid = sorted(set(float(z) for z in z_grid))

    rows = []
    cells = []
    violations = 0
    failures = 0
    offsets = 0
    for r in r_grid:
        tx, ty = r * dx, r * dy
        pad = margin + 2.0
        lo = (min(0.0, tx) - pad, min(0.0, ty) - pad)
        hi = (max(0.0, tx) + pad, max(0.0, ty) + pad)
        window = Window(lo, hi, margin)
        master = derive_seed(seed, "walk-scan", int(round(16.0 * r)))

        def one(rep: int, _w=window, _t=(tx, ty), _m=master):
            rep_seed = derive_seed(_m, "replica", rep)
            try:
                pts = sample_poisson(_w, intensity,
                                     derive_seed(rep_seed, "points"))
                graph = build_delaunay(pts)
                diagram = build_voronoi_dual(graph, _w)
                path = segment_walk((0.0, 0.0), _t, diagram)
            except (GeometryError, DegenerateQueryError):
                return rep, rep_seed, None
            return rep, rep_seed, path

        out = parallel_map(one, replicas)
        ratios = []
        for rep, rep_seed, path in out:
            if path is None:
                failures += 1
                continue
            if not path.self_avoiding:
                violations += 1
            if path.offset_applied:
                offsets += 1
            ratio = path.n_vertices / r
            ratios.append(ratio)
            rows.append((r, rep, path.n_vertices, ratio,
                         int(path.self_avoiding), rep_seed))
        if not ratios:
            raise PathError("all replicas degenerate at r = %g" % r)
        arr = np.asarray(ratios)
        cell = dict(r=r, **mean_ci(ratios))
        cell["p99"] = float(np.quantile(arr, 0.99))
        for z in z_grid:
            cell["tail_z%g" % z] = float((arr > z).mean())
        cells.append(cell)
    return ExperimentResult(
        command="walk-scan",
        params=dict(r_grid=list(r_grid), replicas=replicas, seed=seed,
                    intensity=intensity, margin=margin,
                    direction=[dx, dy], z_grid=list(z_grid)),
        columns=["r", "replica", "length", "ratio", "self_avoiding", "seed"],
        rows=rows,
        cells=cells,
        extra=dict(self_avoidance_violations=violations,
                   geometry_failures=failures, offsets_applied=offsets))


# ----------------------------------------------------------------------------
# exact enumerations
# ----------------------------------------------------------------------------

def _edge_weight_table(graph: DelaunayGraph, values: np.ndarray):
    table = {}
    for v in range(graph.n_vertices):
        nbrs = graph.neighbors(v)
        eids = graph.incident_edges(v)
        for w, e in zip(nbrs, eids):
            table[(v, int(w))] = float(values[int(e)])
    return table


def cheapest_long_path(graph: DelaunayGraph, weights, r: int,
                       mode: str = "exact",
                       source: Optional[int] = None) -> float:
    """Exact minimum weight sum over self-avoiding paths with >= r steps.

    With nonnegative weights the minimum over >= r steps is attained at
    exactly r steps (dropping trailing edges never increases the sum), so
    only r-step paths are enumerated, with a running-sum cutoff.  The source
    defaults to the vertex nearest the origin.  Returns inf when no path
    reaches r steps.
    """
    if mode != "exact":
        raise PathError("unknown mode %r" % (mode,))
    r = int(r)
    if r < 1:
        raise PathError("path length bound must be >= 1")
    if r > 9:
        raise PathError("exact enumeration is capped at r = 9")
    if graph.n_vertices > 14:
        raise PathError("exact enumeration is capped at 14 vertices")
    values = np.asarray(weights.values, dtype=float)
    if len(values) != graph.n_edges:
        raise PathError("weights are not aligned with the graph's edges")
    if np.any(values < 0):
        raise PathError("weights must be nonnegative")
    if source is None:
        source = nearest_vertex(graph.vertices, 0.0, 0.0)
    source = int(source)
    if not (0 <= source < graph.n_vertices):
        raise PathError("source vertex out of range")
    wtab = _edge_weight_table(graph, values)

    best = math.inf
    stack = [(source, 1 << source, 0, 0.0)]
    while stack:
        node, visited, depth, acc = stack.pop()
        if acc >= best:
            continue
        if depth == r:
            best = acc
            continue
        for w in graph.neighbors(node):
            w = int(w)
            if visited & (1 << w):
                continue
            nacc = acc + wtab[(node, w)]
            if nacc < best:
                stack.append((w, visited | (1 << w), depth + 1, nacc))
    return best


def count_self_avoiding(graph: DelaunayGraph, v: int,
                        r: int) -> Tuple[int, float]:
    """Exact count of r-step self-avoiding paths from v, with its log."""
    r = int(r)
    if r < 1:
        raise PathError("step count must be >= 1")
    if r > 10:
        raise PathError("exhaustive counting is capped at r = 10")
    v = int(v)
    if not (0 <= v < graph.n_vertices):
        raise PathError("start vertex out of range")
    count = 0
    stack = [(v, 1 << v, 0)]
    while stack:
        node, visited, depth = stack.pop()
        for w in graph.neighbors(node):
            w = int(w)
            if visited & (1 << w):
                continue
            if depth + 1 == r:
                count += 1
            else:
                stack.append((w, visited | (1 << w), depth + 1))
    kappa = math.log(count) if count > 0 else -math.inf
    return count, kappa


def kappa_table(graph: DelaunayGraph, v: int,
                r_list: Sequence[int]) -> ExperimentResult:
    """Self-avoiding path counts and their logs over a step grid."""
    r_list = sorted(set(int(r) for r in r_list))
    if not r_list:
        raise PathError("need at least one step count")
    rows = []
    cells = []
    for r in r_list:
        n_r, kappa = count_self_avoiding(graph, v, r)
        rows.append((r, n_r, kappa))
        cells.append(dict(r=r, N_r=n_r, kappa=kappa,
                          kappa_over_r=kappa / r if n_r > 0 else -math.inf))
    return ExperimentResult(
        command="kappa",
        params=dict(v=int(v), r_list=list(r_list)),
        columns=["r", "N_r", "kappa_r"],
        rows=rows,
        cells=cells)


def _animal_extrema(graph: DelaunayGraph, coords: np.ndarray, source: int,
                    r: int, L: float) -> Tuple[float, float]:
    """Exact (min over >= r steps, max over 1..r steps) of animal size.

    The minimum is attained at exactly r steps since extending a path can
    only grow its box set; the maximum search carries a per-edge box-count
    bound for pruning.
    """
    edge_boxes: Dict[int, Set[Tuple[int, int]]] = {}

    def boxes_of(eid: int, a: int, b: int):
        got = edge_boxes.get(eid)
        if got is None:
            got = _boxes_of_segment(coords[a], coords[b], L)
            edge_boxes[eid] = got
        return got

    # cache every edge count once; cmax bounds any step's contribution
    for v in range(graph.n_vertices):
        for w, e in zip(graph.neighbors(v), graph.incident_edges(v)):
            if int(w) > v:
                boxes_of(int(e), v, int(w))
    cmax = max((len(s) for s in edge_boxes.values()), default=0)

    best_min = math.inf
    best_max = 0.0
    stack = [(source, 1 << source, 0, frozenset())]
    while stack:
        node, visited, depth, boxes = stack.pop()
        if depth == r:
            if len(boxes) < best_min:
                best_min = len(boxes)
            continue
        for w, e in zip(graph.neighbors(node), graph.incident_edges(node)):
            w = int(w)
            if visited & (1 << w):
                continue
            nboxes = boxes | boxes_of(int(e), node, w)
            if depth + 1 >= 1 and len(nboxes) > best_max:
                best_max = len(nboxes)
            if len(nboxes) >= best_min and \
                    len(nboxes) + (r - depth - 1) * cmax <= best_max:
                continue
            stack.append((w, visited | (1 << w), depth + 1, nboxes))
    return best_min, float(best_max)


def min_animal_scan(r_grid: Sequence[int], L: float, replicas: int,
                    seed: int, *, intensity: float = 1.0,
                    margin: float = 4.0, exact_limit: int = 9,
                    sample_walks: int = 16) -> ExperimentResult:
    """Animal-size extrema over paths from the origin tile, per step bound.

    Step bounds up to exact_limit are enumerated exhaustively: the cell
    reports the true minimum over paths with at least r steps and the true
    maximum over paths with at most r steps.  Larger bounds are sampled
    through segment walks and hop-count geodesics toward random directions;
    those cells are labeled as evidence, not extrema.
    """
    r_grid = sorted(set(int(r) for r in r_grid))
    if not r_grid or r_grid[0] < 1:
        raise PathError("r grid must hold positive integers")
    if not (L > 0.0) or not math.isfinite(L):
        raise PathError("box side must be positive and finite")
    if replicas < 1:
        raise PathError("need at least one replica")
    if exact_limit > 9:
        raise PathError("exact enumeration is capped at r = 9")

    rows = []
    cells = []
    failures = 0
    for r in r_grid:
        exact = r <= exact_limit
        half = r + margin + 3.0
        window = Window((-half, -half), (half, half), margin)
        master = derive_seed(seed, "animal-scan", r)

        def one(rep: int, _w=window, _m=master, _r=r, _exact=exact):
            rep_seed = derive_seed(_m, "replica", rep)
            try:
                pts = sample_poisson(_w, intensity,
                                     derive_seed(rep_seed, "points"))
                graph = build_delaunay(pts)
            except GeometryError:
                return rep, rep_seed, None
            coords = pts.coords
            src = nearest_vertex(pts, 0.0, 0.0)
            if _exact:
                lo, hi = _animal_extrema(graph, coords, src, _r, L)
                return rep, rep_seed, (lo, hi)
            diagram = build_voronoi_dual(graph, _w)
            rng = np.random.default_rng(
                derive_seed(rep_seed, "directions") & ((1 << 64) - 1))
            sizes = []
            for _ in range(sample_walks):
                ang = rng.uniform(0.0, 2.0 * math.pi)
                tgt = (_r * math.cos(ang), _r * math.sin(ang))
                try:
                    path = segment_walk((0.0, 0.0), tgt, diagram)
                except (GeometryError, DegenerateQueryError):
                    continue
                sizes.append(path_animal(path, L, coords).size)
                hop = _hop_geodesic(graph, src,
                                    nearest_vertex(pts, tgt[0], tgt[1]))
                if hop is not None and len(hop) > 1:
                    sizes.append(path_animal(VertexPath(tuple(hop)), L,
                                             coords).size)
            if not sizes:
                return rep, rep_seed, None
            return rep, rep_seed, (float(min(sizes)), float(max(sizes)))

        out = parallel_map(one, replicas)
        los = []
        his = []
        for rep, rep_seed, got in out:
            if got is None:
                failures += 1
                continue
            lo, hi = got
            mode = "exact" if exact else "sampled"
            rows.append((r, rep, mode, lo, hi, rep_seed))
            if math.isfinite(lo):
                los.append(lo)
            his.append(hi)
        if not los:
            raise PathError("no replica produced a path at r = %d" % r)
        cells.append(dict(r=r, exact=exact,
                          g_mean=float(np.mean(los)),
                          g_min=float(np.min(los)),
                          G_mean=float(np.mean(his)),
                          G_max=float(np.max(his)),
                          g_over_r=float(np.mean(los)) / r,
                          G_over_r=float(np.mean(his)) / r))
    return ExperimentResult(
        command="animal-extrema",
        params=dict(r_grid=list(r_grid), L=L, replicas=replicas, seed=seed,
                    intensity=intensity, margin=margin,
                    exact_limit=exact_limit, sample_walks=sample_walks),
        columns=["r", "replica", "mode", "g_value", "G_value", "seed"],
        rows=rows,
        cells=cells,
        extra=dict(geometry_failures=failures))


def _hop_geodesic(graph: DelaunayGraph, src: int,
                  dst: int) -> Optional[List[int]]:
    """Vertex list of one fewest-edge path, by breadth-first predecessors."""
    if src == dst:
        return [src]
    from collections import deque
    prev = {src: -1}
    dq = deque([src])
    while dq:
        node = dq.popleft()
        for w in graph.neighbors(node):
            w = int(w)
            if w not in prev:
                prev[w] = node
                if w == dst:
                    dq.clear()
                    break
                dq.append(w)
    if dst not in prev:
        return None
    out = [dst]
    while out[-1] != src:
        out.append(prev[out[-1]])
    out.reverse()
    return out
