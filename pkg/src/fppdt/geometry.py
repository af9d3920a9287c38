"""Planar point processes, Delaunay triangulation, and the Voronoi dual.

The simulation window is a finite axis-aligned rectangle with a margin band
that measurement code keeps away from; all structures below are immutable
after construction and safe to share across threads.

Construction of the triangulation itself is delegated to Qhull
(scipy.spatial.Delaunay) for speed; correctness is anchored elsewhere:
an exact adaptive incircle/orientation predicate (float filter, rational
fallback) certifies the empty-circumcircle property in the test suite, and
exactly-cocircular triangle pairs are re-flipped after construction to a
documented canonical diagonal so that degenerate inputs have a deterministic,
reproducible triangulation rather than an arbitrary one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.spatial import Delaunay as _SciDelaunay
from scipy.spatial import cKDTree

EPS = 1e-9

# float64 unit roundoff and Shewchuk-style static filter bounds
_U = 2.0 ** -53
_ORIENT_BOUND = (3.0 + 16.0 * _U) * _U
_INCIRCLE_BOUND = (10.0 + 96.0 * _U) * _U

# brute-force nearest-neighbor scan below this vertex count; KD-tree above
_SCAN_CUTOFF = 2048


class GeometryError(ValueError):
    """Invalid geometric input or a degenerate configuration."""


# ----------------------------------------------------------------------------
# exact predicates
# ----------------------------------------------------------------------------

def orient2d(a, b, c) -> int:
    """Orientation of the triple (a, b, c): +1 ccw, -1 cw, 0 collinear.

    Evaluates the 2x2 determinant in floating point and accepts the sign when
    it clears a forward-error bound; otherwise recomputes exactly in rational
    arithmetic. Never wrong, usually cheap.
    """
    detleft = (float(a[0]) - float(c[0])) * (float(b[1]) - float(c[1]))
    detright = (float(a[1]) - float(c[1])) * (float(b[0]) - float(c[0]))
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) >= _ORIENT_BOUND * detsum:
        return (det > 0) - (det < 0)
    ax, ay = Fraction(float(a[0])), Fraction(float(a[1]))
    bx, by = Fraction(float(b[0])), Fraction(float(b[1]))
    cx, cy = Fraction(float(c[0])), Fraction(float(c[1]))
    d = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (d > 0) - (d < 0)


def incircle(a, b, c, d) -> int:
    """Sign of the incircle determinant of d against triangle (a, b, c).

    Positive iff d lies strictly inside the circumcircle when (a, b, c) is
    counterclockwise (sign flips with orientation); 0 iff the four points are
    exactly cocircular. Adaptive: float filter, exact rational fallback.
    """
    adx, ady = float(a[0]) - float(d[0]), float(a[1]) - float(d[1])
    bdx, bdy = float(b[0]) - float(d[0]), float(b[1]) - float(d[1])
    cdx, cdy = float(c[0]) - float(d[0]), float(c[1]) - float(d[1])
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (adx * (bdy * clift - blift * cdy)
           - ady * (bdx * clift - blift * cdx)
           + alift * (bdx * cdy - bdy * cdx))
    permanent = ((abs(bdx * cdy) + abs(bdy * cdx)) * alift
                 + (abs(cdx * ady) + abs(cdy * adx)) * blift
                 + (abs(adx * bdy) + abs(ady * bdx)) * clift)
    if abs(det) >= _INCIRCLE_BOUND * permanent:
        return (det > 0) - (det < 0)
    return _incircle_exact(a, b, c, d)


def _incircle_exact(a, b, c, d) -> int:
    dx, dy = Fraction(float(d[0])), Fraction(float(d[1]))
    rows = []
    for p in (a, b, c):
        px, py = Fraction(float(p[0])) - dx, Fraction(float(p[1])) - dy
        rows.append((px, py, px * px + py * py))
    (a1, a2, a3), (b1, b2, b3), (c1, c2, c3) = rows
    det = (a1 * (b2 * c3 - b3 * c2)
           - a2 * (b1 * c3 - b3 * c1)
           + a3 * (b1 * c2 - b2 * c1))
    return (det > 0) - (det < 0)


def in_circumdisk(a, b, c, d) -> int:
    """+1 if d strictly inside the circumdisk of (a,b,c), 0 on it, -1 outside."""
    o = orient2d(a, b, c)
    if o == 0:
        raise GeometryError("degenerate triangle in circumdisk test")
    return incircle(a, b, c, d) * o


# ----------------------------------------------------------------------------
# domain types
# ----------------------------------------------------------------------------

class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Window:
    """Axis-aligned simulation window with an excluded margin band.

    The margin band is part of the window (points live there, geometry is
    built there) but measurement code must keep queries and events inside
    the inner region; that is what suppresses boundary artifacts.
    """

    lo: Point
    hi: Point
    margin: float = 0.0

    def __post_init__(self):
        lo = Point(float(self.lo[0]), float(self.lo[1]))
        hi = Point(float(self.hi[0]), float(self.hi[1]))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "margin", float(self.margin))
        if not (math.isfinite(lo.x) and math.isfinite(lo.y)
                and math.isfinite(hi.x) and math.isfinite(hi.y)):
            raise GeometryError("window corners must be finite")
        if not (hi.x > lo.x and hi.y > lo.y):
            raise GeometryError("degenerate window: hi must exceed lo on both axes")
        if self.margin < 0 or self.margin >= min(hi.x - lo.x, hi.y - lo.y) / 2.0:
            raise GeometryError("margin must satisfy 0 <= margin < min(side)/2")

    @classmethod
    def square(cls, side: float, margin: Optional[float] = None) -> "Window":
        """[0, side]^2 with the default margin side/8."""
        if margin is None:
            margin = side / 8.0
        return cls(Point(0.0, 0.0), Point(float(side), float(side)), margin)

    @property
    def width(self) -> float:
        return self.hi.x - self.lo.x

    @property
    def height(self) -> float:
        return self.hi.y - self.lo.y

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point:
        return Point((self.lo.x + self.hi.x) / 2.0, (self.lo.y + self.hi.y) / 2.0)

    def inner_bounds(self) -> Tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of the window minus its margin band."""
        m = self.margin
        return (self.lo.x + m, self.lo.y + m, self.hi.x - m, self.hi.y - m)

    def contains(self, x: float, y: float, inner: bool = False) -> bool:
        if inner:
            x0, y0, x1, y1 = self.inner_bounds()
        else:
            x0, y0, x1, y1 = self.lo.x, self.lo.y, self.hi.x, self.hi.y
        return x0 <= x <= x1 and y0 <= y <= y1


@dataclass(eq=False)
class PointSet:
    """Ordered finite point configuration inside a window.

    coords is an (N, 2) float64 array, read-only after validation; the stored
    order is the canonical order every downstream structure keys off.
    """

    coords: np.ndarray
    window: Window

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.coords, dtype=np.float64))
        if c.ndim != 2 or c.shape[1] != 2:
            raise GeometryError("coords must be an (N, 2) array")
        if not np.isfinite(c).all():
            raise GeometryError("point coordinates must be finite")
        w = self.window
        if len(c) and not ((c[:, 0] >= w.lo.x).all() and (c[:, 0] <= w.hi.x).all()
                           and (c[:, 1] >= w.lo.y).all() and (c[:, 1] <= w.hi.y).all()):
            raise GeometryError("points must lie inside the window")
        if len(c) > 1:
            # complex sort is lexicographic on (real, imag), so equal
            # neighbors in the sorted view are exactly the duplicate pairs
            z = np.sort(c[:, 0] + 1j * c[:, 1])
            if (np.diff(z) == 0).any():
                raise GeometryError("duplicate points are not allowed")
        c.setflags(write=False)
        self.coords = c
        self._kdtree = None

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def points(self) -> List[Point]:
        return [Point(float(x), float(y)) for x, y in self.coords]

    def kdtree(self) -> cKDTree:
        if self._kdtree is None:
            self._kdtree = cKDTree(self.coords)
        return self._kdtree


@dataclass(frozen=True)
class BoxGrid:
    """Scaled lattice of boxes box(z) = r*z + [-s*r, s*r]^2.

    Index range is the inclusive integer rectangle [zlo, zhi]. With s = 1/2
    the boxes tile the plane and site_of gives the tiling membership
    (half-open convention: a coordinate exactly on a shared face belongs to
    the higher site).
    """

    r: float
    s: float = 0.5
    zlo: Tuple[int, int] = (0, 0)
    zhi: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.r <= 0 or self.s <= 0:
            raise GeometryError("box grid needs positive scale and halfwidth")
        if (2.0 * self.s) != int(round(2.0 * self.s)):
            raise GeometryError("halfwidth s must be a multiple of 1/2")

    @classmethod
    def covering(cls, window: Window, r: float, s: float = 0.5) -> "BoxGrid":
        """Smallest index range whose boxes overlap the window with positive area."""
        sr = s * r
        zx0 = math.floor((window.lo.x - sr) / r) + 1
        zx1 = math.ceil((window.hi.x + sr) / r) - 1
        zy0 = math.floor((window.lo.y - sr) / r) + 1
        zy1 = math.ceil((window.hi.y + sr) / r) - 1
        # guard against exact-boundary ties: drop zero-area overlaps
        while r * zx0 - sr >= window.hi.x:
            zx0 -= 1
        while r * zx1 + sr <= window.lo.x:
            zx1 += 1
        return cls(r, s, (zx0, zy0), (zx1, zy1))

    def box_bounds(self, z: Tuple[int, int]) -> Tuple[float, float, float, float]:
        sr = self.s * self.r
        cx, cy = self.r * z[0], self.r * z[1]
        return (cx - sr, cy - sr, cx + sr, cy + sr)

    def site_of(self, xs, ys):
        """Tiling site indices for coordinates (requires s = 1/2)."""
        if self.s != 0.5:
            raise GeometryError("site_of is only defined for the s=1/2 tiling")
        zx = np.floor(np.asarray(xs, dtype=float) / self.r + 0.5).astype(np.int64)
        zy = np.floor(np.asarray(ys, dtype=float) / self.r + 0.5).astype(np.int64)
        return zx, zy

    def sites(self) -> Iterator[Tuple[int, int]]:
        for zx in range(self.zlo[0], self.zhi[0] + 1):
            for zy in range(self.zlo[1], self.zhi[1] + 1):
                yield (zx, zy)

    def n_sites(self) -> int:
        return ((self.zhi[0] - self.zlo[0] + 1)
                * (self.zhi[1] - self.zlo[1] + 1))

    def inner_sites(self, window: Window, halfwidth: float) -> List[Tuple[int, int]]:
        """Sites z with r*z +- halfwidth inside the window minus its margin."""
        x0, y0, x1, y1 = window.inner_bounds()
        out = []
        for z in self.sites():
            cx, cy = self.r * z[0], self.r * z[1]
            if (cx - halfwidth >= x0 and cx + halfwidth <= x1
                    and cy - halfwidth >= y0 and cy + halfwidth <= y1):
                out.append(z)
        return out


# ----------------------------------------------------------------------------
# point process sampling
# ----------------------------------------------------------------------------

def sample_poisson(window: Window, intensity: float, seed: int) -> PointSet:
    """Homogeneous Poisson point process on the window.

    Parameters
    ----------
    window : Window
    intensity : float
        Mean number of points per unit area; must be positive.
    seed : int
        Stream seed; identical seeds give bit-identical point sets.

    Returns
    -------
    PointSet
        Poisson(intensity * area) many i.i.d. uniform points, in draw order.
    """
    if not (intensity > 0):
        raise GeometryError("intensity must be positive")
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    count = int(rng.poisson(intensity * window.area))
    xs = rng.uniform(window.lo.x, window.hi.x, count)
    ys = rng.uniform(window.lo.y, window.hi.y, count)
    return PointSet(np.column_stack([xs, ys]), window)


def truncated_process(points: PointSet, n: int, delta: float = 1.0 / 14.0,
                      *, seed: int = 0) -> PointSet:
    """Regularized copy of the configuration on the n^delta box tiling.

    Every tiling box of side n^delta that overlaps the window is forced into
    the band [1, ceil(4 n^(2 delta))]: an empty box receives one uniform point
    (drawn on box-intersect-window), an overfull box is subsampled uniformly
    without replacement down to the cap. Boxes already in band are untouched.

    Surviving points keep their original order; fill points are appended
    sorted by box site. The seed only drives the fill and subsample draws.
    """
    if not (0.0 < delta < 0.125):
        raise GeometryError("delta must lie in (0, 1/8)")
    if n < 1:
        raise GeometryError("n must be a positive integer")
    r = float(n) ** delta
    cap = math.ceil(4.0 * float(n) ** (2.0 * delta))
    w = points.window
    grid = BoxGrid.covering(w, r)
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)

    zx, zy = grid.site_of(points.coords[:, 0], points.coords[:, 1])
    nx = grid.zhi[0] - grid.zlo[0] + 1
    ny = grid.zhi[1] - grid.zlo[1] + 1
    # points exactly on the right/top window edge can land one site past the
    # positive-area range; clamp them back into their closed box
    zx = np.clip(zx, grid.zlo[0], grid.zhi[0])
    zy = np.clip(zy, grid.zlo[1], grid.zhi[1])
    key = (zx - grid.zlo[0]) * ny + (zy - grid.zlo[1])

    counts = np.bincount(key, minlength=nx * ny)
    keep = np.ones(len(points), dtype=bool)
    for k in np.nonzero(counts > cap)[0]:
        idx = np.nonzero(key == k)[0]
        chosen = rng.choice(len(idx), size=cap, replace=False, shuffle=False)
        drop = np.ones(len(idx), dtype=bool)
        drop[np.sort(chosen)] = False
        keep[idx[drop]] = False

    empty = np.nonzero(counts == 0)[0]
    fills = []
    for k in empty:
        zxe = k // ny + grid.zlo[0]
        zye = k % ny + grid.zlo[1]
        x0, y0, x1, y1 = grid.box_bounds((zxe, zye))
        x0, x1 = max(x0, w.lo.x), min(x1, w.hi.x)
        y0, y1 = max(y0, w.lo.y), min(y1, w.hi.y)
        fills.append((rng.uniform(x0, x1), rng.uniform(y0, y1)))
    fill_arr = np.asarray(fills, dtype=float).reshape(-1, 2)
    new_coords = np.vstack([points.coords[keep], fill_arr])
    return PointSet(new_coords, w)


# ----------------------------------------------------------------------------
# Delaunay graph
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class DelaunayGraph:
    """Triangulation as canonical, immutable index arrays.

    edges: (M, 2) int32, each row (i, j) with i < j, rows lexicographically
    sorted; triangles: (K, 3) int32, each row ascending, rows sorted. Derived
    structures (adjacency, circumcenters, edge-triangle incidence) are built
    lazily and cached.
    """

    vertices: PointSet
    edges: np.ndarray
    triangles: np.ndarray
    _edge_index: Optional[Dict[Tuple[int, int], int]] = field(default=None, repr=False)
    _adj: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default=None, repr=False)
    _circumcenters: Optional[np.ndarray] = field(default=None, repr=False)
    _edge_tris: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_index(self) -> Dict[Tuple[int, int], int]:
        if self._edge_index is None:
            self._edge_index = {(int(i), int(j)): k
                                for k, (i, j) in enumerate(self.edges)}
        return self._edge_index

    def edge_id(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        return self.edge_index()[(u, v)]

    def _adjacency(self):
        if self._adj is None:
            e = self.edges
            heads = np.concatenate([e[:, 0], e[:, 1]])
            tails = np.concatenate([e[:, 1], e[:, 0]])
            eids = np.concatenate([np.arange(len(e)), np.arange(len(e))])
            order = np.lexsort((tails, heads))
            heads, tails, eids = heads[order], tails[order], eids[order]
            indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
            np.add.at(indptr, heads + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._adj = (indptr, tails.astype(np.int32), eids.astype(np.int64))
        return self._adj

    def neighbors(self, v: int) -> np.ndarray:
        """Neighbor vertex indices of v in ascending order."""
        indptr, tails, _ = self._adjacency()
        return tails[indptr[v]:indptr[v + 1]]

    def incident_edges(self, v: int) -> np.ndarray:
        indptr, _, eids = self._adjacency()
        return eids[indptr[v]:indptr[v + 1]]

    def degree(self, v: int) -> int:
        indptr, _, _ = self._adjacency()
        return int(indptr[v + 1] - indptr[v])

    def adjacency_dict(self) -> Dict[int, List[int]]:
        """Plain dict-of-lists view (small instances, oracles, enumeration)."""
        return {v: [int(w) for w in self.neighbors(v)] for v in range(self.n_vertices)}

    def circumcenters(self) -> np.ndarray:
        """(K, 2) circumcenters, one per triangle row."""
        if self._circumcenters is None:
            p = self.vertices.coords
            a = p[self.triangles[:, 0]]
            b = p[self.triangles[:, 1]]
            c = p[self.triangles[:, 2]]
            bx = b[:, 0] - a[:, 0]
            by = b[:, 1] - a[:, 1]
            cx = c[:, 0] - a[:, 0]
            cy = c[:, 1] - a[:, 1]
            d = 2.0 * (bx * cy - by * cx)
            bl = bx * bx + by * by
            cl = cx * cx + cy * cy
            ux = (cy * bl - by * cl) / d
            uy = (bx * cl - cx * bl) / d
            cc = np.column_stack([a[:, 0] + ux, a[:, 1] + uy])
            cc.setflags(write=False)
            self._circumcenters = cc
        return self._circumcenters

    def edge_triangles(self) -> np.ndarray:
        """(M, 2) triangle row ids adjacent to each edge; -1 marks a hull side."""
        if self._edge_tris is None:
            t = self.triangles
            ek = np.concatenate([t[:, [0, 1]], t[:, [0, 2]], t[:, [1, 2]]])
            tid = np.concatenate([np.arange(len(t))] * 3)
            n = self.n_vertices
            keys = ek[:, 0].astype(np.int64) * n + ek[:, 1]
            out = np.full((self.n_edges, 2), -1, dtype=np.int64)
            edge_keys = self.edges[:, 0].astype(np.int64) * n + self.edges[:, 1]
            pos = np.searchsorted(edge_keys, keys)
            order = np.argsort(pos, kind="stable")
            pos, tid = pos[order], tid[order]
            first = np.ones(len(pos), dtype=bool)
            first[1:] = pos[1:] != pos[:-1]
            out[pos[first], 0] = tid[first]
            second = ~first
            out[pos[second], 1] = tid[second]
            out.setflags(write=False)
            self._edge_tris = out
        return self._edge_tris

    def hull_edge_mask(self) -> np.ndarray:
        """True for edges with only one incident triangle."""
        return self.edge_triangles()[:, 1] < 0

    def csr_graph(self, values: np.ndarray):
        """Directed CSR matrix with the given per-edge values on both arcs."""
        from scipy.sparse import csr_matrix
        e = self.edges
        n = self.n_vertices
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.concatenate([values, values])
        return csr_matrix((data, (rows, cols)), shape=(n, n))


def _canonical_arrays(triangles):
    t = np.sort(np.asarray(triangles, dtype=np.int32).reshape(-1, 3), axis=1)
    n = int(t.max()) + 1 if len(t) else 0
    if n and n * n * n < 2 ** 63:
        key = (t[:, 0].astype(np.int64) * n + t[:, 1]) * n + t[:, 2]
        t = t[np.argsort(key, kind="stable")]
    else:
        t = t[np.lexsort((t[:, 2], t[:, 1], t[:, 0]))]
    ek = np.concatenate([t[:, [0, 1]], t[:, [0, 2]], t[:, [1, 2]]])
    keys = np.unique(ek[:, 0].astype(np.int64) * n + ek[:, 1])
    e = np.column_stack([keys // n, keys % n]).astype(np.int32)
    return e, t


def _flip_cocircular(coords: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Re-flip exactly cocircular adjacent pairs to the canonical diagonal.

    The canonical diagonal of a cocircular quadrilateral is the one whose
    sorted index pair is lexicographically smallest. Each executed flip
    strictly reduces that pair, so the pass terminates; it runs on a plain
    edge -> triangles map because it only ever fires on degenerate
    (handcrafted or gridded) inputs.
    """
    tris: Dict[int, Tuple[int, int, int]] = {i: tuple(tr) for i, tr in enumerate(np.sort(triangles, axis=1))}
    next_id = len(tris)
    edge_map: Dict[Tuple[int, int], set] = {}

    def edges_of(tr):
        a, b, c = tr
        return ((a, b), (a, c), (b, c))

    for tid, tr in tris.items():
        for e in edges_of(tr):
            edge_map.setdefault(e, set()).add(tid)

    queue = list(edge_map.keys())
    guard = 200 * len(tris) + 1000
    while queue and guard:
        guard -= 1
        e = queue.pop()
        tids = edge_map.get(e)
        if tids is None or len(tids) != 2:
            continue
        t1, t2 = sorted(tids)
        a, b = e
        c = next(v for v in tris[t1] if v not in e)
        d = next(v for v in tris[t2] if v not in e)
        new_diag = (min(c, d), max(c, d))
        if new_diag >= e:
            continue
        pa, pb = coords[a], coords[b]
        pc, pd = coords[c], coords[d]
        if incircle(pa, pb, pc, pd) != 0:
            continue
        # flip requires the quad to be strictly convex across the new diagonal
        if orient2d(pc, pd, pa) * orient2d(pc, pd, pb) >= 0:
            continue
        for tid in (t1, t2):
            for ee in edges_of(tris[tid]):
                edge_map[ee].discard(tid)
            del tris[tid]
        for tr in ((c, d, a), (c, d, b)):
            tr = tuple(sorted(tr))
            new_id = next_id
            next_id += 1
            tris[new_id] = tr
            for ee in edges_of(tr):
                edge_map.setdefault(ee, set()).add(new_id)
                queue.append(ee)
    if not guard:
        raise GeometryError("cocircular canonicalization did not terminate")
    return np.asarray(sorted(tris.values()), dtype=np.int32)


def build_delaunay(points: PointSet) -> DelaunayGraph:
    """Delaunay triangulation of the point set.

    Parameters
    ----------
    points : PointSet
        At least 3 points, not all collinear.

    Returns
    -------
    DelaunayGraph
        Canonicalized edge and triangle arrays. Output is deterministic for a
        given input: generic instances come straight from the construction,
        exactly-cocircular quadruples are re-flipped to the lexicographically
        smallest diagonal.
    """
    coords = points.coords
    if len(coords) < 3:
        raise GeometryError("triangulation needs at least 3 points")
    if _all_collinear(coords):
        raise GeometryError("all points are collinear")
    try:
        sci = _SciDelaunay(coords)
    except Exception as exc:  # qhull reports degeneracy in its own dialect
        raise GeometryError(f"triangulation failed: {exc}") from exc
    if len(sci.coplanar):
        raise GeometryError(
            "near-duplicate points were merged away by the triangulator; "
            "thin the input instead of relying on silent drops")
    triangles = sci.simplices.astype(np.int32)

    suspects = _cocircular_suspects(coords, sci)
    if suspects:
        triangles = _flip_cocircular(coords, triangles)
    edges, triangles = _canonical_arrays(triangles)
    return DelaunayGraph(points, edges, triangles)


def _all_collinear(coords: np.ndarray) -> bool:
    p0 = coords[0]
    for i in range(1, len(coords)):
        if coords[i][0] != p0[0] or coords[i][1] != p0[1]:
            base = i
            break
    else:
        return True
    # float screen first: a cross product clearly above roundoff certifies a
    # non-collinear triple without exact arithmetic
    u = coords - p0
    cr = u[:, 0] * u[base, 1] - u[:, 1] * u[base, 0]
    scale = np.abs(u).max() ** 2 + 1e-300
    if (np.abs(cr) > 1e-9 * scale).any():
        return False
    for i in range(len(coords)):
        if i != base and orient2d(p0, coords[base], coords[i]) != 0:
            return False
    return True


def _cocircular_suspects(coords: np.ndarray, sci) -> bool:
    """Vectorized screen: does any adjacent triangle pair sit within the float
    filter bound of exact cocircularity?"""
    s = sci.simplices
    nb = sci.neighbors
    rows = []
    for i in range(3):
        m = nb[:, i]
        t = np.nonzero(m > np.arange(len(s)))[0]
        if not len(t):
            continue
        mm = m[t]
        opp = s[t, i]
        e1 = s[t, (i + 1) % 3]
        e2 = s[t, (i + 2) % 3]
        far = s[mm].sum(axis=1) - e1 - e2
        rows.append((e1, e2, opp, far))
    for e1, e2, opp, far in rows:
        a, b, c, d = coords[e1], coords[e2], coords[opp], coords[far]
        adx, ady = a[:, 0] - d[:, 0], a[:, 1] - d[:, 1]
        bdx, bdy = b[:, 0] - d[:, 0], b[:, 1] - d[:, 1]
        cdx, cdy = c[:, 0] - d[:, 0], c[:, 1] - d[:, 1]
        alift = adx * adx + ady * ady
        blift = bdx * bdx + bdy * bdy
        clift = cdx * cdx + cdy * cdy
        det = (adx * (bdy * clift - blift * cdy)
               - ady * (bdx * clift - blift * cdx)
               + alift * (bdx * cdy - bdy * cdx))
        perm = ((np.abs(bdx * cdy) + np.abs(bdy * cdx)) * alift
                + (np.abs(cdx * ady) + np.abs(cdy * adx)) * blift
                + (np.abs(adx * bdy) + np.abs(ady * bdx)) * clift)
        if (np.abs(det) < _INCIRCLE_BOUND * perm * 4.0).any():
            return True
    return False


# ----------------------------------------------------------------------------
# Voronoi dual
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class VoronoiDiagram:
    """Dual tessellation of a Delaunay graph, clipped to a window.

    Voronoi vertices are triangle circumcenters. Every interior Delaunay edge
    (two incident triangles) owns the dual segment between the adjacent
    circumcenters; hull edges have no dual here and are excluded from the
    percolation universe. Cell polygons are materialized lazily.
    """

    graph: DelaunayGraph
    window: Window

    def __post_init__(self):
        et = self.graph.edge_triangles()
        interior = np.nonzero(et[:, 1] >= 0)[0]
        self.dual_edge_ids = interior
        self.dual_tri_pairs = et[interior]
        self._cells: Dict[int, List[Tuple[float, float]]] = {}
        self._dual_map = None

    @property
    def vor_vertices(self) -> np.ndarray:
        return self.graph.circumcenters()

    @property
    def n_dual_edges(self) -> int:
        return len(self.dual_edge_ids)

    def dual_segments(self) -> np.ndarray:
        """(D, 2, 2) array of dual segment endpoints (circumcenter pairs)."""
        cc = self.vor_vertices
        return np.stack([cc[self.dual_tri_pairs[:, 0]],
                         cc[self.dual_tri_pairs[:, 1]]], axis=1)

    def dual_edges(self) -> Dict[Tuple[int, int], Tuple[Tuple[float, float], Tuple[float, float]]]:
        """Delaunay edge (i, j) -> dual segment endpoint pair (cached)."""
        if self._dual_map is None:
            segs = self.dual_segments()
            ij = self.graph.edges[self.dual_edge_ids]
            self._dual_map = {
                (int(i), int(j)): ((float(a0), float(a1)),
                                   (float(b0), float(b1)))
                for (i, j), ((a0, a1), (b0, b1))
                in zip(ij.tolist(), segs.tolist())}
        return self._dual_map

    def cell_polygon(self, v: int) -> List[Tuple[float, float]]:
        """Voronoi cell of generator v as a convex polygon clipped to the window.

        Built as the intersection of the window with the bisector half-planes
        toward every Delaunay neighbor; for a Delaunay graph that intersection
        is exactly the cell.
        """
        if v in self._cells:
            return self._cells[v]
        w = self.window
        poly = [(w.lo.x, w.lo.y), (w.hi.x, w.lo.y), (w.hi.x, w.hi.y), (w.lo.x, w.hi.y)]
        p = self.graph.vertices.coords[v]
        for u in self.graph.neighbors(v):
            q = self.graph.vertices.coords[u]
            # keep side of the bisector closer to p: 2(q-p).x <= |q|^2 - |p|^2
            a = q[0] - p[0]
            b = q[1] - p[1]
            c = (q[0] * q[0] + q[1] * q[1] - p[0] * p[0] - p[1] * p[1]) / 2.0
            poly = clip_polygon_halfplane(poly, a, b, c)
            if not poly:
                break
        self._cells[v] = poly
        return poly

    @property
    def cells(self) -> Dict[int, List[Tuple[float, float]]]:
        for v in range(self.graph.n_vertices):
            self.cell_polygon(v)
        return self._cells


def build_voronoi_dual(delaunay: DelaunayGraph, window: Window) -> VoronoiDiagram:
    """Dual Voronoi structure of a triangulation.

    The edge bijection covers exactly the interior Delaunay edges; boundary
    cells are clipped to the window when their polygons are requested.
    """
    return VoronoiDiagram(delaunay, window)


def nearest_vertex(points: PointSet, x: float, y: float) -> int:
    """Lowest-index nearest generator, exact against a full linear scan.

    Small sets are scanned directly. Larger sets use a KD-tree only to
    shortlist candidates: all points within the nearest tree distance times
    (1 + 1e-12) are re-scored with the same squared-distance formula the scan
    uses, so the returned index never differs from the O(V) contract.
    """
    c = points.coords
    if len(c) == 0:
        raise GeometryError("empty point set")
    if len(c) <= _SCAN_CUTOFF:
        dx = c[:, 0] - x
        dy = c[:, 1] - y
        return int(np.argmin(dx * dx + dy * dy))
    tree = points.kdtree()
    d1, _ = tree.query((x, y))
    cand = tree.query_ball_point((x, y), d1 * (1.0 + 1e-12) + 1e-300)
    cand = np.sort(np.asarray(cand, dtype=np.int64))
    dx = c[cand, 0] - x
    dy = c[cand, 1] - y
    return int(cand[int(np.argmin(dx * dx + dy * dy))])


def locate_tile(x, diagram: VoronoiDiagram) -> int:
    """Index of the Voronoi tile containing x (nearest generator).

    Ties broken toward the lowest vertex index. x must lie inside the window
    minus its margin band.
    """
    px, py = float(x[0]), float(x[1])
    if not diagram.window.contains(px, py, inner=True):
        raise GeometryError("query point outside the admissible region")
    return nearest_vertex(diagram.graph.vertices, px, py)


# ----------------------------------------------------------------------------
# small planar kit shared by the percolation / renormalization / path layers
# ----------------------------------------------------------------------------

def seg_seg_intersect(p, q, a, b) -> bool:
    """Closed segment intersection test (orientation signs, collinear handled)."""

    def orient(u, v, w):
        d = (float(v[0]) - float(u[0])) * (float(w[1]) - float(u[1])) \
            - (float(v[1]) - float(u[1])) * (float(w[0]) - float(u[0]))
        return (d > 0.0) - (d < 0.0)

    o1 = orient(p, q, a)
    o2 = orient(p, q, b)
    o3 = orient(a, b, p)
    o4 = orient(a, b, q)
    if o1 != o2 and o3 != o4:
        return True

    def on_seg(u, v, w):
        return (orient(u, v, w) == 0
                and min(u[0], v[0]) <= w[0] <= max(u[0], v[0])
                and min(u[1], v[1]) <= w[1] <= max(u[1], v[1]))

    return on_seg(p, q, a) or on_seg(p, q, b) or on_seg(a, b, p) or on_seg(a, b, q)


def point_in_rect(x: float, y: float, rect, closed: bool = True) -> bool:
    x0, y0, x1, y1 = rect
    if closed:
        return x0 <= x <= x1 and y0 <= y <= y1
    return x0 < x < x1 and y0 < y < y1


def seg_intersects_rect(p, q, rect) -> bool:
    """Closed segment against closed axis rectangle (Liang-Barsky clip)."""
    x0, y0, x1, y1 = rect
    t0, t1 = 0.0, 1.0
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    for d, lo, hi in ((dx, x0 - p[0], x1 - p[0]), (dy, y0 - p[1], y1 - p[1])):
        if d == 0.0:
            if lo > 0.0 or hi < 0.0:
                return False
            continue
        ta, tb = lo / d, hi / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


def clip_polygon_halfplane(poly, a: float, b: float, c: float):
    """Clip a polygon to the half-plane a*x + b*y <= c (Sutherland-Hodgman)."""
    if not poly:
        return []
    out = []
    n = len(poly)
    for i in range(n):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % n]
        pin = a * px + b * py <= c
        qin = a * qx + b * qy <= c
        if pin:
            out.append((px, py))
        if pin != qin:
            denom = a * (qx - px) + b * (qy - py)
            t = (c - a * px - b * py) / denom
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def clip_polygon_box(poly, rect):
    x0, y0, x1, y1 = rect
    poly = clip_polygon_halfplane(poly, -1.0, 0.0, -x0)
    poly = clip_polygon_halfplane(poly, 1.0, 0.0, x1)
    poly = clip_polygon_halfplane(poly, 0.0, -1.0, -y0)
    poly = clip_polygon_halfplane(poly, 0.0, 1.0, y1)
    return poly


def polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    s = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def point_in_polygon(x: float, y: float, poly) -> bool:
    """Ray-cast membership (boundary points may fall either way)."""
    inside = False
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xi = x0 + (y - y0) / (y1 - y0) * (x1 - x0)
            if x < xi:
                inside = not inside
    return inside


# ----------------------------------------------------------------------------
# file formats
# ----------------------------------------------------------------------------

def save_points(points: PointSet, path: str) -> None:
    """Text export: header '# window lo.x lo.y hi.x hi.y margin', one 'x y'
    pair per line. repr round-trips float64 exactly."""
    w = points.window
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# window {w.lo.x!r} {w.lo.y!r} {w.hi.x!r} {w.hi.y!r} {w.margin!r}\n")
        for x, y in points.coords:
            f.write(f"{float(x)!r} {float(y)!r}\n")


def load_points(path: str) -> PointSet:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 7 or header[0] != "#" or header[1] != "window":
            raise GeometryError("malformed point file header")
        lx, ly, hx, hy, margin = (float(t) for t in header[2:])
        rows = []
        for line in f:
            line = line.strip()
            if line:
                a, b = line.split()
                rows.append((float(a), float(b)))
    window = Window(Point(lx, ly), Point(hx, hy), margin)
    return PointSet(np.asarray(rows, dtype=float).reshape(-1, 2), window)


def save_edges(graph: DelaunayGraph, path: str) -> None:
    """Edge-list export: '# vertices N' then one 'i j' line per edge."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# vertices {graph.n_vertices}\n")
        for i, j in graph.edges:
            f.write(f"{int(i)} {int(j)}\n")


def load_edges(path: str) -> Tuple[int, np.ndarray]:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 3 or header[0] != "#" or header[1] != "vertices":
            raise GeometryError("malformed edge file header")
        n = int(header[2])
        rows = [tuple(int(t) for t in line.split()) for line in f if line.strip()]
    return n, np.asarray(rows, dtype=np.int32).reshape(-1, 2)
