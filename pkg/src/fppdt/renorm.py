"""Renormalized-grid combinatorics: full boxes, circuits, lattice animals.

Boxes of side L sit at the scaled lattice L * z.  A box is full when each
of its 36 sub-boxes (a 6 x 6 split) holds at least one sample point.  On top
of fullness the module checks the cell-confinement property of circuits of
full boxes, computes greedy lattice-animal maxima and k-separated open
densities exactly on small grids, and estimates good-box densities.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .experiment import ExperimentResult, derive_seed, mean_ci, parallel_map
from .geometry import (GeometryError, PointSet, VoronoiDiagram, Window,
                       build_delaunay, build_voronoi_dual,
                       clip_polygon_halfplane, point_in_polygon, polygon_area,
                       sample_poisson)

Site = Tuple[int, int]


class RenormError(ValueError):
    """Invalid renormalization input or an exceeded exact-mode bound."""


class FullBoxPrecondition(RenormError):
    """A circuit operation was called on a circuit with non-full boxes."""


# ----------------------------------------------------------------------------
# site fields
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SiteField:
    """Values on lattice sites within an inclusive rectangular range.

    Missing sites read as zero (False for boolean fields).  Animal fields
    must be nonnegative.
    """

    values: Dict[Site, float]
    zlo: Site
    zhi: Site

    def __post_init__(self):
        if self.zlo[0] > self.zhi[0] or self.zlo[1] > self.zhi[1]:
            raise RenormError("empty site range")
        vals = {}
        for z, v in self.values.items():
            z = (int(z[0]), int(z[1]))
            if not self.in_bounds(z):
                raise RenormError("site %r outside the field range" % (z,))
            if isinstance(v, (bool, np.bool_)):
                vals[z] = bool(v)
            else:
                v = float(v)
                if not math.isfinite(v) or v < 0.0:
                    raise RenormError("field values must be finite and >= 0")
                vals[z] = v
        object.__setattr__(self, "values", vals)

    def in_bounds(self, z: Site) -> bool:
        return (self.zlo[0] <= z[0] <= self.zhi[0]
                and self.zlo[1] <= z[1] <= self.zhi[1])

    def __getitem__(self, z: Site):
        return self.values.get((int(z[0]), int(z[1])), 0)

    def sites(self) -> Iterable[Site]:
        for zx in range(self.zlo[0], self.zhi[0] + 1):
            for zy in range(self.zlo[1], self.zhi[1] + 1):
                yield (zx, zy)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.zhi[0] - self.zlo[0] + 1, self.zhi[1] - self.zlo[1] + 1)


def save_field(field: SiteField, path: str) -> None:
    """Write every in-range site as a "zx zy value" line."""
    with open(path, "w") as fh:
        fh.write("# range %d %d %d %d\n" % (field.zlo[0], field.zlo[1],
                                            field.zhi[0], field.zhi[1]))
        for z in field.sites():
            v = field[z]
            fh.write("%d %d %s\n" % (z[0], z[1], repr(float(v))))


def load_field(path: str) -> SiteField:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 6 or header[0] != "#" or header[1] != "range":
            raise RenormError("malformed field file header")
        x0, y0, x1, y1 = (int(t) for t in header[2:])
        values = {}
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            values[(int(parts[0]), int(parts[1]))] = float(parts[2])
    return SiteField(values, (x0, y0), (x1, y1))


# ----------------------------------------------------------------------------
# animals
# ----------------------------------------------------------------------------

_NEIGH4 = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class Animal:
    """Finite connected set of lattice sites containing the origin."""

    sites: frozenset

    def __post_init__(self):
        sites = frozenset((int(a), int(b)) for a, b in self.sites)
        object.__setattr__(self, "sites", sites)
        if (0, 0) not in sites:
            raise RenormError("animal must contain the origin")
        seen = {(0, 0)}
        stack = [(0, 0)]
        while stack:
            x, y = stack.pop()
            for dx, dy in _NEIGH4:
                n = (x + dx, y + dy)
                if n in sites and n not in seen:
                    seen.add(n)
                    stack.append(n)
        if len(seen) != len(sites):
            raise RenormError("animal sites are not connected")

    @property
    def size(self) -> int:
        return len(self.sites)


def _field_arrays(field: SiteField):
    """Flat cell indexing of the field range plus value and neighbor tables."""
    (x0, y0), (x1, y1) = field.zlo, field.zhi
    w = x1 - x0 + 1
    h = y1 - y0 + 1
    ncell = w * h

    def cid(z: Site) -> int:
        return (z[0] - x0) * h + (z[1] - y0)

    cell_site = [None] * ncell
    value = [0.0] * ncell
    nbr = [0] * ncell
    for zx in range(x0, x1 + 1):
        for zy in range(y0, y1 + 1):
            i = cid((zx, zy))
            cell_site[i] = (zx, zy)
            value[i] = float(field[(zx, zy)])
            m = 0
            for dx, dy in _NEIGH4:
                q = (zx + dx, zy + dy)
                if field.in_bounds(q):
                    m |= 1 << cid(q)
            nbr[i] = m
    return cid, cell_site, value, nbr


def _enumerate_animal_maxima(field: SiteField, s: int):
    """Best value and witness mask per animal size up to s.

    Depth-first growth from the origin cell, deduplicated by a table of
    visited site-set masks so every animal is scored exactly once.
    """
    cid, cell_site, value, nbr = _field_arrays(field)
    o = cid((0, 0))
    best: List[Optional[Tuple[float, int]]] = [None] * (s + 1)
    start = 1 << o
    best[1] = (value[o], start)
    seen = {start}
    stack = [(start, nbr[o] & ~start, value[o], 1)]
    while stack:
        mask, ext, val, size = stack.pop()
        if size == s:
            continue
        e = ext
        while e:
            bit = e & -e
            e ^= bit
            new = mask | bit
            if new in seen:
                continue
            seen.add(new)
            j = bit.bit_length() - 1
            nval = val + value[j]
            nsize = size + 1
            if best[nsize] is None or nval > best[nsize][0]:
                best[nsize] = (nval, new)
            stack.append((new, (ext | nbr[j]) & ~new, nval, nsize))
    return best, cell_site


def _mask_to_animal(mask: int, cell_site) -> Animal:
    sites = []
    m = mask
    while m:
        bit = m & -m
        m ^= bit
        sites.append(cell_site[bit.bit_length() - 1])
    return Animal(frozenset(sites))


def _greedy_heuristic(field: SiteField, s: int) -> Tuple[float, Animal]:
    """Greedy growth plus single-site swap improvement; a lower bound."""
    current = {(0, 0)}
    while len(current) < s:
        cand = set()
        for x, y in current:
            for dx, dy in _NEIGH4:
                q = (x + dx, y + dy)
                if q not in current and field.in_bounds(q):
                    cand.add(q)
        if not cand:
            break
        current.add(max(cand, key=lambda z: (field[z], (-z[0], -z[1]))))

    def total(sites):
        return sum(float(field[z]) for z in sites)

    def connected(sites):
        if (0, 0) not in sites:
            return False
        seen = {(0, 0)}
        stack = [(0, 0)]
        while stack:
            x, y = stack.pop()
            for dx, dy in _NEIGH4:
                q = (x + dx, y + dy)
                if q in sites and q not in seen:
                    seen.add(q)
                    stack.append(q)
        return len(seen) == len(sites)

    improved = True
    rounds = 0
    while improved and rounds < 100:
        improved = False
        rounds += 1
        for z in sorted(current):
            if z == (0, 0):
                continue
            rest = current - {z}
            if not rest or not connected(rest):
                continue
            cand = set()
            for x, y in rest:
                for dx, dy in _NEIGH4:
                    q = (x + dx, y + dy)
                    if q not in rest and field.in_bounds(q):
                        cand.add(q)
            cand.discard(z)
            for q in sorted(cand, key=lambda w: -float(field[w])):
                if float(field[q]) <= float(field[z]):
                    break
                trial = rest | {q}
                if connected(trial):
                    current = trial
                    improved = True
                    break
            if improved:
                break
    return total(current), Animal(frozenset(current))


def greedy_animal(field: SiteField, s: int,
                  mode: str = "exact") -> Tuple[float, Animal]:
    """Maximum field sum over animals with at most s sites, with a witness.

    Exact mode enumerates every origin-containing animal of at most s sites
    inside the field range (s capped at 12).  Heuristic mode grows greedily
    and improves by local swaps; its value is a lower bound on the true
    maximum.
    """
    if s < 1:
        raise RenormError("animal size cap must be >= 1")
    if not field.in_bounds((0, 0)):
        raise RenormError("field range must contain the origin")
    if mode == "exact":
        if s > 12:
            raise RenormError("exact mode is capped at s = 12")
        best, cell_site = _enumerate_animal_maxima(field, s)
        val, mask = max((b for b in best if b is not None),
                        key=lambda t: t[0])
        return val, _mask_to_animal(mask, cell_site)
    if mode == "heuristic":
        return _greedy_heuristic(field, s)
    raise RenormError("unknown mode %r" % (mode,))


def animal_growth_scan(dist, s_grid: Sequence[int], replicas: int,
                       seed: int) -> ExperimentResult:
    """Sampled maxima of animal sums per size cap, on i.i.d. site values.

    dist is a weight distribution or a callable (rng, size) -> values.  One
    enumeration per replica covers every s in the grid.  Reports the mean
    and max of M_s / s per s and whether the max ratio has stabilized over
    the last two grid points (relative change at most 10 percent).
    """
    s_grid = sorted(set(int(s) for s in s_grid))
    if not s_grid or s_grid[0] < 1:
        raise RenormError("size grid must hold positive integers")
    smax = s_grid[-1]
    if smax > 12:
        raise RenormError("exact mode is capped at s = 12")
    if replicas < 1:
        raise RenormError("need at least one replica")
    half = smax - 1
    zlo, zhi = (-half, -half), (half, half)
    ncell = (2 * half + 1) ** 2

    def sample_values(rng, size):
        if hasattr(dist, "sample"):
            return dist.sample(rng, size)
        return np.asarray(dist(rng, size), dtype=float)

    def one(rep: int):
        rep_seed = derive_seed(seed, "replica", rep)
        rng = np.random.default_rng(rep_seed & ((1 << 64) - 1))
        vals = sample_values(rng, ncell)
        if np.any(vals < 0):
            raise RenormError("animal fields must be nonnegative")
        values = {}
        k = 0
        for zx in range(-half, half + 1):
            for zy in range(-half, half + 1):
                values[(zx, zy)] = float(vals[k])
                k += 1
        field = SiteField(values, zlo, zhi)
        best, _ = _enumerate_animal_maxima(field, smax)
        running = []
        top = -1.0
        for size in range(1, smax + 1):
            if best[size] is not None:
                top = max(top, best[size][0])
            running.append(top)
        return rep, rep_seed, [running[s - 1] for s in s_grid]

    out = parallel_map(one, replicas)
    rows = []
    cells = []
    max_ratio = []
    for k, s in enumerate(s_grid):
        ratios = []
        for rep, rep_seed, ms in out:
            rows.append((s, rep, ms[k], ms[k] / s, rep_seed))
            ratios.append(ms[k] / s)
        stats = mean_ci(ratios)
        mx = max(ratios)
        max_ratio.append(mx)
        cells.append(dict(s=s, max_ratio=mx, **stats))
    if len(max_ratio) >= 2 and max_ratio[-2] > 0:
        stabilized = (abs(max_ratio[-1] - max_ratio[-2])
                      <= 0.1 * max_ratio[-2])
    else:
        stabilized = max_ratio[-1] == (max_ratio[-2] if len(max_ratio) > 1
                                       else max_ratio[-1])
    return ExperimentResult(
        command="animal-scan",
        params=dict(dist=str(dist), s_grid=list(s_grid), replicas=replicas,
                    seed=seed),
        columns=["s", "replica", "M_s", "ratio", "seed"],
        rows=rows,
        cells=cells,
        extra=dict(max_ratio_by_s=max_ratio, stabilized=bool(stabilized)))


# ----------------------------------------------------------------------------
# k-separated open density
# ----------------------------------------------------------------------------

def _max_k_separated(sites: List[Site], k: int) -> int:
    """Largest subset with pairwise sup-distance >= k, by branch and bound."""
    n = len(sites)
    if n > 25:
        raise RenormError("independent-set search is capped at 25 sites")
    conflict = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if max(abs(sites[i][0] - sites[j][0]),
                   abs(sites[i][1] - sites[j][1])) < k:
                conflict[i] |= 1 << j
                conflict[j] |= 1 << i
    best = 0

    def grow(i: int, chosen: int, count: int):
        nonlocal best
        if count + (n - i) <= best:
            return
        if i == n:
            best = max(best, count)
            return
        if not (chosen & (1 << i)):
            grow(i + 1, chosen | conflict[i], count + 1)
        grow(i + 1, chosen, count)

    grow(0, 0, 0)
    return best


def open_density(field: SiteField, s: int, k: int) -> int:
    """Exact min over >= s-site animals of the max k-separated open count.

    The minimum over animals with at least s sites is attained at exactly s
    sites (the inner maximum is monotone under adding sites), so only those
    are enumerated.  Bounds: grid at most 7 x 7, s at most 10.
    """
    if s < 1 or k < 1:
        raise RenormError("s and k must be positive")
    w, h = field.shape
    if w > 7 or h > 7:
        raise RenormError("exact density is capped at a 7 x 7 grid")
    if s > 10:
        raise RenormError("exact density is capped at s = 10")
    if not field.in_bounds((0, 0)):
        raise RenormError("field range must contain the origin")

    cid, cell_site, value, nbr = _field_arrays(field)
    o = cid((0, 0))
    start = 1 << o
    seen = {start}
    stack = [(start, nbr[o] & ~start, 1)]
    best: Optional[int] = None
    if s == 1:
        opens = [cell_site[o]] if field[(0, 0)] else []
        best = _max_k_separated(opens, k)
    while stack:
        mask, ext, size = stack.pop()
        if size == s:
            continue
        e = ext
        while e:
            bit = e & -e
            e ^= bit
            new = mask | bit
            if new in seen:
                continue
            seen.add(new)
            j = bit.bit_length() - 1
            nsize = size + 1
            if nsize == s:
                opens = []
                m = new
                while m:
                    b = m & -m
                    m ^= b
                    z = cell_site[b.bit_length() - 1]
                    if field[z]:
                        opens.append(z)
                got = _max_k_separated(opens, k)
                if best is None or got < best:
                    best = got
                if best == 0:
                    return 0
            else:
                stack.append((new, (ext | nbr[j]) & ~new, nsize))
    if best is None:
        raise RenormError("no animal with %d sites fits the grid" % s)
    return best


# ----------------------------------------------------------------------------
# full boxes and circuits
# ----------------------------------------------------------------------------

def is_full_box(box, points) -> bool:
    """True iff every sub-box of the 6 x 6 split holds at least one point.

    box is (xlo, ylo, xhi, yhi); membership is half-open per axis with the
    top edge folded into the last row/column so the box itself is closed.
    """
    x0, y0, x1, y1 = box
    if not (x0 < x1 and y0 < y1):
        raise RenormError("box must have positive extent")
    coords = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    if len(coords) < 36:
        return False
    x = coords[:, 0]
    y = coords[:, 1]
    inside = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
    if inside.sum() < 36:
        return False
    ix = np.minimum(((x[inside] - x0) / (x1 - x0) * 6.0).astype(np.int64), 5)
    iy = np.minimum(((y[inside] - y0) / (y1 - y0) * 6.0).astype(np.int64), 5)
    return bool(len(np.unique(ix * 6 + iy)) == 36)


@dataclass(frozen=True)
class BoxCircuit:
    """Cyclic run of grid boxes whose centers trace a lattice circuit.

    centers lists distinct lattice sites; consecutive entries (cyclically)
    differ by one unit step.  Boxes have side r around r * z.  The polygon
    through the scaled centers separates the inner region from the outer
    one; the box union splits the rest of the plane the same way.
    """

    centers: Tuple[Site, ...]
    r: float

    def __post_init__(self):
        centers = tuple((int(a), int(b)) for a, b in self.centers)
        object.__setattr__(self, "centers", centers)
        if self.r <= 0:
            raise RenormError("box scale must be positive")
        if len(centers) < 4:
            raise RenormError("a circuit needs at least four boxes")
        if len(set(centers)) != len(centers):
            raise RenormError("circuit centers must be distinct")
        for a, b in zip(centers, centers[1:] + centers[:1]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                raise RenormError("consecutive circuit centers must be"
                                  " lattice neighbors")

    def box_bounds(self, z: Site):
        half = self.r / 2.0
        return (self.r * z[0] - half, self.r * z[1] - half,
                self.r * z[0] + half, self.r * z[1] + half)

    def boxes(self):
        return [self.box_bounds(z) for z in self.centers]

    def polygon(self) -> List[Tuple[float, float]]:
        return [(self.r * z[0], self.r * z[1]) for z in self.centers]

    def bbox(self):
        xs = [b for z in self.centers for b in
              (self.r * z[0] - self.r / 2, self.r * z[0] + self.r / 2)]
        ys = [b for z in self.centers for b in
              (self.r * z[1] - self.r / 2, self.r * z[1] + self.r / 2)]
        return min(xs), min(ys), max(xs), max(ys)


def _poly_centroid(poly) -> Tuple[float, float]:
    a2 = 0.0
    cx = 0.0
    cy = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        cross = x0 * y1 - x1 * y0
        a2 += cross
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    if a2 == 0.0:
        xs = [p[0] for p in poly]
        ys = [p[1] for p in poly]
        return sum(xs) / n, sum(ys) / n
    return cx / (3.0 * a2), cy / (3.0 * a2)


def _subtract_box(polys: List[list], box) -> List[list]:
    """Pieces of the given convex polygons outside the closed box."""
    x0, y0, x1, y1 = box
    out = []
    for poly in polys:
        candidates = [
            clip_polygon_halfplane(poly, 1.0, 0.0, x0),
            clip_polygon_halfplane(poly, -1.0, 0.0, -x1),
            clip_polygon_halfplane(
                clip_polygon_halfplane(
                    clip_polygon_halfplane(poly, -1.0, 0.0, -x0),
                    1.0, 0.0, x1),
                0.0, 1.0, y0),
            clip_polygon_halfplane(
                clip_polygon_halfplane(
                    clip_polygon_halfplane(poly, -1.0, 0.0, -x0),
                    1.0, 0.0, x1),
                0.0, -1.0, -y1),
        ]
        for piece in candidates:
            if len(piece) >= 3 and abs(polygon_area(piece)) > 1e-12:
                out.append(piece)
    return out


def _orient_sign(a, b, c) -> float:
    return ((b[0] - a[0]) * (c[1] - a[1])
            - (b[1] - a[1]) * (c[0] - a[0]))


def _proper_cross(a, b, c, d) -> bool:
    o1 = _orient_sign(a, b, c)
    o2 = _orient_sign(a, b, d)
    o3 = _orient_sign(c, d, a)
    o4 = _orient_sign(c, d, b)
    return o1 * o2 < 0.0 and o3 * o4 < 0.0


def circuit_separation_check(circuit: BoxCircuit, points: PointSet,
                             diagram: VoronoiDiagram) -> bool:
    """Cell confinement across a circuit of full boxes.

    True iff no Voronoi cell meets both the inner box-free region and the
    outer side of the center polygon, nor both the outer box-free region
    and the inner side.  Raises FullBoxPrecondition when a circuit box is
    not full, since the property is only claimed under fullness.
    """
    for z in circuit.centers:
        if not is_full_box(circuit.box_bounds(z), points):
            raise FullBoxPrecondition("circuit box at %r is not full" % (z,))
    lam = circuit.polygon()
    boxes = circuit.boxes()
    bx0, by0, bx1, by1 = circuit.bbox()
    coords = points.coords
    n = len(coords)
    for v in range(n):
        cell = diagram.cell_polygon(v)
        if len(cell) < 3:
            continue
        xs = [p[0] for p in cell]
        ys = [p[1] for p in cell]
        if max(xs) < bx0 or min(xs) > bx1 or max(ys) < by0 or min(ys) > by1:
            continue
        # box-free pieces of the cell, classified by the center polygon
        pieces = [list(cell)]
        for box in boxes:
            pieces = _subtract_box(pieces, box)
            if not pieces:
                break
        in_lambda_in = False
        in_lambda_out = False
        hits_inner = False
        hits_outer = False
        for piece in pieces:
            cx, cy = _poly_centroid(piece)
            if point_in_polygon(cx, cy, lam):
                hits_inner = True
            else:
                hits_outer = True
        for p in cell:
            if point_in_polygon(p[0], p[1], lam):
                in_lambda_in = True
            else:
                in_lambda_out = True
        if not (in_lambda_in and in_lambda_out):
            m = len(lam)
            for i in range(len(cell)):
                a, b = cell[i], cell[(i + 1) % len(cell)]
                for j in range(m):
                    if _proper_cross(a, b, lam[j], lam[(j + 1) % m]):
                        in_lambda_in = True
                        in_lambda_out = True
                        break
                if in_lambda_in and in_lambda_out:
                    break
        if (hits_inner and in_lambda_out) or (hits_outer and in_lambda_in):
            return False
    return True


# ----------------------------------------------------------------------------
# good-box density probe
# ----------------------------------------------------------------------------

_DEFAULT_SEP = {"Y": 3, "Z": 1, "V": 3, "W": 5}


def good_box_density_probe(variant: str, params: Dict[str, object],
                           replicas: int, seed: int) -> ExperimentResult:
    """Good-box fraction per box side L, plus an independence check.

    For each replica a fresh point process (and bond field for variants V
    and W, open with probability params["p"]) is classified on every box
    side in params["L_grid"].  The fraction of good boxes is averaged per
    L.  At the largest L, indicator pairs at lattice distance params["l"]
    (default: the variant's claimed dependence range) are pooled across
    replicas into a sample correlation with a Fisher interval.
    """
    from .percolation import classify_good_boxes, open_bonds

    if variant not in ("Y", "Z", "V", "W"):
        raise RenormError("unknown good-box variant %r" % (variant,))
    if replicas < 1:
        raise RenormError("need at least one replica")
    l_grid = [float(L) for L in params.get("L_grid", [8.0])]
    if not l_grid or min(l_grid) <= 0:
        raise RenormError("L_grid must hold positive box sides")
    G = int(params.get("G", 5))
    p = float(params.get("p", 0.9))
    sep = int(params.get("l", _DEFAULT_SEP[variant]))
    intensity = float(params.get("intensity", 1.0))
    margin = float(params.get("margin", 6.0))
    Lmax = max(l_grid)
    side = (G + 4) * Lmax + 2 * margin
    window = Window((0.0, 0.0), (side, side), margin)
    needs_bonds = variant in ("V", "W")

    def one(rep: int):
        rep_seed = derive_seed(seed, "replica", rep)
        try:
            pts = sample_poisson(window, intensity,
                                 derive_seed(rep_seed, "points"))
            diagram = None
            bonds = None
            if needs_bonds:
                graph = build_delaunay(pts)
                diagram = build_voronoi_dual(graph, window)
                bonds = open_bonds(diagram, p, derive_seed(rep_seed, "bonds"))
        except GeometryError:
            return rep, rep_seed, None
        fields = {}
        for L in l_grid:
            fields[L] = classify_good_boxes(variant, {"L": L}, pts, diagram,
                                            bonds)
        return rep, rep_seed, fields

    out = parallel_map(one, replicas)
    ok = [(rep, s, f) for rep, s, f in out if f is not None]
    if not ok:
        raise RenormError("all replicas degenerate")
    failures = replicas - len(ok)

    rows = []
    cells = []
    for L in l_grid:
        fracs = []
        for rep, rep_seed, fields in ok:
            field = fields[L]
            vals = [1.0 if field[z] else 0.0 for z in field.values]
            frac = sum(vals) / len(vals) if vals else 0.0
            fracs.append(frac)
            rows.append((L, rep, frac, rep_seed))
        cells.append(dict(L=L, n_sites=len(ok[0][2][L].values), **mean_ci(fracs)))

    # pooled pair correlation at the dependence distance, largest L
    Lc = l_grid[-1]
    xs = []
    ys = []
    for rep, rep_seed, fields in ok:
        field = fields[Lc]
        for z in field.values:
            z2 = (z[0] + sep, z[1])
            if z2 in field.values:
                xs.append(1.0 if field[z] else 0.0)
                ys.append(1.0 if field[z2] else 0.0)
    corr = dict(l=sep, pairs=len(xs), corr=float("nan"),
                ci_low=float("nan"), ci_high=float("nan"))
    if len(xs) >= 4:
        xa = np.asarray(xs)
        ya = np.asarray(ys)
        if xa.std() > 0 and ya.std() > 0:
            r = float(np.corrcoef(xa, ya)[0, 1])
            zf = math.atanh(max(-0.999999, min(0.999999, r)))
            half = 1.96 / math.sqrt(len(xs) - 3)
            corr = dict(l=sep, pairs=len(xs), corr=r,
                        ci_low=math.tanh(zf - half),
                        ci_high=math.tanh(zf + half))
    return ExperimentResult(
        command="good-box-density",
        params=dict(variant=variant, L_grid=l_grid, G=G, p=p, l=sep,
                    replicas=replicas, seed=seed, intensity=intensity,
                    margin=margin),
        columns=["L", "replica", "fraction", "seed"],
        rows=rows,
        cells=cells,
        extra=dict(geometry_failures=failures, correlation=corr))
