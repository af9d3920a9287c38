"""Independent brute-force oracles used to cross-check the library.

Everything in this file is deliberately written against plain Python data
(coordinate arrays, adjacency dicts, edge lists) with no imports from the
package under test, and favors the dumbest correct algorithm available:
exact rational arithmetic, exhaustive enumeration, linear scans. Oracles are
the reference side of every dual-route check, so clarity beats speed here.
"""

from fractions import Fraction
from itertools import combinations
import math

import numpy as np


# ----------------------------------------------------------------------------
# exact geometric predicates (pure Fraction arithmetic, no float filtering)
# ----------------------------------------------------------------------------

def orient_exact(a, b, c):
    """Sign of the signed area of triangle (a,b,c): +1 ccw, -1 cw, 0 collinear."""
    ax, ay = Fraction(float(a[0])), Fraction(float(a[1]))
    bx, by = Fraction(float(b[0])), Fraction(float(b[1]))
    cx, cy = Fraction(float(c[0])), Fraction(float(c[1]))
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def incircle_exact(a, b, c, d):
    """Sign of the incircle determinant for d against triangle (a,b,c).

    Positive means d lies strictly inside the circumcircle of (a,b,c) when
    (a,b,c) is counterclockwise; the sign flips with orientation. Exact.
    """
    rows = []
    dx, dy = Fraction(float(d[0])), Fraction(float(d[1]))
    for p in (a, b, c):
        px, py = Fraction(float(p[0])), Fraction(float(p[1]))
        ex, ey = px - dx, py - dy
        rows.append((ex, ey, ex * ex + ey * ey))
    (a1, a2, a3), (b1, b2, b3), (c1, c2, c3) = rows
    det = (a1 * (b2 * c3 - b3 * c2)
           - a2 * (b1 * c3 - b3 * c1)
           + a3 * (b1 * c2 - b2 * c1))
    return (det > 0) - (det < 0)


def point_in_circumdisk(a, b, c, d):
    """True iff d is strictly inside the circumdisk of triangle (a,b,c)."""
    o = orient_exact(a, b, c)
    if o == 0:
        raise ValueError("degenerate triangle")
    return incircle_exact(a, b, c, d) * o > 0


def empty_circumcircle_violations(coords, triangles):
    """All (triangle, vertex) pairs where the vertex is strictly inside the
    triangle's circumdisk. Empty list certifies the Delaunay property.

    Uses a vectorized float screen and settles every near-zero case with the
    exact predicate, so the verdict itself is exact.
    """
    coords = np.asarray(coords, dtype=float)
    out = []
    for tri in triangles:
        i, j, k = (int(t) for t in tri)
        a, b, c = coords[i], coords[j], coords[k]
        others = [v for v in range(len(coords)) if v not in (i, j, k)]
        if not others:
            continue
        d = coords[others]
        adx, ady = a[0] - d[:, 0], a[1] - d[:, 1]
        bdx, bdy = b[0] - d[:, 0], b[1] - d[:, 1]
        cdx, cdy = c[0] - d[:, 0], c[1] - d[:, 1]
        alift = adx * adx + ady * ady
        blift = bdx * bdx + bdy * bdy
        clift = cdx * cdx + cdy * cdy
        det = (adx * (bdy * clift - blift * cdy)
               - ady * (bdx * clift - blift * cdx)
               + alift * (bdx * cdy - bdy * cdx))
        mag = (np.abs(adx * bdy * clift) + np.abs(adx * blift * cdy)
               + np.abs(ady * bdx * clift) + np.abs(ady * blift * cdx)
               + np.abs(alift * bdx * cdy) + np.abs(alift * bdy * cdx))
        orient = orient_exact(a, b, c)
        suspects = np.abs(det) <= 1e-12 * mag
        inside = det * orient > 0
        for pos in np.nonzero(inside | suspects)[0]:
            v = others[pos]
            if point_in_circumdisk(a, b, c, coords[v]):
                out.append(((i, j, k), v))
    return out


def brute_nearest(coords, q):
    """Lowest-index argmin of squared distance; the O(V) locate_tile contract."""
    coords = np.asarray(coords, dtype=float)
    dx = coords[:, 0] - float(q[0])
    dy = coords[:, 1] - float(q[1])
    return int(np.argmin(dx * dx + dy * dy))


def euler_characteristic(n_vertices, n_edges, n_triangles):
    """V - E + F with the outer face counted (F = triangles + 1)."""
    return n_vertices - n_edges + (n_triangles + 1)


def segments_intersect_exact(p, q, a, b):
    """Closed segment-segment intersection decided with exact orientations."""
    o1 = orient_exact(p, q, a)
    o2 = orient_exact(p, q, b)
    o3 = orient_exact(a, b, p)
    o4 = orient_exact(a, b, q)
    if o1 != o2 and o3 != o4:
        return True

    def on_seg(u, v, w):
        # collinear w within bounding box of [u,v]
        if orient_exact(u, v, w) != 0:
            return False
        return (min(u[0], v[0]) <= w[0] <= max(u[0], v[0])
                and min(u[1], v[1]) <= w[1] <= max(u[1], v[1]))

    return on_seg(p, q, a) or on_seg(p, q, b) or on_seg(a, b, p) or on_seg(a, b, q)


# ----------------------------------------------------------------------------
# exhaustive first-passage oracles
# ----------------------------------------------------------------------------

def path_time_exact(weights, path):
    """Exact rational path sum; float64 weights are dyadic so Fraction(w) is
    lossless. weights: dict keyed by sorted vertex pair."""
    acc = Fraction(0)
    for u, v in zip(path[:-1], path[1:]):
        key = (u, v) if u < v else (v, u)
        acc += Fraction(float(weights[key]))
    return acc


def path_time(weights, path):
    """Correctly rounded float of the exact path sum (equals math.fsum of the
    edge weights, the library's documented accumulation contract)."""
    return float(path_time_exact(weights, path))


def enumerate_min_path(adj, weights, u, v):
    """Exhaustive minimum over all self-avoiding u-v paths, exact arithmetic.

    Returns (Fraction time, path); ties in exact time are broken by the
    lexicographically smallest vertex sequence. None if unreachable.
    """
    best = [None, None]

    def rec(node, visited, seq):
        if node == v:
            t = path_time_exact(weights, seq)
            if best[0] is None or t < best[0] or (t == best[0] and seq < best[1]):
                best[0] = t
                best[1] = list(seq)
            return
        for w in sorted(adj[node]):
            if w not in visited:
                visited.add(w)
                seq.append(w)
                rec(w, visited, seq)
                seq.pop()
                visited.remove(w)

    rec(u, {u}, [u])
    if best[1] is None:
        return None
    return best[0], best[1]


def enumerate_reached(adj, weights, source, t):
    """Vertices whose exhaustive exact minimum time from source is <= t."""
    ft = Fraction(float(t))
    out = set()
    for v in adj:
        if v == source:
            out.add(v)
            continue
        r = enumerate_min_path(adj, weights, source, v)
        if r is not None and r[0] <= ft:
            out.add(v)
    return out


# ----------------------------------------------------------------------------
# self-avoiding path enumeration (second, independently structured enumerators)
# ----------------------------------------------------------------------------

def count_saps_iterative(adj, v0, r):
    """Count r-edge self-avoiding paths from v0 with an explicit stack."""
    if r == 0:
        return 1
    count = 0
    stack = [(v0, frozenset([v0]), 0)]
    while stack:
        node, visited, depth = stack.pop()
        for w in adj[node]:
            if w in visited:
                continue
            if depth + 1 == r:
                count += 1
            else:
                stack.append((w, visited | {w}, depth + 1))
    return count


def min_time_long_path(adj, weights, v0, r):
    """Exact t_r as a Fraction: minimum path sum over self-avoiding paths
    from v0 with at least r edges, enumerated directly (no prefix-reduction
    argument). None when no path reaches r edges.
    """
    best = [None]

    def rec(node, visited, depth, acc):
        if depth >= r:
            if best[0] is None or acc < best[0]:
                best[0] = acc
        for w in adj[node]:
            if w in visited:
                continue
            key = (node, w) if node < w else (w, node)
            visited.add(w)
            rec(w, visited, depth + 1, acc + Fraction(float(weights[key])))
            visited.remove(w)

    rec(v0, {v0}, 0, Fraction(0))
    return best[0]


def path_animal_extrema(adj, coords, v0, r, box_side, at_least=True):
    """Exact (min, max) of |A(gamma)| over self-avoiding paths from v0.

    at_least=True: paths with >= r edges for the min; <= r edges for the max
    (both enumerated without relying on prefix monotonicity). Box animal via
    the exact supercover of each edge segment.
    """
    lo = [math.inf]
    hi = [0]

    def boxes_of(seq):
        out = set()
        for a, b in zip(seq[:-1], seq[1:]):
            out |= supercover_boxes(coords[a], coords[b], box_side)
        if len(seq) == 1:
            out |= boxes_of_point(coords[seq[0]], box_side)
        return out

    def rec(node, visited, seq):
        nb = len(seq) - 1
        if at_least and nb >= r:
            lo[0] = min(lo[0], len(boxes_of(seq)))
        if not at_least and 1 <= nb <= r:
            hi[0] = max(hi[0], len(boxes_of(seq)))
        for w in adj[node]:
            if w in visited:
                continue
            visited.add(w)
            seq.append(w)
            rec(w, visited, seq)
            seq.pop()
            visited.remove(w)

    rec(v0, {v0}, [v0])
    return lo[0], hi[0]


# ----------------------------------------------------------------------------
# box supercover rasterization (exact, boundary-inclusive)
# ----------------------------------------------------------------------------

def boxes_of_point(p, L):
    """All lattice sites z whose closed box [Lz - L/2, Lz + L/2]^2 contains p."""
    out = set()
    x, y = float(p[0]), float(p[1])
    zx0 = math.floor(x / L - 0.5)
    zy0 = math.floor(y / L - 0.5)
    for zx in (zx0, zx0 + 1, zx0 + 2):
        for zy in (zy0, zy0 + 1, zy0 + 2):
            if (L * zx - L / 2 <= x <= L * zx + L / 2
                    and L * zy - L / 2 <= y <= L * zy + L / 2):
                out.add((zx, zy))
    return out


def supercover_boxes(p, q, L):
    """Every lattice site z whose closed box meets segment [p, q].

    Splits the segment at all gridline crossings (x or y = L(k+1/2)), takes the
    box of each sub-segment midpoint, and adds the boxes of every crossing
    point and both endpoints (closed boxes share their boundaries).
    """
    px, py = float(p[0]), float(p[1])
    qx, qy = float(q[0]), float(q[1])
    ts = {0.0, 1.0}
    for (c0, c1) in ((px, qx), (py, qy)):
        lo, hi = min(c0, c1), max(c0, c1)
        k0 = math.floor(lo / L - 0.5)
        k1 = math.ceil(hi / L + 0.5)
        for k in range(k0, k1 + 1):
            line = L * (k + 0.5)
            if c1 != c0 and lo <= line <= hi:
                ts.add((line - c0) / (c1 - c0))
    ts = sorted(t for t in ts if 0.0 <= t <= 1.0)
    out = set()
    pts = [(px + t * (qx - px), py + t * (qy - py)) for t in ts]
    for a, b in zip(ts[:-1], ts[1:]):
        tm = 0.5 * (a + b)
        mid = (px + tm * (qx - px), py + tm * (qy - py))
        out |= boxes_of_point(mid, L)
    for pt in pts:
        out |= boxes_of_point(pt, L)
    return out


# ----------------------------------------------------------------------------
# percolation oracles
# ----------------------------------------------------------------------------

def _seg_hits_vertical(p, q, x, y0, y1):
    """Closed segment [p,q] intersects the vertical segment {x} x [y0,y1]."""
    return segments_intersect_exact(p, q, (x, y0), (x, y1))


def brute_crossing(vor_coords, open_edges, rect):
    """Exhaustive self-avoiding open-path search for the crossing event.

    rect = (x0, y0, x1, y1); source side {x0} x [y0,y1], target side {x1} x
    [y0,y1]. The path (v1..vh) qualifies iff [v1,v2] meets the source side,
    [v_{h-1},v_h] meets the target side, and v2..v_{h-1} lie in the closed
    rectangle. Only v2..v_{h-1} are confined; endpoints roam.
    """
    x0, y0, x1, y1 = rect
    pts = {i: (float(vor_coords[i][0]), float(vor_coords[i][1]))
           for i in range(len(vor_coords))}
    adj = {}
    for a, b in open_edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)

    def in_rect(i):
        px, py = pts[i]
        return x0 <= px <= x1 and y0 <= py <= y1

    def hits_source(a, b):
        return _seg_hits_vertical(pts[a], pts[b], x0, y0, y1)

    def hits_target(a, b):
        return _seg_hits_vertical(pts[a], pts[b], x1, y0, y1)

    for a, b in open_edges:
        if (hits_source(a, b) and hits_target(a, b)):
            return True

    found = [False]

    def rec(seq, visited):
        if found[0]:
            return
        node = seq[-1]
        for w in adj.get(node, ()):
            if w in visited:
                continue
            # w may close the path (unconstrained) or extend it (must be in rect)
            if len(seq) >= 2 and hits_target(node, w):
                found[0] = True
                return
            if in_rect(w):
                visited.add(w)
                seq.append(w)
                rec(seq, visited)
                seq.pop()
                visited.remove(w)

    for a, b in open_edges:
        if not hits_source(a, b):
            continue
        for first, second in ((a, b), (b, a)):
            if in_rect(second):
                rec([first, second], {first, second})
                if found[0]:
                    return True
    return False


def polygon_winding(cycle_pts, center):
    """Winding number of the closed polyline cycle_pts around center."""
    total = 0.0
    cx, cy = center
    n = len(cycle_pts)
    for i in range(n):
        ax, ay = cycle_pts[i][0] - cx, cycle_pts[i][1] - cy
        bx, by = cycle_pts[(i + 1) % n][0] - cx, cycle_pts[(i + 1) % n][1] - cy
        total += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    return round(total / (2 * math.pi))


def brute_circuit(vor_coords, open_edges, inner, outer):
    """Exhaustive search for a simple open cycle inside outer minus inner with
    nonzero winding around the inner box center. Small instances only.
    """
    ix0, iy0, ix1, iy1 = inner
    ox0, oy0, ox1, oy1 = outer
    center = ((ix0 + ix1) / 2.0, (iy0 + iy1) / 2.0)

    def pt(i):
        return float(vor_coords[i][0]), float(vor_coords[i][1])

    def in_annulus(i):
        x, y = pt(i)
        if not (ox0 <= x <= ox1 and oy0 <= y <= oy1):
            return False
        return not (ix0 < x < ix1 and iy0 < y < iy1)

    def seg_ok(a, b):
        # neither endpoint inside the open inner box, and the segment must not
        # cut through it: test midpoint too (convexity makes this exact enough
        # for the small randomized instances this oracle serves)
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            x = pt(a)[0] + t * (pt(b)[0] - pt(a)[0])
            y = pt(a)[1] + t * (pt(b)[1] - pt(a)[1])
            if ix0 < x < ix1 and iy0 < y < iy1:
                return False
        return True

    adj = {}
    for a, b in open_edges:
        if in_annulus(a) and in_annulus(b) and seg_ok(a, b):
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)

    nodes = sorted(adj)
    found = [False]

    def rec(start, seq, visited):
        if found[0]:
            return
        node = seq[-1]
        for w in adj[node]:
            if w == start and len(seq) >= 3:
                if polygon_winding([pt(i) for i in seq], center) != 0:
                    found[0] = True
                    return
            elif w not in visited and w > start:
                visited.add(w)
                seq.append(w)
                rec(start, seq, visited)
                seq.pop()
                visited.remove(w)

    for s in nodes:
        rec(s, [s], {s})
        if found[0]:
            return True
    return False


# ----------------------------------------------------------------------------
# lattice animal oracles (breadth-first, frozenset-dedup: independent of the
# library's banned-frontier DFS)
# ----------------------------------------------------------------------------

NEIGH4 = ((1, 0), (-1, 0), (0, 1), (0, -1))


def enumerate_animals_bfs(max_sites, allowed=None):
    """All connected subsets of Z^2 containing the origin with <= max_sites
    sites, by breadth-first growth with a seen-set. allowed optionally
    restricts sites to a finite region.
    """
    origin = (0, 0)
    if allowed is not None and origin not in allowed:
        return []
    seed = frozenset([origin])
    seen = {seed}
    frontier = [seed]
    out = [seed]
    for _ in range(max_sites - 1):
        nxt = []
        for animal in frontier:
            for (zx, zy) in animal:
                for dx, dy in NEIGH4:
                    z = (zx + dx, zy + dy)
                    if z in animal:
                        continue
                    if allowed is not None and z not in allowed:
                        continue
                    grown = animal | {z}
                    if grown not in seen:
                        seen.add(grown)
                        nxt.append(grown)
        out.extend(nxt)
        frontier = nxt
    return out


def brute_greedy_animal(field, s):
    """Max field sum over animals with <= s sites; field is a dict with zero
    default. Returns (value, witness_set)."""
    best = (-math.inf, None)
    for animal in enumerate_animals_bfs(s):
        val = sum(field.get(z, 0.0) for z in animal)
        if val > best[0]:
            best = (val, animal)
    return best


def brute_max_k_separated(sites, k):
    """Max cardinality of a pairwise d_inf >= k subset, by full subset scan."""
    sites = list(sites)
    best = 0
    for size in range(len(sites), 0, -1):
        if size <= best:
            break
        for sub in combinations(sites, size):
            ok = True
            for (a, b) in combinations(sub, 2):
                if max(abs(a[0] - b[0]), abs(a[1] - b[1])) < k:
                    ok = False
                    break
            if ok:
                best = size
                break
    return best


def brute_open_density(open_field, s, k, allowed):
    """min over animals with exactly s sites (within allowed) of the max
    k-separated open subset. open_field: dict site -> bool.
    """
    best = math.inf
    for animal in enumerate_animals_bfs(s, allowed=allowed):
        if len(animal) != s:
            continue
        open_sites = [z for z in animal if open_field.get(z, False)]
        best = min(best, brute_max_k_separated(open_sites, k))
    return best


def brute_open_density_all_sizes(open_field, s, k, allowed):
    """Same minimum taken over every animal with >= s sites inside allowed.
    Exponential; only for tiny grids, to certify the exactly-s reduction."""
    best = math.inf
    for animal in enumerate_animals_bfs(len(allowed), allowed=allowed):
        if len(animal) < s:
            continue
        open_sites = [z for z in animal if open_field.get(z, False)]
        best = min(best, brute_max_k_separated(open_sites, k))
    return best
