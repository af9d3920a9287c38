"""Edge passage-time models.

Four weight families cover the regimes the estimators care about: a constant
law, a law with an atom at zero, and two continuous laws with light tails.
Sampling is inverse-CDF on one uniform draw per edge, in canonical edge
order, so identical seeds give identical weight maps and a shared uniform
stream couples different parameter values monotonically.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .geometry import DelaunayGraph, VoronoiDiagram


class WeightError(ValueError):
    """Invalid distribution parameters or a mismatched weight map."""


_KINDS = ("deterministic", "bernoulliAtom", "exponential", "uniform")


@dataclass(frozen=True)
class WeightDistribution:
    """One of: deterministic(c), bernoulliAtom(p0, v), exponential(rate),
    uniform(a, b).

    bernoulliAtom places mass p0 at 0 and mass 1-p0 at the positive value v.
    """

    kind: str
    params: Tuple[float, ...]

    def __post_init__(self):
        k, p = self.kind, tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", p)
        if k == "deterministic":
            if len(p) != 1 or p[0] < 0:
                raise WeightError("deterministic(c) needs c >= 0")
        elif k == "bernoulliAtom":
            if len(p) != 2 or not (0.0 <= p[0] <= 1.0) or not p[1] > 0:
                raise WeightError("bernoulliAtom(p0, v) needs p0 in [0,1], v > 0")
        elif k == "exponential":
            if len(p) != 1 or not p[0] > 0:
                raise WeightError("exponential(rate) needs rate > 0")
        elif k == "uniform":
            if len(p) != 2 or not (0.0 <= p[0] < p[1]):
                raise WeightError("uniform(a, b) needs 0 <= a < b")
        else:
            raise WeightError(f"unknown weight distribution kind {k!r}")

    # constructors ----------------------------------------------------------

    @classmethod
    def deterministic(cls, c: float) -> "WeightDistribution":
        return cls("deterministic", (c,))

    @classmethod
    def bernoulli_atom(cls, p0: float, v: float) -> "WeightDistribution":
        return cls("bernoulliAtom", (p0, v))

    @classmethod
    def exponential(cls, rate: float) -> "WeightDistribution":
        return cls("exponential", (rate,))

    @classmethod
    def uniform(cls, a: float, b: float) -> "WeightDistribution":
        return cls("uniform", (a, b))

    @classmethod
    def parse(cls, text: str) -> "WeightDistribution":
        """Parse 'kind(arg, ...)' as spelled in configs,
        e.g. 'exponential(1.0)' or 'bernoulliAtom(0.4, 1)'."""
        m = re.fullmatch(r"\s*([A-Za-z_]+)\s*\(([^()]*)\)\s*", text)
        if not m:
            raise WeightError(f"cannot parse weight distribution {text!r}")
        name = m.group(1)
        alias = {"bernoulli_atom": "bernoulliAtom"}
        name = alias.get(name, name)
        if name not in _KINDS:
            raise WeightError(f"unknown weight distribution kind {name!r}")
        try:
            args = tuple(float(t) for t in m.group(2).split(",") if t.strip())
        except ValueError as exc:
            raise WeightError(f"bad parameters in {text!r}") from exc
        return cls(name, args)

    def __str__(self) -> str:
        args = ",".join(repr(float(x)) for x in self.params)
        return f"{self.kind}({args})"

    # law -------------------------------------------------------------------

    def mean(self) -> float:
        k, p = self.kind, self.params
        if k == "deterministic":
            return p[0]
        if k == "bernoulliAtom":
            return (1.0 - p[0]) * p[1]
        if k == "exponential":
            return 1.0 / p[0]
        return (p[0] + p[1]) / 2.0

    @property
    def mass_at_zero(self) -> float:
        if self.kind == "deterministic":
            return 1.0 if self.params[0] == 0.0 else 0.0
        if self.kind == "bernoulliAtom":
            return self.params[0]
        return 0.0

    @property
    def integer_valued(self) -> bool:
        """True when every draw is an exact small integer (float arithmetic on
        path sums is then exact, which some scaling checks rely on)."""
        k, p = self.kind, self.params
        if k == "deterministic":
            return float(p[0]).is_integer()
        if k == "bernoulliAtom":
            return float(p[1]).is_integer()
        return False

    def quantile(self, u):
        """Inverse CDF, vectorized; u in [0, 1)."""
        u = np.asarray(u, dtype=float)
        k, p = self.kind, self.params
        if k == "deterministic":
            return np.full_like(u, p[0])
        if k == "bernoulliAtom":
            return np.where(u < p[0], 0.0, p[1])
        if k == "exponential":
            return -np.log1p(-u) / p[0]
        return p[0] + u * (p[1] - p[0])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantile(rng.uniform(size=size))


@dataclass(eq=False)
class EdgeWeights:
    """Nonnegative passage times, one per canonical Delaunay edge.

    values[k] belongs to graph.edges[k]; the array is read-only and the
    object is safe to share across threads.
    """

    graph: DelaunayGraph
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if v.shape != (self.graph.n_edges,):
            raise WeightError("weight array must align with the edge list")
        if not np.isfinite(v).all() or (v < 0).any():
            raise WeightError("weights must be finite and nonnegative")
        v.setflags(write=False)
        self.values = v

    def of(self, u: int, v: int) -> float:
        return float(self.values[self.graph.edge_id(u, v)])

    def as_mapping(self):
        """dict (i, j) -> tau for small-instance inspection."""
        return {(int(i), int(j)): float(t)
                for (i, j), t in zip(self.graph.edges, self.values)}

    def scaled(self, c: float) -> "EdgeWeights":
        if c < 0:
            raise WeightError("scale factor must be nonnegative")
        return EdgeWeights(self.graph, self.values * c)


def assign_weights(graph: DelaunayGraph, dist: WeightDistribution,
                   seed: int) -> EdgeWeights:
    """i.i.d. weights in canonical edge order.

    The draw stream depends only on the seed and the edge count, never on the
    point-process stream, so geometry and weights can be varied independently.
    """
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return EdgeWeights(graph, dist.sample(rng, graph.n_edges))


def truncate_weights(weights: EdgeWeights, n: int, a: float) -> EdgeWeights:
    """Cap every weight at 8 * log(n) / a.

    a is the exponential-moment parameter of the weight law; the cap grows
    logarithmically in the instance scale n.
    """
    if n < 2:
        raise WeightError("truncation cap needs n >= 2")
    if not a > 0:
        raise WeightError("truncation needs a > 0")
    cap = 8.0 * math.log(n) / a
    return EdgeWeights(weights.graph, np.minimum(weights.values, cap))


def threshold_indicator(weights: EdgeWeights, eps: float,
                        diagram: Optional[VoronoiDiagram] = None):
    """Bond field on the Voronoi dual: e* open iff its Delaunay edge has
    tau >= eps.

    The universe is the diagram's dual edge set (interior Delaunay edges);
    when no diagram is supplied the universe is derived from the graph, which
    yields the identical edge set.
    """
    from .percolation import BondConfiguration

    if not eps > 0:
        raise WeightError("threshold must be positive")
    if diagram is not None:
        eids = diagram.dual_edge_ids
    else:
        et = weights.graph.edge_triangles()
        eids = np.nonzero(et[:, 1] >= 0)[0]
    return BondConfiguration(weights.graph, eids,
                             weights.values[eids] >= eps)


def save_weights(weights: EdgeWeights, path: str) -> None:
    """Text export, one 'i j tau' line per canonical edge, 17 significant
    digits (lossless for float64)."""
    with open(path, "w", encoding="utf-8") as f:
        for (i, j), t in zip(weights.graph.edges, weights.values):
            f.write("%d %d %.17g\n" % (i, j, t))


def load_weights(graph: DelaunayGraph, path: str) -> EdgeWeights:
    vals = np.empty(graph.n_edges, dtype=float)
    with open(path, "r", encoding="utf-8") as f:
        k = 0
        for line in f:
            line = line.strip()
            if not line:
                continue
            i, j, t = line.split()
            if k >= graph.n_edges or (int(i), int(j)) != tuple(int(x) for x in graph.edges[k]):
                raise WeightError("weight file does not match the edge list")
            vals[k] = float(t)
            k += 1
    if k != graph.n_edges:
        raise WeightError("weight file does not match the edge list")
    return EdgeWeights(graph, vals)
