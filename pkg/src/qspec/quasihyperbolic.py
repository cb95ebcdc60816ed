"""Quasihyperbolic distance on a lattice graph and an empirical fit of the
boundary-growth exponent gamma in

    k(x0, x) <= (1/gamma) log(dist(x0) / dist(x)) + C0.

Nodes are lattice points at spacing h strictly inside the domain.  Edges join
nodes whose offset is a primitive vector of {-2..2}^n, which keeps the graph
metric within 3% of Euclidean length in every direction.  An edge's weight is
the exact integral of 1/dist along it when dist is linear in between,
L * log(d2/d1) / (d2 - d1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .domains import Domain, GridMask, rasterize
from .errors import DegenerateDomainError, RangeError, UninformativeFitError

STENCIL_RADIUS = 2
DEFAULT_C0_CAP = 0.1
# a fit whose largest log-ratio is below this cannot separate gamma from C0
MIN_LOG_RANGE = 1.0


def stencil(n, radius=STENCIL_RADIUS):
    """Primitive offsets in {-radius..radius}^n, one of each +/- pair."""
    out = []
    for off in itertools.product(range(-radius, radius + 1), repeat=n):
        if reduce(math.gcd, (abs(o) for o in off)) != 1:
            continue
        first = next(o for o in off if o != 0)
        if first > 0:
            out.append(off)
    return np.array(out, dtype=np.int64)


def log_mean_inverse(d1, d2):
    """Average of 1/d along a segment on which d runs linearly from d1 to d2."""
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    ratio = d2 / d1
    close = np.abs(ratio - 1.0) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = np.log(ratio) / (d2 - d1)
    # series of log(1+e)/e about e = 0, used where the quotient cancels badly
    e = ratio - 1.0
    series = (1.0 - e / 2.0 + e * e / 3.0) / d1
    return np.where(close, series, exact)


def _analytic_distance(d):
    return type(d).boundary_distance is not Domain.boundary_distance


class QHGraph:
    """Lattice graph of ``d`` at spacing ``h`` with quasihyperbolic weights."""

    def __init__(self, d, h):
        if not h > 0:
            raise ValueError(f"spacing h must be positive, got {h}")
        self.domain, self.h, self.dim = d, float(h), d.dim
        self.exact_distance = _analytic_distance(d) and not isinstance(d, GridMask)
        if self.exact_distance:
            lo, hi = d.bounding_box()
            mid = 0.5 * (lo + hi)
            half = np.ceil((hi - lo) / (2 * h) - 1e-9).astype(int)
            shape = tuple(2 * half + 1)
            idx = np.indices(shape).reshape(d.dim, -1).T
            pts = mid + h * (idx - half)
            inside = d.contains(pts)
            dist = np.zeros(len(pts))
            dist[inside] = d.boundary_distance(pts[inside])
            keep = inside & (dist > 0)
            self.distance_fn = d.boundary_distance
        else:
            grid = rasterize(d, h)
            shape = grid.shape
            idx = np.indices(shape).reshape(d.dim, -1).T
            pts = grid.lo + h * (idx + 0.5)
            keep = grid.mask.ravel()
            dist = np.zeros(len(pts))
            dist[keep] = grid.boundary_distance(pts[keep])
            self.grid = grid
            self.distance_fn = grid.boundary_distance
        if not keep.any():
            raise DegenerateDomainError(f"no lattice node of spacing {h} lies inside {d!r}")
        number = np.full(len(pts), -1, dtype=np.int64)
        number[keep] = np.arange(int(keep.sum()))
        self.nodes = pts[keep]
        self.distance = dist[keep]
        self._tree = cKDTree(self.nodes)
        self.graph = self._edges(number.reshape(shape), pts.reshape(shape + (d.dim,)), dist.reshape(shape))
        count, _ = csgraph.connected_components(self.graph, directed=False)
        if count != 1:
            raise DegenerateDomainError(f"lattice graph of {d!r} at spacing {h} has {count} components")

    def _edges(self, number, pts, dist):
        rows, cols, weights = [], [], []
        n = self.dim
        for off in stencil(n):
            src, dst = [], []
            for k, o in enumerate(off):
                size = number.shape[k]
                src.append(slice(max(0, -o), size - max(0, o)))
                dst.append(slice(max(0, o), size - max(0, -o)))
            a, b = number[tuple(src)], number[tuple(dst)]
            both = (a >= 0) & (b >= 0)
            if not both.any():
                continue
            pa, pb = pts[tuple(src)][both], pts[tuple(dst)][both]
            # long edges must not leave the domain
            ok = self.domain.contains(0.5 * (pa + pb))
            length = self.h * float(np.linalg.norm(off))
            w = length * log_mean_inverse(dist[tuple(src)][both][ok], dist[tuple(dst)][both][ok])
            rows.append(a[both][ok])
            cols.append(b[both][ok])
            weights.append(w)
        rows, cols, weights = (np.concatenate(v) for v in (rows, cols, weights))
        if not np.all(np.isfinite(weights) & (weights > 0)):
            raise DegenerateDomainError("non-finite or non-positive edge weight")
        size = len(self.nodes)
        return sparse.coo_matrix((weights, (rows, cols)), shape=(size, size)).tocsr()

    def nearest(self, x, min_distance=None):
        """Node indices nearest to the points ``x``; they must lie farther
        than ``min_distance`` (default 2h) from the boundary."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"expected points in R^{self.dim}")
        if not np.all(self.domain.contains(pts)):
            raise RangeError("point lies outside the domain")
        limit = 2.0 * self.h if min_distance is None else min_distance
        bd = np.asarray(self.distance_fn(pts), dtype=float)
        if np.any(bd <= limit):
            bad = pts[np.flatnonzero(bd <= limit)[0]]
            raise RangeError(f"point {bad.tolist()} is within {limit} of the boundary")
        _, index = self._tree.query(pts)
        return np.asarray(index, dtype=np.int64)

    def distances_from(self, index):
        return csgraph.dijkstra(self.graph, directed=False, indices=int(index))


def qh_distance(d, x0, x, h, graph=None):
    """Quasihyperbolic distance from ``x0`` to the point(s) ``x``."""
    g = graph if graph is not None else QHGraph(d, h)
    source = g.nearest(x0)[0]
    x = np.asarray(x, dtype=float)
    targets = g.nearest(x)
    dist = g.distances_from(source)[targets]
    if not np.all(np.isfinite(dist)):
        raise DegenerateDomainError("target is unreachable from x0")
    return float(dist[0]) if x.ndim == 1 else dist


def mask_centroid(d, h):
    return rasterize(d, h).centers().mean(axis=0)


@dataclass
class GammaFit:
    gamma_hat: float
    C0_hat: float
    points_used: int
    x0: list
    c0_cap: float
    log_ratio_max: float
    degenerate: bool
    empirical: bool = True

    def to_dict(self):
        return {"gamma_hat": self.gamma_hat, "C0_hat": self.C0_hat, "points_used": self.points_used,
                "x0": self.x0, "c0_cap": self.c0_cap, "log_ratio_max": self.log_ratio_max,
                "degenerate": self.degenerate, "empirical": self.empirical}


def envelope_gamma(L, k, c0_cap):
    """Largest gamma with k <= L/gamma + C for all pairs, some 0 <= C <= cap.

    Points with L > 0 bound 1/gamma from below by (k - cap)/L, points with
    L < 0 bound it from above.  Returns (gamma, C0) with C0 the smallest
    intercept that works at that gamma.
    """
    L, k = np.asarray(L, dtype=float), np.asarray(k, dtype=float)
    pos, neg, flat = L > 0, L < 0, L == 0
    if np.any(k[flat] > c0_cap):
        raise UninformativeFitError(f"a point with log-ratio 0 has k above the C0 cap {c0_cap}")
    inv_lo = max(0.0, float(np.max((k[pos] - c0_cap) / L[pos]))) if pos.any() else 0.0
    if neg.any():
        inv_hi = float(np.min((c0_cap - k[neg]) / -L[neg]))
        if inv_hi < inv_lo:
            raise UninformativeFitError("no gamma satisfies the envelope under the C0 cap")
    gamma = math.inf if inv_lo == 0 else 1.0 / inv_lo
    # the intercept never exceeds the cap except by rounding
    c0 = min(c0_cap, max(0.0, float(np.max(k - L * inv_lo))))
    return gamma, c0


def fit_gamma(d, x0=None, h=1 / 64, sample_count=2000, seed=0, c0_cap=DEFAULT_C0_CAP, min_distance=None,
              graph=None):
    """Empirical gamma for the quasihyperbolic growth condition.

    Sample points are lattice nodes drawn uniformly (seeded) among those
    farther than ``min_distance`` (default 2h) from the boundary.  ``x0``
    defaults to the centroid of the rasterized domain.
    """
    g = graph if graph is not None else QHGraph(d, h)
    if x0 is None:
        x0 = mask_centroid(d, h)
    x0 = np.asarray(x0, dtype=float)
    source = g.nearest(x0)[0]
    k_all = g.distances_from(source)
    limit = 2.0 * g.h if min_distance is None else float(min_distance)
    eligible = np.flatnonzero(g.distance > limit)
    eligible = eligible[eligible != source]
    if len(eligible) == 0:
        raise UninformativeFitError(f"no lattice node is farther than {limit} from the boundary")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(eligible, size=min(sample_count, len(eligible)), replace=False)
    L = np.log(g.distance[source] / g.distance[chosen])
    k = k_all[chosen]
    if not np.any(L > 0):
        raise UninformativeFitError("every sample is at least as far from the boundary as x0")
    gamma, c0 = envelope_gamma(L, k, c0_cap)
    log_max = float(np.max(L))
    return GammaFit(gamma_hat=gamma, C0_hat=c0, points_used=len(chosen), x0=g.nodes[source].tolist(),
                    c0_cap=c0_cap, log_ratio_max=log_max, degenerate=log_max < MIN_LOG_RANGE)
