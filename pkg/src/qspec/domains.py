"""Geometric region descriptors.

Four kinds are supported: balls and cubes (exact measure and diameter),
images of the canonical cube under the radial stretch x -> |x|^a x, and
grid-masked regions used by the eigensolver and the quasihyperbolic graph.
"""

from __future__ import annotations

import base64
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import ndimage
from scipy.special import roots_jacobi

from . import constants
from ._sampling import (IntegralResult, Method, Moments, QuadratureSpec, map_ordered, reduce_moments,
                        shard_rng, shard_sizes)
from .errors import DegenerateDomainError, RangeError, UnsupportedDomainError

STRETCH_CUBE_HALF_SIDE = math.sqrt(2.0) / 2.0
# diameter the stretched-cube bound assigns to this cube; exact only for n = 2
STRETCH_CUBE_NOMINAL_DIAMETER = 2.0

_MAX_TRIES_FACTOR = 1000


def _as_points(x, n):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != n:
        raise ValueError(f"expected points in R^{n}, got shape {x.shape}")
    return pts, single


def _check_dim(n):
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    return int(n)


class Domain:
    """Common interface.  Subclasses fill in the geometry."""

    kind = "domain"
    dim: int

    def contains(self, x):
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def exact_measure(self):
        """Closed-form measure, or None when only an estimate exists."""
        return None

    def diameter(self):
        raise UnsupportedDomainError(f"no analytic diameter for {self.kind} domains")

    def boundary_distance(self, x):
        raise UnsupportedDomainError(f"no boundary distance for {self.kind} domains")

    def _draw(self, rng, size):
        """Return ``size`` uniform points in the domain and the number of tries."""
        lo, hi = self.bounding_box()
        chunks, accepted, tries = [], 0, 0
        limit = _MAX_TRIES_FACTOR * max(size, 1)
        while accepted < size:
            batch = max(2 * (size - accepted), 256)
            cand = rng.uniform(lo, hi, size=(batch, self.dim))
            inside = cand[self.contains(cand)]
            take = min(size - accepted, len(inside))
            if take < len(inside):
                # account only for the candidates actually consumed
                last = np.flatnonzero(self.contains(cand))[take - 1]
                tries += last + 1
            else:
                tries += batch
            chunks.append(inside[:take])
            accepted += take
            if accepted == 0 and tries >= limit:
                raise DegenerateDomainError(f"no sample landed in {self.kind} after {tries} tries")
        return np.concatenate(chunks) if chunks else np.empty((0, self.dim)), tries

    def to_record(self):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.to_record()}>"


class Ball(Domain):
    kind = "ball"

    def __init__(self, n, radius=1.0, center=None):
        self.dim = _check_dim(n)
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.radius = float(radius)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float).reshape(self.dim)

    def contains(self, x):
        pts, single = _as_points(x, self.dim)
        inside = np.linalg.norm(pts - self.center, axis=1) < self.radius
        return bool(inside[0]) if single else inside

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def exact_measure(self):
        return constants.omega_n(self.dim) * self.radius ** self.dim

    def diameter(self):
        return 2.0 * self.radius

    def boundary_distance(self, x):
        pts, single = _as_points(x, self.dim)
        dist = self.radius - np.linalg.norm(pts - self.center, axis=1)
        if np.any(dist < 0):
            raise RangeError("point lies outside the ball")
        return float(dist[0]) if single else dist

    def _draw(self, rng, size):
        direction = rng.standard_normal((size, self.dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = self.radius * rng.random(size) ** (1.0 / self.dim)
        return self.center + direction * radius[:, None], size

    def scaled(self, factor):
        return Ball(self.dim, self.radius * factor, self.center * factor)

    def to_record(self):
        return _record("ball", self.dim, radius=self.radius, center=self.center)


class Cube(Domain):
    """Axis-aligned cube ``{x : |x_k - c_k| < half_side}``."""

    kind = "cube"

    def __init__(self, n, half_side=STRETCH_CUBE_HALF_SIDE, center=None):
        self.dim = _check_dim(n)
        if not half_side > 0:
            raise ValueError(f"half_side must be positive, got {half_side}")
        self.half_side = float(half_side)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float).reshape(self.dim)

    def contains(self, x):
        pts, single = _as_points(x, self.dim)
        inside = np.all(np.abs(pts - self.center) < self.half_side, axis=1)
        return bool(inside[0]) if single else inside

    def bounding_box(self):
        return self.center - self.half_side, self.center + self.half_side

    def exact_measure(self):
        return (2.0 * self.half_side) ** self.dim

    def diameter(self):
        return 2.0 * self.half_side * math.sqrt(self.dim)

    def boundary_distance(self, x):
        pts, single = _as_points(x, self.dim)
        dist = np.min(self.half_side - np.abs(pts - self.center), axis=1)
        if np.any(dist < 0):
            raise RangeError("point lies outside the cube")
        return float(dist[0]) if single else dist

    def _draw(self, rng, size):
        lo, hi = self.bounding_box()
        return rng.uniform(lo, hi, size=(size, self.dim)), size

    def scaled(self, factor):
        return Cube(self.dim, self.half_side * factor, self.center * factor)

    def to_record(self):
        return _record("cube", self.dim, half_side=self.half_side, center=self.center)


class StretchImage(Domain):
    """Image of the cube ``|x_k| < sqrt(2)/2`` under x -> |x|^a x."""

    kind = "stretch"

    def __init__(self, n, a):
        self.dim = _check_dim(n)
        if not a > 0:
            raise ValueError(f"stretch exponent a must be positive, got {a}")
        self.a = float(a)
        self.base = Cube(self.dim, STRETCH_CUBE_HALF_SIDE)

    def preimage(self, y):
        pts, single = _as_points(y, self.dim)
        r = np.linalg.norm(pts, axis=1)
        scale = np.zeros_like(r)
        nz = r > 0
        scale[nz] = r[nz] ** (-self.a / (self.a + 1.0))
        out = pts * scale[:, None]
        return out[0] if single else out

    def contains(self, x):
        pts, single = _as_points(x, self.dim)
        inside = self.base.contains(self.preimage(pts))
        return bool(inside[0]) if single else inside

    def bounding_box(self):
        s = STRETCH_CUBE_HALF_SIDE
        half = s * (math.sqrt(self.dim) * s) ** self.a
        return np.full(self.dim, -half), np.full(self.dim, half)

    def to_record(self):
        return _record("stretch", self.dim, a=self.a)


class GridMask(Domain):
    """Union of the true cells of a boolean lattice.

    Cell ``idx`` covers ``lo + h*idx + [0, h)^n``; its centre is
    ``lo + h*(idx + 1/2)``.  The mask must be nonempty and face-connected.
    """

    kind = "gridmask"

    def __init__(self, lo, h, mask, check_connected=True):
        mask = np.asarray(mask, dtype=bool)
        self.dim = _check_dim(mask.ndim)
        self.lo = np.asarray(lo, dtype=float).reshape(self.dim)
        if not h > 0:
            raise ValueError(f"spacing h must be positive, got {h}")
        self.h = float(h)
        if not mask.any():
            raise DegenerateDomainError("grid mask has no true cells")
        self.mask = mask
        self._dist = None
        if check_connected:
            _, components = ndimage.label(mask, structure=ndimage.generate_binary_structure(self.dim, 1))
            if components != 1:
                raise ValueError(f"grid mask must be face-connected, found {components} components")

    @property
    def shape(self):
        return self.mask.shape

    @property
    def cell_count(self):
        return int(self.mask.sum())

    def centers(self):
        """Centres of the true cells, in C order of the lattice."""
        idx = np.argwhere(self.mask)
        return self.lo + self.h * (idx + 0.5)

    def cell_index(self, x):
        pts, _ = _as_points(x, self.dim)
        return np.floor((pts - self.lo) / self.h).astype(np.int64)

    def contains(self, x):
        pts, single = _as_points(x, self.dim)
        idx = self.cell_index(pts)
        ok = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=1)
        inside = np.zeros(len(pts), dtype=bool)
        inside[ok] = self.mask[tuple(idx[ok].T)]
        return bool(inside[0]) if single else inside

    def bounding_box(self):
        return self.lo.copy(), self.lo + self.h * np.array(self.shape)

    def exact_measure(self):
        return self.cell_count * self.h ** self.dim

    def distance_steps(self):
        """Face-adjacent step count from each cell to the nearest false cell."""
        if self._dist is None:
            padded = np.pad(self.mask, 1, constant_values=False)
            steps = ndimage.distance_transform_cdt(padded, metric="taxicab")
            self._dist = steps[(slice(1, -1),) * self.dim]
        return self._dist

    def boundary_distance(self, x):
        pts, single = _as_points(x, self.dim)
        if not np.all(self.contains(pts)):
            raise RangeError("point lies outside the grid mask")
        steps = self.distance_steps()[tuple(self.cell_index(pts).T)]
        dist = steps * self.h - 0.5 * self.h
        return float(dist[0]) if single else dist

    def _draw(self, rng, size):
        # rejection from the bounding box keeps the measure estimate honest
        return Domain._draw(self, rng, size)

    def to_record(self):
        packed = base64.b64encode(np.packbits(self.mask.ravel()).tobytes()).decode("ascii")
        return _record("gridmask", self.dim, h=self.h, lo=self.lo,
                       shape=",".join(str(s) for s in self.shape), mask=packed)


# ---------------------------------------------------------------- operations

def measure(d, quad=None):
    """Volume of ``d``.  Exact for balls, cubes and grid masks; otherwise a
    Monte Carlo estimate, returned as an :class:`IntegralResult`."""
    exact = d.exact_measure()
    if exact is not None:
        return exact
    if quad is None:
        raise ValueError(f"measure of a {d.kind} domain needs a QuadratureSpec")
    return estimate_measure(d, quad)


def estimate_measure(d, quad):
    """Hit-or-miss estimate of the volume from bounding-box samples."""
    if quad.method is not Method.MONTE_CARLO:
        raise ValueError("measure estimation needs a Monte Carlo spec")
    lo, hi = d.bounding_box()
    box = float(np.prod(hi - lo))

    def shard(args):
        index, size = args
        rng = shard_rng(quad.seed, index)
        pts = rng.uniform(lo, hi, size=(size, d.dim))
        return Moments.of(d.contains(pts).astype(float))

    m = reduce_moments(map_ordered(shard, enumerate(shard_sizes(quad.budget))))
    err = box * math.sqrt(m.variance / m.count) if quad.want_error else None
    return IntegralResult(box * m.mean, err, m.count)


def measure_value(d, quad=None):
    m = measure(d, quad)
    return m.value if isinstance(m, IntegralResult) else float(m)


def diameter(d):
    return d.diameter()


def boundary_distance(d, x):
    return d.boundary_distance(x)


def equal_measure_radius(d, quad=None):
    """Radius of the ball with the same volume as ``d``."""
    return (measure_value(d, quad) / constants.omega_n(d.dim)) ** (1.0 / d.dim)


def draw_shard(d, seed, index, size, exclude_radius=0.0):
    """Points of MC shard ``index`` and the number of bounding-box tries used.

    Points within ``exclude_radius`` of the origin are redrawn.
    """
    rng = shard_rng(seed, index)
    pts, tries = d._draw(rng, size)
    if exclude_radius > 0:
        for _ in range(100):
            bad = np.linalg.norm(pts, axis=1) < exclude_radius
            if not bad.any():
                break
            fresh, extra = d._draw(rng, int(bad.sum()))
            pts[bad] = fresh
            tries += extra
    return pts, tries


def tensor_rule(d, m):
    """Nodes and weights of the product rule with ``m`` points per axis."""
    if isinstance(d, Cube):
        x, w = leggauss(m)
        nodes = [d.center[k] + d.half_side * x for k in range(d.dim)]
        grids = np.meshgrid(*nodes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        wts = np.ones(1)
        for _ in range(d.dim):
            wts = np.multiply.outer(wts, w * d.half_side).ravel()
        return pts, wts
    if isinstance(d, Ball):
        dirs, dw = sphere_rule(d.dim, m)
        # radial weight r^{n-1} is absorbed by Gauss-Jacobi(0, n-1)
        x, w = roots_jacobi(m, 0.0, d.dim - 1.0)
        r = 0.5 * d.radius * (x + 1.0)
        rw = w * (0.5 * d.radius) ** d.dim
        pts = d.center + (r[:, None, None] * dirs[None, :, :]).reshape(-1, d.dim)
        wts = np.multiply.outer(rw, dw).ravel()
        return pts, wts
    raise UnsupportedDomainError(f"tensor-grid quadrature is only available on balls and cubes, not {d.kind}")


def sphere_rule(n, m):
    """Product rule on the unit sphere S^{n-1}: 2m uniform azimuths, and
    m Gauss-Jacobi nodes for each polar coordinate."""
    k = 2 * m
    theta = 2.0 * np.pi * np.arange(k) / k
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    wts = np.full(k, 2.0 * np.pi / k)
    for dim in range(3, n + 1):
        # S^{dim-1}: x = (t, sqrt(1-t^2) y), measure (1-t^2)^{(dim-3)/2} dt dsigma(y)
        alpha = 0.5 * (dim - 3)
        t, tw = roots_jacobi(m, alpha, alpha)
        s = np.sqrt(1.0 - t ** 2)
        pts = np.concatenate([
            np.repeat(t, len(pts))[:, None],
            (s[:, None, None] * pts[None, :, :]).reshape(-1, dim - 1),
        ], axis=1)
        wts = np.multiply.outer(tw, wts).ravel()
    return pts, wts


def sample(d, spec, exclude_radius=0.0):
    """Sample points and weights whose sum estimates the volume of ``d``."""
    if spec.method is Method.TENSOR_GRID:
        return tensor_rule(d, spec.budget)
    pieces = map_ordered(lambda a: draw_shard(d, spec.seed, a[0], a[1], exclude_radius),
                         enumerate(shard_sizes(spec.budget)))
    pts = np.concatenate([p for p, _ in pieces])
    tries = sum(t for _, t in pieces)
    vol = d.exact_measure()
    if vol is None:
        lo, hi = d.bounding_box()
        vol = float(np.prod(hi - lo)) * len(pts) / tries
    return pts, np.full(len(pts), vol / len(pts))


def rasterize(d, h):
    """GridMask of the cells of spacing ``h`` whose centres lie in ``d``.

    Only the largest face-connected group of cells is kept.

    The lattice is centred on the bounding box, so a box whose width is a
    multiple of ``h`` is covered exactly.
    """
    if isinstance(d, GridMask):
        if not math.isclose(d.h, h, rel_tol=1e-12):
            raise ValueError("cannot resample a grid mask to a different spacing")
        return d
    lo, hi = d.bounding_box()
    counts = np.maximum(np.ceil((hi - lo) / h - 1e-9).astype(int), 1)
    mid = 0.5 * (lo + hi)
    origin = mid - 0.5 * h * counts
    axes = [origin[k] + h * (np.arange(counts[k]) + 0.5) for k in range(d.dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    mask = d.contains(pts).reshape(tuple(counts))
    if not mask.any():
        raise DegenerateDomainError(f"no cell centre of spacing {h} lies in {d!r}")
    # thin spikes can shed cells that touch the rest only at corners; keep the bulk
    labels, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(d.dim, 1))
    if count > 1:
        sizes = np.bincount(labels.ravel())[1:]
        mask = labels == 1 + int(np.argmax(sizes))
    return GridMask(origin, h, mask)


def stretch_cube(n):
    """The cube ``|x_k| < sqrt(2)/2``, whose corners lie on the unit sphere when n = 2."""
    return Cube(n, STRETCH_CUBE_HALF_SIDE)


# ---------------------------------------------------------------- text records

def _fmt(v):
    if isinstance(v, np.ndarray):
        return ",".join(repr(float(t)) for t in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _record(kind, dim, **fields):
    parts = [f"kind={kind}", f"dim={dim}"] + [f"{k}={_fmt(v)}" for k, v in fields.items()]
    return ";".join(parts)


_ALIASES = {
    "square": lambda: Cube(2, 0.5, [0.5, 0.5]),
    "disk": lambda: Ball(2),
    "ball2": lambda: Ball(2),
    "ball3": lambda: Ball(3),
    "cube2": lambda: stretch_cube(2),
    "cube3": lambda: stretch_cube(3),
}


def parse_domain(text):
    """Build a domain from an alias (``square``, ``disk``, ``ball3``, ...) or a
    ``kind=...;dim=...;key=value`` record as produced by ``to_record``."""
    text = text.strip()
    if text in _ALIASES:
        return _ALIASES[text]()
    fields = {}
    for part in text.split(";"):
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"malformed domain record field {part!r} in {text!r}")
        key, value = part.split("=", 1)
        fields[key.strip()] = value.strip()
    kind = fields.pop("kind", None)
    if kind is None or "dim" not in fields:
        raise ValueError(f"domain record needs kind and dim: {text!r}")
    n = int(fields.pop("dim"))

    def vec(name):
        return [float(t) for t in fields[name].split(",")] if name in fields else None

    if kind == "ball":
        return Ball(n, float(fields.get("radius", 1.0)), vec("center"))
    if kind == "cube":
        return Cube(n, float(fields.get("half_side", STRETCH_CUBE_HALF_SIDE)), vec("center"))
    if kind == "stretch":
        return StretchImage(n, float(fields["a"]))
    if kind == "gridmask":
        shape = tuple(int(t) for t in fields["shape"].split(","))
        bits = np.unpackbits(np.frombuffer(base64.b64decode(fields["mask"]), dtype=np.uint8))
        mask = bits[: int(np.prod(shape))].astype(bool).reshape(shape)
        return GridMask(vec("lo"), float(fields["h"]), mask)
    raise ValueError(f"unknown domain kind {kind!r}")
