"""Grid estimator of the first non-trivial Neumann eigenvalue of the p-Laplacian.

The domain is rasterized into cells of side h.  For a field u on the cells,
the gradient at a cell is the vector of forward differences to its
neighbours, a component being 0 when the neighbour is outside the mask (the
Neumann condition is the absence of exterior faces).  The discrete quotient

    R(u) = sum_cells |grad u|^p h^n / sum_cells |u|^p h^n

is minimized over fields with sum |u|^{p-2} u = 0.  That constraint says
exactly that c = 0 minimizes sum |u - c|^p, so the constrained problem is the
unconstrained minimization of N(u) / min_c D(u - c); its gradient at a
constrained point is (grad N - R grad D) / D by the envelope theorem.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ._sampling import map_ordered
from .domains import GridMask, rasterize
from .errors import RangeError

ARMIJO = 1e-4


@dataclass
class ScalarField:
    """Values on the true cells of ``grid``, in the order of ``grid.centers()``."""

    grid: GridMask
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.cell_count,):
            raise ValueError(f"field needs {self.grid.cell_count} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def h(self):
        return self.grid.h

    @classmethod
    def from_function(cls, grid, f):
        return cls(grid, f(grid.centers()))

    def to_box(self, fill=np.nan):
        out = np.full(self.grid.shape, fill)
        out[self.grid.mask] = self.values
        return out


@dataclass
class EigenEstimate:
    mu: float
    minimizer: ScalarField
    constraint_residual: float
    iterations: int
    restarts_used: int
    converged: bool
    history: list = field(default_factory=list, repr=False)
    restart_mus: list = field(default_factory=list)

    def to_dict(self):
        return {"mu": self.mu, "constraint_residual": self.constraint_residual, "iterations": self.iterations,
                "restarts_used": self.restarts_used, "converged": self.converged,
                "restart_mus": self.restart_mus, "cells": self.minimizer.grid.cell_count, "h": self.minimizer.h}


class GridOperator:
    """Sparse forward-difference operators on the true cells of a grid mask.

    ``diffs[k] @ u`` is the k-th forward difference divided by h, stored at
    the lower cell of each interior face and 0 elsewhere.
    """

    def __init__(self, grid):
        self.grid = grid
        self.h = grid.h
        self.n = grid.dim
        self.size = grid.cell_count
        self.cell_volume = grid.h ** grid.dim
        index = np.full(grid.shape, -1, dtype=np.int64)
        index[grid.mask] = np.arange(self.size)
        self.diffs = []
        for k in range(self.n):
            lo = [slice(None)] * self.n
            hi = [slice(None)] * self.n
            lo[k] = slice(0, -1)
            hi[k] = slice(1, None)
            a, b = index[tuple(lo)], index[tuple(hi)]
            face = (a >= 0) & (b >= 0)
            rows, cols = a[face], b[face]
            data = np.concatenate([np.full(len(rows), -1.0 / self.h), np.full(len(rows), 1.0 / self.h)])
            mat = sparse.csr_matrix((data, (np.concatenate([rows, rows]), np.concatenate([rows, cols]))),
                                    shape=(self.size, self.size))
            self.diffs.append(mat)
        self.diffs_t = [d.T.tocsr() for d in self.diffs]

    def gradient_components(self, u):
        return [d @ u for d in self.diffs]

    def numerator(self, u, p):
        sq = sum(g * g for g in self.gradient_components(u))
        return self.cell_volume * float(np.sum(sq ** (0.5 * p)))

    def numerator_and_grad(self, u, p):
        comps = self.gradient_components(u)
        sq = sum(g * g for g in comps)
        val = self.cell_volume * float(np.sum(sq ** (0.5 * p)))
        # subgradient 0 where the discrete gradient vanishes
        with np.errstate(divide="ignore", invalid="ignore"):
            weight = np.where(sq > 0, sq ** (0.5 * p - 1.0), 0.0) * (p * self.cell_volume)
        grad = np.zeros(self.size)
        for g, dt in zip(comps, self.diffs_t):
            grad += dt @ (weight * g)
        return val, grad

    def denominator(self, u, p):
        return self.cell_volume * float(np.sum(np.abs(u) ** p))

    def denominator_grad(self, u, p):
        return (p * self.cell_volume) * np.abs(u) ** (p - 1.0) * np.sign(u)


def _constraint_sum(v, c, p):
    w = v - c
    return float(np.sum(np.abs(w) ** (p - 1.0) * np.sign(w)))


def shift_root(v, p, rtol=1e-12):
    """The c with sum |v - c|^{p-2} (v - c) = 0.

    The sum is continuous and strictly decreasing in c, so the root is
    unique and bracketed by [min v, max v].  Newton steps are taken while
    they stay inside the bracket; bisection otherwise.
    """
    if p == 2:
        return float(np.mean(v))
    lo, hi = float(np.min(v)), float(np.max(v))
    if lo == hi:
        return lo
    scale = float(np.sum(np.abs(v) ** (p - 1.0)))
    tol = rtol * max(scale, np.finfo(float).tiny)
    c = float(np.clip(0.0, lo, hi)) if lo < 0 < hi else 0.5 * (lo + hi)
    for _ in range(200):
        w = v - c
        aw = np.abs(w)
        f = float(np.sum(aw ** (p - 1.0) * np.sign(w)))
        if abs(f) <= tol:
            return c
        if f > 0:
            lo = c
        else:
            hi = c
        with np.errstate(divide="ignore"):
            df = -(p - 1.0) * float(np.sum(aw ** (p - 2.0)))
        step = c - f / df if math.isfinite(df) and df != 0 else math.nan
        c_new = step if lo < step < hi else 0.5 * (lo + hi)
        if c_new == c or hi - lo <= 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
            return c_new
        c = c_new
    return c


def project_constraint(u, p):
    """Shift ``u`` by the constant that enforces sum |u|^{p-2} u = 0."""
    if not p > 1:
        raise RangeError(f"p must exceed 1, got {p}")
    values = u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)
    shifted = values - shift_root(values, p)
    return ScalarField(u.grid, shifted) if isinstance(u, ScalarField) else shifted


def constraint_residual(u, p):
    values = u.values if isinstance(u, ScalarField) else u
    h_n = u.grid.h ** u.grid.dim if isinstance(u, ScalarField) else 1.0
    return abs(_constraint_sum(values, 0.0, p)) * h_n


def rayleigh(u, p, operator=None):
    """Discrete Rayleigh quotient of ``u``.

    A constant field has quotient 0 (it is the trivial eigenfunction);
    the zero field raises.
    """
    if not p > 1:
        raise RangeError(f"p must exceed 1, got {p}")
    op = operator or GridOperator(u.grid)
    den = op.denominator(u.values, p)
    if den == 0:
        raise ValueError("Rayleigh quotient of the zero field is undefined")
    return op.numerator(u.values, p) / den


class _Problem:
    def __init__(self, op, p):
        self.op, self.p = op, p

    def evaluate(self, u):
        """Project, then return (v, R(v))."""
        v = u - shift_root(u, self.p)
        den = self.op.denominator(v, self.p)
        return v, self.op.numerator(v, self.p) / den

    def gradient(self, v):
        """Gradient of the reduced quotient at a constrained point v."""
        num, gnum = self.op.numerator_and_grad(v, self.p)
        den = self.op.denominator(v, self.p)
        r = num / den
        return r, (gnum - r * self.op.denominator_grad(v, self.p)) / den


def _normalize(v, p, cell_volume):
    norm = (cell_volume * float(np.sum(np.abs(v) ** p))) ** (1.0 / p)
    return v / norm, norm


def _initial_field(grid, rng):
    x = grid.centers()
    lo, hi = grid.bounding_box()
    x = (x - 0.5 * (lo + hi)) / (0.5 * np.max(hi - lo))
    n = grid.dim
    u = x @ rng.standard_normal(n)
    quad = rng.standard_normal((n, n))
    u = u + 0.5 * np.einsum("ij,jk,ik->i", x, quad, x)
    return u + 0.01 * rng.standard_normal(len(u))


def _descend(problem, u0, max_iter, tol, window):
    """Polak-Ribiere+ conjugate gradient with Armijo backtracking."""
    p, cell_volume = problem.p, problem.op.cell_volume
    v, r = problem.evaluate(u0)
    v, _ = _normalize(v, p, cell_volume)
    r, g = problem.gradient(v)
    history = [r]
    d = -g
    g_prev = None
    step = 1.0 / max(float(np.max(np.abs(g))), 1e-300)
    quiet = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if g_prev is not None:
            beta = max(0.0, float(g @ (g - g_prev)) / float(g_prev @ g_prev))
            d = -g + beta * d
        slope = float(g @ d)
        if slope >= 0:
            d, slope = -g, -float(g @ g)
        if slope == 0:
            converged = True
            break
        t = 2.0 * step
        while True:
            cand, r_new = problem.evaluate(v + t * d)
            if r_new <= r + ARMIJO * t * slope:
                break
            t *= 0.5
            if t * float(np.max(np.abs(d))) < 1e-16 * float(np.max(np.abs(v))):
                cand = None
                break
        if cand is None:
            # no representable descent step left: stationary to rounding
            converged = quiet > 0 or abs(slope) < 1e-12 * r
            break
        step = t
        cand, scale = _normalize(cand, p, cell_volume)
        change = abs(r - r_new) / r_new
        v, r = cand, r_new
        # both iterates have unit p-norm, so the old direction and gradient carry over
        d = d / scale
        g_prev = g
        r, g = problem.gradient(v)
        history.append(r)
        quiet = quiet + 1 if change < tol else 0
        if quiet >= window:
            converged = True
            break
    return v, r, it, converged, history


def minimize(d, p, h, restarts=8, seed=0, max_iter=100_000, tol=1e-9, window=25):
    """Estimate mu_p(d) by projected descent on the discrete quotient.

    Each restart starts from a field drawn with ``default_rng(seed + k)``;
    the lowest quotient wins (ties go to the lower restart index).
    """
    if not p > 1:
        raise RangeError(f"p must exceed 1, got {p}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    grid = rasterize(d, h)
    if grid.cell_count < 2:
        raise RangeError("need at least two cells for a non-trivial eigenfunction")
    op = GridOperator(grid)
    problem = _Problem(op, p)

    def run(k):
        rng = np.random.default_rng(seed + k)
        return _descend(problem, _initial_field(grid, rng), max_iter, tol, window)

    runs = map_ordered(run, range(restarts))
    best = min(range(restarts), key=lambda k: (runs[k][1], k))
    v, _, iters, converged, history = runs[best]
    nz = np.flatnonzero(v)
    if len(nz) and v[nz[0]] < 0:
        v = -v
    u = ScalarField(grid, v)
    mu = rayleigh(u, p, op)
    residual = constraint_residual(u, p)
    return EigenEstimate(mu=mu, minimizer=u, constraint_residual=residual, iterations=iters,
                         restarts_used=restarts, converged=converged, history=history,
                         restart_mus=[float(rv[1]) for rv in runs])


def write_field_csv(u, path):
    """One row per cell: lattice index, centre coordinates, value."""
    idx = np.argwhere(u.grid.mask)
    centres = u.grid.centers()
    n = u.grid.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{k}" for k in range(n)] + [f"x{k}" for k in range(n)] + ["value"])
        for i, x, val in zip(idx, centres, u.values):
            w.writerow([*map(int, i), *map(repr, map(float, x)), repr(float(val))])
