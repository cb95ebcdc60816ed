"""Seeded numerical integration over domains and the Jacobian functionals
built on it.

Integrals of map quantities are always taken over the source domain; image
volumes come from the change of variables |phi(E)| = int_E |J|.
"""

from __future__ import annotations

import math

import numpy as np

from . import constants
from ._sampling import (IntegralResult, Method, Moments, QuadratureSpec, map_ordered, reduce_moments,
                        shard_sizes)
from .domains import Ball, draw_shard, tensor_rule
from .errors import NonFiniteIntegrandError, RangeError
from .qc_maps import coefficient

__all__ = [
    "IntegralResult", "QuadratureSpec", "Method", "integrate", "jacobian_norm_beta", "composition_norm",
    "composition_norm_bound", "doubling_ratio", "weak_rhi_check", "WeakRHIRecord",
]

# second stream for integrals paired with a first one; far from any seed + shard index in use
_PAIR_OFFSET = 1 << 32


def _check_finite(pts, vals):
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteIntegrandError(pts[i], vals[i])


def integrate(f, d, spec, exclude_radius=0.0):
    """Integrate the vectorized function ``f`` over ``d``.

    Monte Carlo errors are sample-std/sqrt(N) scaled by the measure; for
    domains without a closed-form measure the binomial error of the
    acceptance rate is added in quadrature.
    """
    if spec.method is Method.TENSOR_GRID:
        pts, wts = tensor_rule(d, spec.budget)
        if exclude_radius > 0:
            close = np.linalg.norm(pts, axis=1) < exclude_radius
            if close.any():
                raise NonFiniteIntegrandError(pts[np.flatnonzero(close)[0]], float("nan"))
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(pts, vals)
        return IntegralResult(float(wts @ vals), None, len(pts))

    def shard(args):
        index, size = args
        pts, tries = draw_shard(d, spec.seed, index, size, exclude_radius)
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(pts, vals)
        return Moments.of(vals), tries

    parts = map_ordered(shard, enumerate(shard_sizes(spec.budget)))
    m = reduce_moments(p for p, _ in parts)
    tries = sum(t for _, t in parts)
    exact = d.exact_measure()
    if exact is not None:
        vol = exact
        var = vol ** 2 * m.variance / m.count
    else:
        lo, hi = d.bounding_box()
        box = float(np.prod(hi - lo))
        rate = m.count / tries
        vol = box * rate
        var = vol ** 2 * m.variance / m.count + (m.mean * box) ** 2 * rate * (1 - rate) / tries
    err = math.sqrt(var) if spec.want_error else None
    return IntegralResult(float(vol * m.mean), err, m.count)


def _power(result, exponent):
    """``result ** exponent`` with a first-order propagated error."""
    value = result.value ** exponent
    err = None
    if result.std_error is not None:
        err = abs(exponent) * result.value ** (exponent - 1.0) * result.std_error if result.value > 0 else math.inf
    return IntegralResult(value, err, result.samples_used)


def jacobian_integral(m, d, spec, power=1.0):
    """int_d |J|^power."""
    return integrate(lambda x: np.abs(m.jacobian(x)) ** power, d, spec, m.singular_radius)


def jacobian_norm_beta(m, d, beta, spec):
    """(int_d |J|^beta)^(1/beta), the L_beta norm of the Jacobian."""
    if not beta > 1:
        raise RangeError(f"beta must exceed 1, got {beta}")
    return _power(jacobian_integral(m, d, spec, beta), 1.0 / beta)


def dilatation_integral(m, d, p, q, spec):
    """int_d (|Dphi|^p / |J|)^(q/(p-q))."""
    e = q / (p - q)
    return integrate(lambda x: m.dilatation(x, p) ** e, d, spec, m.singular_radius)


def _check_pq(n, p, q):
    if not p > n:
        raise RangeError(f"p must exceed n, got p={p}, n={n}")
    if not 1.0 <= q < p:
        raise RangeError(f"q must satisfy 1 <= q < p, got q={q}, p={p}")


def composition_norm(m, d, p, q, spec):
    """K_{p,q}(d) = (int_d (|Dphi|^p/|J|)^(q/(p-q)))^((p-q)/(pq))."""
    _check_pq(m.dim, p, q)
    return _power(dilatation_integral(m, d, p, q, spec), (p - q) / (p * q))


def composition_norm_bound(n, p, q, K, vol_source, vol_target):
    """K^(1/n) |target|^((p-n)/(np)) |source|^((n-q)/(nq)), valid for q <= n."""
    _check_pq(n, p, q)
    if q > n:
        raise RangeError(f"the closed-form norm bound needs q <= n, got q={q}, n={n}")
    if not K >= 1:
        raise RangeError(f"K must be >= 1, got {K}")
    return math.exp(math.log(K) / n + (p - n) / (n * p) * math.log(vol_target)
                    + (n - q) / (n * q) * math.log(vol_source))


def derivative_power_integral(m, d, power, spec):
    """int_d |Dphi|^power."""
    return integrate(lambda x: m.operator_norm(x) ** power, d, spec, m.singular_radius)


def _paired(spec):
    return QuadratureSpec(spec.method, spec.budget, spec.seed + _PAIR_OFFSET, spec.want_error)


def doubling_ratio(m, center, r, spec):
    """int_{B(c,2r)} |J| / int_{B(c,r)} |J|, i.e. |phi(2B)| / |phi(B)|.

    The two integrals use independent streams; the error is propagated as
    for a ratio of independent estimates.
    """
    n = m.dim
    big = jacobian_integral(m, Ball(n, 2.0 * r, center), spec)
    small = jacobian_integral(m, Ball(n, r, center), _paired(spec))
    if not small.value > 0:
        raise RangeError(f"inner-ball Jacobian integral is not positive ({small.value})")
    ratio = big.value / small.value
    err = None
    if big.std_error is not None and small.std_error is not None:
        err = ratio * math.hypot(big.std_error / big.value, small.std_error / small.value)
    return IntegralResult(ratio, err, big.samples_used + small.samples_used)


class WeakRHIRecord(dict):
    """Plain mapping with attribute access to its keys."""

    __getattr__ = dict.__getitem__


def weak_rhi_check(m, spec, *, p=None, p_excess=None, K=None):
    """Compare (avg_{B(0,1)} |Dphi|^p)^(1/p) with C(n,p) (avg_{B(0,2)} |Dphi|^n)^(1/n).

    The exponent must lie in (n, n + width(K)); since that width is ~1e-22,
    pass it as ``p_excess = p - n``.  ``K`` defaults to the map's analytic
    coefficient.
    """
    n = m.dim
    if K is None:
        K = coefficient(m)
    if K is None:
        raise ValueError("weak_rhi_check needs K for maps without an analytic coefficient")
    window = constants.exponent_window(n, K, "alpha")
    if p_excess is None:
        if p is None:
            raise ValueError("give p or p_excess")
        p_excess = p - n
    if not window.contains_excess(p_excess):
        raise RangeError(f"p = n + {p_excess!r} is outside the admissible window {window.describe()} for K = {K}")
    p_value = n + p_excess

    unit = Ball(n, 1.0)
    double = Ball(n, 2.0)
    top = derivative_power_integral(m, unit, p_value, spec)
    bottom = derivative_power_integral(m, double, float(n), _paired(spec))
    top_avg = IntegralResult(top.value / unit.exact_measure(),
                             None if top.std_error is None else top.std_error / unit.exact_measure(),
                             top.samples_used)
    bottom_avg = IntegralResult(bottom.value / double.exact_measure(),
                                None if bottom.std_error is None else bottom.std_error / double.exact_measure(),
                                bottom.samples_used)
    lhs = _power(top_avg, 1.0 / p_value)
    mean_n = _power(bottom_avg, 1.0 / n)
    c_np = constants.weak_rhi_Cnp(n, p_value)
    rhs = c_np * mean_n.value
    lhs_hi = lhs.upper()
    rhs_lo = c_np * mean_n.lower()
    return WeakRHIRecord(
        lhs=lhs.value, lhs_std_error=lhs.std_error,
        rhs=rhs, rhs_std_error=None if mean_n.std_error is None else c_np * mean_n.std_error,
        constant_used=c_np, p=p_value, p_excess=p_excess, K=K,
        window_lower=window.lower, window_width=window.width,
        holds=lhs.value <= rhs, holds_3sigma=lhs_hi <= rhs_lo, margin=rhs_lo - lhs_hi,
    )
