"""Check suites that test the analytic inequalities on the map zoo.

Every check produces rows ``{check, map, lhs, rhs, margin, holds}`` with
``margin = rhs + tolerance - lhs`` (for equalities, ``tolerance - |lhs - rhs|``)
and ``holds = margin >= 0``.  Monte Carlo tolerances are 3 sigma.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import constants, quadrature
from ._sampling import QuadratureSpec
from .bounds import bound_stretched_cube
from .domains import Ball, stretch_cube, sample
from .qc_maps import Identity, Linear, RadialStretch, coefficient, estimate_K, zoo

SIGMAS = 3.0
# rounding slack for comparisons that are exact in real arithmetic
ROUNDING = 1e-12
NORM_PAIRS = ((4.0, 2.0), (6.0, 1.0), (6.0, 3.0))
WINDOW_FRACTIONS = (0.25, 0.5, 0.75)
SUITES = ("norm", "doubling", "rhi", "relations", "hadamard", "volume")


@dataclass
class CheckRow:
    check: str
    map: str
    lhs: float
    rhs: float
    margin: float
    holds: bool
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _sigma(*errors):
    return SIGMAS * math.sqrt(sum((e or 0.0) ** 2 for e in errors))


def _upper_row(check, m, lhs, rhs, tol, **details):
    margin = rhs + tol - lhs
    return CheckRow(check, m.describe(), float(lhs), float(rhs), float(margin), bool(margin >= 0), details)


def _equal_row(check, m, lhs, rhs, tol, **details):
    margin = tol - abs(lhs - rhs)
    return CheckRow(check, m.describe(), float(lhs), float(rhs), float(margin), bool(margin >= 0), details)


def ball_image_volume(m, radius=1.0):
    """|m(B(0, radius))| in closed form, or None."""
    base = constants.omega_n(m.dim) * radius ** m.dim
    if isinstance(m, Identity):
        return base
    if isinstance(m, Linear):
        return m.det * base
    if isinstance(m, RadialStretch):
        return constants.omega_n(m.dim) * radius ** (m.dim * (m.a + 1.0))
    return None


def norm_checks(maps, spec, pairs=NORM_PAIRS):
    """Composition-operator norm against its closed-form bound on the unit ball."""
    rows = []
    for m in maps:
        n = m.dim
        ball = Ball(n, 1.0)
        K = coefficient(m)
        target = quadrature.jacobian_integral(m, ball, spec.with_seed(spec.seed + quadrature._PAIR_OFFSET))
        for p, q in pairs:
            norm = quadrature.composition_norm(m, ball, p, q, spec)
            bound = quadrature.composition_norm_bound(n, p, q, K, ball.exact_measure(), target.value)
            # propagate the image-volume error through the bound's power
            bound_err = None
            if target.std_error is not None:
                bound_err = bound * (p - n) / (n * p) * target.std_error / target.value
            tol = _sigma(norm.std_error, bound_err) + ROUNDING * bound
            rows.append(_upper_row("norm", m, norm.value, bound, tol, p=p, q=q, K=K,
                                   lhs_std_error=norm.std_error, image_volume=target.value))
            if isinstance(m, Identity):
                rows.append(_equal_row("norm-equality", m, norm.value, bound, tol, p=p, q=q))
    return rows


def doubling_closed_form(m):
    """|phi(B(0,2r))| / |phi(B(0,r))| when it is known exactly."""
    if isinstance(m, (Identity, Linear)):
        return 2.0 ** m.dim
    if isinstance(m, RadialStretch):
        return 2.0 ** (m.dim * (m.a + 1.0))
    return None


def doubling_checks(maps, spec, center=None, radius=0.5):
    rows = []
    for m in maps:
        n = m.dim
        c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        K = coefficient(m)
        ratio = quadrature.doubling_ratio(m, c, radius, spec)
        const = constants.doubling_constant(n, K)
        tol = _sigma(ratio.std_error)
        rows.append(_upper_row("doubling", m, ratio.value, const, tol, K=K, radius=radius,
                               lhs_std_error=ratio.std_error))
        exact = doubling_closed_form(m) if not np.any(c) else None
        if exact is not None:
            rows.append(_equal_row("doubling-closed-form", m, ratio.value, exact, tol + ROUNDING * exact))
    return rows


def rhi_checks(maps, spec, fractions=WINDOW_FRACTIONS, K=None):
    """Weak reverse Hölder at several exponents inside the admissible window.

    K defaults to the sampled n-dilatation of each map, so the window is the
    one the map's measured distortion admits.
    """
    rows = []
    for m in maps:
        k_used = K if K is not None else estimate_K(m, Ball(m.dim, 2.0), spec)
        k_used = max(1.0, k_used)
        window = constants.exponent_window(m.dim, k_used, "alpha")
        for frac in fractions:
            excess = frac * window.width
            rec = quadrature.weak_rhi_check(m, spec, p_excess=excess, K=k_used)
            tol = -_sigma(rec.lhs_std_error, rec.rhs_std_error)
            # one-sided at 3 sigma: the inequality must survive both errors
            rows.append(_upper_row("rhi", m, rec.lhs, rec.rhs, tol, K=k_used, p_excess=excess,
                                   constant_used=rec.constant_used, window_width=window.width))
    return rows


def relation_checks(maps, spec, pairs=NORM_PAIRS):
    """The two pointwise consequences of |Dphi|^n <= K J <= K |Dphi|^n,
    integrated over the unit ball on one shared sample:

        int (|Dphi|^p/J)^(q/(p-q)) <= K^(q/(p-q)) int |Dphi|^beta
        int |Dphi|^beta <= int (|Dphi|^p/J)^(q/(p-q))

    with beta = (p-n)q/(p-q).  Because both sides see the same points, the
    sample sums obey the inequalities exactly.  Where beta > 1 the
    Jacobian's L_beta norm must also be finite and stable under a doubled
    budget.
    """
    rows = []
    for m in maps:
        n = m.dim
        ball = Ball(n, 1.0)
        K = coefficient(m)
        for p, q in pairs:
            beta = constants.beta_from_pq(n, p, q)
            dil = quadrature.dilatation_integral(m, ball, p, q, spec)
            deriv = quadrature.derivative_power_integral(m, ball, beta, spec)
            upper = K ** (q / (p - q)) * deriv.value
            rows.append(_upper_row("dilatation-upper", m, dil.value, upper, ROUNDING * upper, p=p, q=q, beta=beta))
            rows.append(_upper_row("dilatation-lower", m, deriv.value, dil.value, ROUNDING * dil.value,
                                   p=p, q=q, beta=beta))
            if beta > 1:
                one = quadrature.jacobian_norm_beta(m, ball, beta, spec)
                two = quadrature.jacobian_norm_beta(
                    m, ball, beta, QuadratureSpec(spec.method, 2 * spec.budget, spec.seed + quadrature._PAIR_OFFSET,
                                                  spec.want_error))
                finite = math.isfinite(one.value) and math.isfinite(two.value)
                tol = _sigma(one.std_error, two.std_error) if finite else -math.inf
                rows.append(_equal_row("jacobian-beta-stable", m, one.value, two.value, tol, p=p, q=q, beta=beta,
                                       std_error_ratio=(one.std_error / two.std_error
                                                        if one.std_error and two.std_error else None)))
    return rows


def hadamard_checks(maps, count=100_000, seed=0):
    """|J| <= |Dphi|^n at sampled points of B(0, 2)."""
    rows = []
    for m in maps:
        pts, _ = sample(Ball(m.dim, 2.0), QuadratureSpec.mc(count, seed), exclude_radius=m.singular_radius)
        ratio = np.abs(m.jacobian(pts)) / m.operator_norm(pts) ** m.dim
        worst = float(np.max(ratio))
        rows.append(_upper_row("hadamard", m, worst, 1.0, ROUNDING, points=len(pts)))
    return rows


def volume_checks(maps, spec):
    """int_B |J| against the closed-form volume of the image of the unit ball."""
    rows = []
    for m in maps:
        exact = ball_image_volume(m)
        if exact is None:
            continue
        got = quadrature.jacobian_integral(m, Ball(m.dim, 1.0), spec)
        rows.append(_equal_row("change-of-variables", m, got.value, exact,
                               _sigma(got.std_error) + ROUNDING * exact, lhs_std_error=got.std_error))
    return rows


def run_suite(name, maps, spec, **kw):
    if name == "norm":
        return norm_checks(maps, spec, **kw)
    if name == "doubling":
        return doubling_checks(maps, spec, **kw)
    if name == "rhi":
        return rhi_checks(maps, spec, **kw)
    if name == "relations":
        return relation_checks(maps, spec, **kw)
    if name == "hadamard":
        return hadamard_checks(maps, count=spec.budget, seed=spec.seed)
    if name == "volume":
        return volume_checks(maps, spec)
    raise ValueError(f"unknown check suite {name!r}; choose from {', '.join(SUITES)} or all")


def default_maps(n):
    return zoo(n)


# ---------------------------------------------------------------- the stretched cube

def stretched_cube_check(n, a, p, spec):
    """The stretched-cube bound end to end.

    Measures sup (a+1)|x|^{na} over the cube by sampling, compares it with
    the nominal value a+1 (which is the supremum only when the cube's
    corners lie on the unit sphere, i.e. n = 2), and evaluates the bound.
    """
    cube = stretch_cube(n)
    m = RadialStretch(n, a)
    pts, _ = sample(cube, spec, exclude_radius=m.singular_radius)
    jac_sup = float(np.max(m.jacobian(pts)))
    corner = math.sqrt(n / 2.0)
    exact_sup = (a + 1.0) * corner ** (n * a)
    image = quadrature.jacobian_integral(m, cube, spec.with_seed(spec.seed + quadrature._PAIR_OFFSET))
    report = bound_stretched_cube(n, p, a)
    nominal = a + 1.0
    rows = [
        CheckRow("jac-sup-at-most-nominal", m.describe(), jac_sup, nominal, nominal - jac_sup, jac_sup <= nominal,
                 {"n": n, "a": a, "exact_sup": exact_sup}),
        CheckRow("jac-sup-near-nominal", m.describe(), jac_sup, 0.95 * nominal, jac_sup - 0.95 * nominal,
                 jac_sup >= 0.95 * nominal, {"n": n, "a": a}),
        CheckRow("image-volume-at-most-omega", m.describe(), image.value, constants.omega_n(n),
                 constants.omega_n(n) - image.upper(), image.upper() <= constants.omega_n(n),
                 {"std_error": image.std_error}),
        CheckRow("cube-volume", "cube", cube.exact_measure(), 2.0 ** (n / 2.0),
                 ROUNDING - abs(cube.exact_measure() / 2.0 ** (n / 2.0) - 1.0),
                 abs(cube.exact_measure() / 2.0 ** (n / 2.0) - 1.0) <= ROUNDING, {}),
    ]
    return {"rows": rows, "bound": report, "jac_sup": jac_sup, "exact_sup": exact_sup,
            "image_volume": image.to_dict()}
