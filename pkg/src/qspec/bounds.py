"""Lower bounds for the first non-trivial Neumann eigenvalue of the p-Laplacian.

Each bound is assembled in log space as a list of named factors whose sum
is log(1/mu_lower), so any report can be re-derived from its own
intermediates.  The inner infimum over q in (q*, n] is carried out in the
gap variable ``g = 1/n - 1/q + 1/r`` in (0, 1/r]; g = 1/r is q = n.  Near
the reverse Hölder windows 1/r is ~1e-22 and q itself is not representable
apart from n, while g is.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import constants
from .errors import RangeError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# log(gap) is scanned over [log(1/r) - SCAN_SPAN, log(1/r)]
SCAN_SPAN = 60.0
SCAN_GRID = 1000
SCAN_RTOL = 1e-10


@dataclass
class BoundReport:
    theorem: str
    inputs: dict
    mu_lower: float
    log_mu_lower: float
    factors: list = field(default_factory=list)
    intermediates: dict = field(default_factory=dict)
    q_chosen: float | None = None
    r: float | None = None
    gap: float | None = None
    optimum: str | None = None
    notes: list = field(default_factory=list)

    def recompute_log_mu(self):
        return -math.fsum(log_v for _, log_v in self.factors)

    def recompute_mu(self):
        return math.exp(self.recompute_log_mu())

    def to_dict(self):
        out = asdict(self)
        out["factors"] = [{"name": k, "log": v} for k, v in self.factors]
        return out

    def to_row(self):
        row = {"theorem": self.theorem, "mu_lower": self.mu_lower, "log_mu_lower": self.log_mu_lower,
               "q_chosen": self.q_chosen, "r": self.r, "gap": self.gap, "optimum": self.optimum}
        row.update({f"in_{k}": v for k, v in self.inputs.items()})
        row.update({f"log_{k}": v for k, v in self.factors})
        row["notes"] = " | ".join(self.notes)
        return row


def _check_pn(n, p):
    if not isinstance(n, int) or n < 2:
        raise RangeError(f"dimension n must be an integer >= 2, got {n}")
    if not p > n:
        raise RangeError(f"p must exceed n (p={p}, n={n}); the bounds hold only for p > n")


def _check_K(K):
    if not 1.0 <= K < math.inf:
        raise RangeError(f"K must satisfy 1 <= K < inf, got {K}")


def _ratio_term(n, p, gap):
    """p * e * log(e / gap) with e = 1 - 1/n + gap: the only q-dependent factor."""
    e = 1.0 - 1.0 / n + gap
    return p * e * (math.log(e) - math.log(gap))


def scan_gap(objective, inv_r):
    """Minimize ``objective(gap)`` over gap in (0, inv_r].

    Golden-section search on log(gap), after checking on a grid that the
    objective is unimodal there; otherwise the best grid point is refined.
    Returns (gap, value, location, notes).
    """
    notes = []
    t_hi = math.log(inv_r)
    t_lo = t_hi - SCAN_SPAN
    ts = np.linspace(t_lo, t_hi, SCAN_GRID)
    vals = np.array([objective(math.exp(t)) for t in ts])
    k = int(np.argmin(vals))
    diffs = np.diff(vals)
    unimodal = bool(np.all(diffs[:k] <= 0) and np.all(diffs[k:] >= 0))
    if unimodal:
        a, b = t_lo, t_hi
    else:
        notes.append("q-objective not unimodal on the scan grid; refined the best grid point")
        a, b = ts[max(k - 1, 0)], ts[min(k + 1, SCAN_GRID - 1)]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = objective(math.exp(c)), objective(math.exp(d))
    while b - a > SCAN_RTOL * max(1.0, abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = objective(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = objective(math.exp(d))
    best_t, best = (c, fc) if fc <= fd else (d, fd)
    f_end = objective(inv_r)
    if f_end <= best:
        return inv_r, f_end, "q=n", notes
    return math.exp(best_t), best, "interior", notes


def _q_from_gap(n, inv_r, gap):
    if gap == inv_r:
        return float(n)
    return 1.0 / (1.0 / n + inv_r - gap)


def _finish(theorem, inputs, factors, intermediates, notes, n=None, inv_r=None, gap=None, optimum=None):
    log_inv_mu = math.fsum(v for _, v in factors)
    for name, v in factors:
        if not math.isfinite(v):
            raise RangeError(f"bound factor {name} is not finite")
    log_mu = -log_inv_mu
    report = BoundReport(theorem=theorem, inputs=inputs, mu_lower=math.exp(log_mu), log_mu_lower=log_mu,
                         factors=factors, intermediates=intermediates, notes=notes)
    if inv_r is not None:
        report.r = 1.0 / inv_r
        report.gap = gap
        report.q_chosen = _q_from_gap(n, inv_r, gap)
        report.optimum = optimum
    return report


# ---------------------------------------------------------------- convex

def bound_convex(n, p, diameter):
    """(pi_p / d)^p for a convex domain of diameter d."""
    if not p >= 2:
        raise RangeError(f"the convex-domain bound needs p >= 2, got {p}")
    if not diameter > 0:
        raise RangeError(f"diameter must be positive, got {diameter}")
    notes = ["p = 2 is the boundary case of the stated range p > 2"] if p == 2 else []
    pp = constants.pi_p(p)
    factors = [("diameter_over_pi_p_pow_p", p * (math.log(diameter) - math.log(pp)))]
    return _finish("convex", {"n": n, "p": p, "diameter": diameter}, factors, {"pi_p": pp}, notes)


# ---------------------------------------------------------------- beta-regular and infinity-regular

def _regular(theorem, n, p, K, inv_r, vol_target, jac_norm, base_diameter, base_volume, inputs, notes):
    _check_pn(n, p)
    _check_K(K)
    if not jac_norm > 0:
        raise RangeError(f"Jacobian norm must be positive, got {jac_norm}")
    if not (vol_target > 0 and base_volume > 0 and base_diameter > 0):
        raise RangeError("volumes and diameter must be positive")
    log_omega = constants.log_omega_n(n)
    log_v = math.log(base_volume)

    def objective(gap):
        # p log B_{r,q} + p (1/q - 1/n) log|base|
        return p * constants.log_poincare_convex_gap(n, gap, inv_r, base_diameter, base_volume) \
            + p * (inv_r - gap) * log_v

    gap, best, where, scan_notes = scan_gap(objective, inv_r)
    factors = [
        ("poincare_inf", best),
        ("K_pow_p_over_n", p / n * math.log(K)),
        ("target_volume_pow", (p - n) / n * math.log(vol_target)),
        ("jacobian_norm", math.log(jac_norm)),
    ]
    intermediates = {
        "omega_n": math.exp(log_omega),
        "poincare_constant_B_rq": math.exp(constants.log_poincare_convex_gap(n, gap, inv_r, base_diameter,
                                                                             base_volume)),
        "base_diameter": base_diameter,
        "base_volume": base_volume,
        "inv_r": inv_r,
    }
    return _finish(theorem, inputs, factors, intermediates, notes + scan_notes, n, inv_r, gap, where)


def bound_beta_regular(n, p, K, beta, vol_target, jac_norm, *, beta_excess=None,
                       base_diameter=None, base_volume=None):
    """Bound for a K-quasiconformal beta-regular image of a convex base.

    ``jac_norm`` is ||J | L_beta(base)||.  Without ``base_diameter`` and
    ``base_volume`` the base is the unit ball.  ``beta = math.inf`` gives
    the infinity-regular bound with r = p.
    """
    unit = base_diameter is None and base_volume is None
    if unit:
        base_diameter, base_volume = 2.0, constants.omega_n(n)
    elif base_diameter is None or base_volume is None:
        raise ValueError("give both base_diameter and base_volume, or neither")
    inv_r = constants.inv_sobolev_r(p, beta, beta_excess=beta_excess)
    inputs = {"n": n, "p": p, "K": K, "beta": beta, "beta_excess": beta_excess, "vol_target": vol_target,
              "jac_norm": jac_norm, "base_diameter": base_diameter, "base_volume": base_volume}
    return _regular("unit-ball" if unit else "beta", n, p, K, inv_r, vol_target, jac_norm,
                    base_diameter, base_volume, inputs, [])


def bound_infty_regular(n, p, K, vol_source, vol_target, jac_sup, source_diameter=None,
                        diameter_convention="true"):
    """Bound for a K-quasiconformal infinity-regular image, q* = np/(p+n).

    ``source_diameter`` defaults to the diameter of a ball of volume
    ``vol_source``; pass the cube diameter explicitly for cubes and record
    the convention used in ``diameter_convention``.
    """
    if source_diameter is None:
        source_diameter = 2.0 * (vol_source / constants.omega_n(n)) ** (1.0 / n)
    inputs = {"n": n, "p": p, "K": K, "vol_source": vol_source, "vol_target": vol_target, "jac_sup": jac_sup,
              "source_diameter": source_diameter, "diameter_convention": diameter_convention}
    notes = [f"source diameter convention: {diameter_convention}"]
    return _regular("infty", n, p, K, 1.0 / p, vol_target, jac_sup, source_diameter, vol_source, inputs, notes)


def bound_unit_ball_formula(n, p, K, beta, vol_target, jac_norm, *, beta_excess=None):
    """The unit-ball bound evaluated from its closed form
    2^{np}/n^p ((1-1/q+1/r)/(1/n-1/q+1/r))^{p-p/q+p/r} omega_n^{p/r-p/n},
    independently of the convex Poincaré route."""
    _check_pn(n, p)
    _check_K(K)
    inv_r = constants.inv_sobolev_r(p, beta, beta_excess=beta_excess)
    log_omega = constants.log_omega_n(n)

    def objective(gap):
        return (n * p * constants.LOG2 - p * math.log(n) + _ratio_term(n, p, gap)
                + (p * inv_r - p / n) * log_omega)

    gap, best, where, notes = scan_gap(objective, inv_r)
    factors = [
        ("ball_inf", best),
        ("K_pow_p_over_n", p / n * math.log(K)),
        ("target_volume_pow", (p - n) / n * math.log(vol_target)),
        ("jacobian_norm", math.log(jac_norm)),
    ]
    inputs = {"n": n, "p": p, "K": K, "beta": beta, "beta_excess": beta_excess, "vol_target": vol_target,
              "jac_norm": jac_norm}
    return _finish("unit-ball", inputs, factors, {"omega_n": math.exp(log_omega)}, notes, n, inv_r, gap, where)


# ---------------------------------------------------------------- the stretched cube

def stretched_cube_log_inv_mu(n, p, a):
    """log of inf_q ((1-1/q+1/p)/(1/n-1/q+1/p))^{p+1-p/q} 2^{n(p+1)/2}/n^p (a+1)^{p/n} omega_n^{p+1-p/n},
    the closed-form estimate of 1/mu_p for the stretched cube, with q = n."""
    _check_pn(n, p)
    # the ratio factor is minimized at q = n (see scan_gap): ratio = (1 - 1/n + 1/p) p, exponent p(1-1/n+1/p)
    e = 1.0 - 1.0 / n + 1.0 / p
    return (p * e * math.log(e * p) + 0.5 * n * (p + 1) * constants.LOG2 - p * math.log(n)
            + p / n * math.log(a + 1.0) + (p + 1.0 - p / n) * constants.log_omega_n(n))


def bound_stretched_cube(n, p, a):
    """Closed-form bound for the image of the cube |x_k| < sqrt(2)/2 under
    the stretch |x|^a x, taking d = 2, K = a + 1 and sup J = a + 1.

    The report also carries the generic infinity-regular assembly evaluated
    on the same inputs, which does not reduce to the closed form;
    see the notes.
    """
    _check_pn(n, p)
    if not a >= 0:
        raise RangeError(f"stretch exponent must be >= 0, got {a}")
    log_omega = constants.log_omega_n(n)
    inv_r = 1.0 / p

    def objective(gap):
        return _ratio_term(n, p, gap)

    gap, ratio_best, where, notes = scan_gap(objective, inv_r)
    factors = [
        ("ratio_inf", ratio_best),
        ("two_pow", 0.5 * n * (p + 1) * constants.LOG2),
        ("n_pow", -p * math.log(n)),
        ("stretch_pow", p / n * math.log(a + 1.0)),
        ("omega_pow", (p + 1.0 - p / n) * log_omega),
    ]
    generic = bound_infty_regular(n, p, a + 1.0, 2.0 ** (n / 2.0), math.exp(log_omega), a + 1.0,
                                  source_diameter=2.0, diameter_convention="nominal (d_Q = 2)")
    intermediates = {
        "cube_volume": 2.0 ** (n / 2.0),
        "cube_diameter_nominal": 2.0,
        "cube_diameter_true": math.sqrt(2.0 * n),
        "jac_sup_nominal": a + 1.0,
        "K_nominal": a + 1.0,
        "K_analytic": (a + 1.0) ** (n - 1),
        "generic_assembly_mu_lower": generic.mu_lower,
    }
    notes = notes + [
        "closed form uses d_Q = 2, exact only for n = 2 (true diameter sqrt(2n))",
        "closed form uses K = a+1 (linear dilatation); the analytic coefficient is (a+1)^(n-1)",
        "generic infinity-regular assembly on the same inputs gives (a+1)^(p/n+1) omega_n^(p-1) "
        "in place of (a+1)^(p/n) omega_n^(p+1-p/n)",
    ]
    if n > 2:
        notes.append("for n > 2 the cube corners have |x| > 1, so sup (a+1)|x|^(na) exceeds a+1")
    return _finish("stretched-cube", {"n": n, "p": p, "a": a}, factors, intermediates, notes, n, inv_r, gap, where)


# ---------------------------------------------------------------- quasi-balls

def _check_window(n, K, beta, beta_excess):
    window = constants.exponent_window(n, K, "beta")
    excess = beta_excess if beta_excess is not None else beta - 1.0
    if not window.contains_excess(excess):
        raise RangeError(f"beta = 1 + {excess!r} is outside the admissible window {window.describe()} "
                         f"for n = {n}, K = {K}")
    return window, excess


def _quasiball_parts(n, p, K, beta, beta_excess):
    if n < 3:
        raise RangeError(f"the quasi-ball bound needs n >= 3, got {n}")
    _check_pn(n, p)
    _check_K(K)
    window, excess = _check_window(n, K, beta, beta_excess)
    inv_r = constants.inv_sobolev_r(p, beta_excess=excess)
    log_omega = constants.log_omega_n(n)
    log_c = constants.log_rhi_Cnak(n, 1.0 + excess, K, "beta", x_excess=excess)

    def objective(gap):
        return (n * p * constants.LOG2 - p * math.log(n) + _ratio_term(n, p, gap)
                + (p * inv_r - p / n) * log_omega)

    gap, best, where, notes = scan_gap(objective, inv_r)
    return window, excess, inv_r, log_omega, log_c, gap, best, where, notes


def bound_quasiball(n, p, K, beta, vol_target, *, beta_excess=None):
    """Bound for a K-quasi-ball of volume ``vol_target``; the Jacobian norm
    is replaced by the reverse Hölder estimate C(n, beta, K) |Omega|.
    Only beta inside the admissible window is accepted."""
    window, excess, inv_r, log_omega, log_c, gap, best, where, notes = \
        _quasiball_parts(n, p, K, beta, beta_excess)
    if not vol_target > 0:
        raise RangeError(f"volume must be positive, got {vol_target}")
    factors = [
        ("ball_inf", best),
        ("K_pow_p_over_n", p / n * math.log(K)),
        ("rhi_constant", log_c),
        ("volume_pow_p_over_n", p / n * math.log(vol_target)),
    ]
    intermediates = {"rhi_C_n_beta_K": math.exp(log_c), "log_rhi_C_n_beta_K": log_c,
                     "rhi_C1": constants.rhi_C1(n, K), "beta_window_width": window.width,
                     "omega_n": math.exp(log_omega)}
    inputs = {"n": n, "p": p, "K": K, "beta": 1.0 + excess, "beta_excess": excess, "vol_target": vol_target}
    return _finish("quasiball", inputs, factors, intermediates, notes, n, inv_r, gap, where)


def bound_qhbc(n, p, K, gamma, beta, R_star, *, beta_excess=None):
    """mu_p >= M_p(K, gamma) / R*^p for a quasi-ball with the
    gamma-quasihyperbolic boundary condition.

    beta = beta(gamma) must be supplied.  M_p is the reciprocal of the
    product of constants, which is what the quasi-ball bound gives after
    substituting |Omega| = omega_n R*^n.
    """
    window, excess, inv_r, log_omega, log_c, gap, best, where, notes = \
        _quasiball_parts(n, p, K, beta, beta_excess)
    if not R_star > 0:
        raise RangeError(f"R* must be positive, got {R_star}")
    # best already holds (p/r - p/n) log omega; M_p carries omega^(p/r)
    log_inv_M = best + p / n * log_omega + p / n * math.log(K) + log_c
    factors = [("inv_M_p", log_inv_M), ("R_star_pow_p", p * math.log(R_star))]
    intermediates = {"M_p": math.exp(-log_inv_M), "log_M_p": -log_inv_M, "rhi_C_n_beta_K": math.exp(log_c),
                     "beta_window_width": window.width, "gamma": gamma}
    notes = notes + ["M_p taken as the reciprocal of the product of constants so that the bound follows "
                     "from the quasi-ball bound with |Omega| = omega_n R*^n",
                     "beta(gamma) supplied by the caller; no conversion from gamma is performed"]
    inputs = {"n": n, "p": p, "K": K, "gamma": gamma, "beta": 1.0 + excess, "beta_excess": excess,
              "R_star": R_star}
    return _finish("qhbc", inputs, factors, intermediates, notes, n, inv_r, gap, where)
