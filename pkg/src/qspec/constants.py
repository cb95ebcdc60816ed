"""Closed-form constants and admissible exponent windows.

Every constant is evaluated as a sum of logarithms and exponentiated only at
the end, so the ``log_*`` variants stay finite where the plain value would
overflow (``100**n`` alone overflows a double near n = 154).

Exponents that sit inside the reverse Hölder windows differ from n (or from
1) by ~1e-22, which a double cannot represent as ``n + width``.  Functions
that depend on ``beta - 1`` therefore accept it separately as
``beta_excess``; when given it takes precedence over ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RangeError

LOG2 = math.log(2.0)
LOG10 = math.log(10.0)
LOG_SQRT3_PLUS_SQRT2 = math.log(math.sqrt(3.0) + math.sqrt(2.0))


def _require(cond, message):
    if not cond:
        raise RangeError(message)


def _finite(name, value):
    _require(isinstance(value, (int, float)) and not math.isnan(value), f"{name} must be a number, got {value!r}")


def _dim(n, minimum=1, why=""):
    _require(isinstance(n, int) or float(n).is_integer(), f"dimension n must be an integer, got {n!r}")
    _require(n >= minimum, f"dimension n must be >= {minimum}{why}, got {n}")
    return int(n)


def _K(K):
    _finite("K", K)
    _require(1.0 <= K < math.inf, f"quasiconformality coefficient K must satisfy 1 <= K < inf, got {K}")
    return float(K)


def _exp(log_value):
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


# ---------------------------------------------------------------- volumes

def log_omega_n(n):
    n = _dim(n)
    return LOG2 + 0.5 * n * math.log(math.pi) - math.log(n) - math.lgamma(0.5 * n)


def omega_n(n):
    """Volume of the unit ball in R^n."""
    return _exp(log_omega_n(n))


def log_omega_sphere(n):
    n = _dim(n)
    return LOG2 + 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n)


def omega_sphere(n):
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return _exp(log_omega_sphere(n))


def pi_p(p):
    """The constant 2*pi*(p-1)^(1/p) / (p*sin(pi/p)) of the convex-domain bound."""
    _finite("p", p)
    _require(1.0 < p < math.inf, f"pi_p needs p > 1, got {p}")
    return 2.0 * math.pi * (p - 1.0) ** (1.0 / p) / (p * math.sin(math.pi / p))


# ---------------------------------------------------------------- exponents

def _beta_excess(beta, beta_excess):
    if beta_excess is not None:
        _finite("beta_excess", beta_excess)
        _require(beta_excess > 0.0, f"beta - 1 must be positive, got {beta_excess}")
        return beta_excess
    _finite("beta", beta)
    _require(beta > 1.0, f"beta must exceed 1, got {beta}")
    return math.inf if math.isinf(beta) else beta - 1.0


def inv_sobolev_r(p, beta=None, *, beta_excess=None):
    """1/r for r = p*beta/(beta-1); equals 1/p when beta is infinite."""
    _finite("p", p)
    _require(p > 0, f"p must be positive, got {p}")
    eps = _beta_excess(beta, beta_excess)
    if math.isinf(eps):
        return 1.0 / p
    # (beta - 1) / (p * beta) written so that tiny excesses keep full precision
    return eps / (p * (1.0 + eps))


def sobolev_r(p, beta=None, *, beta_excess=None):
    """Integrability exponent r = p*beta/(beta-1) of the weighted embedding."""
    return 1.0 / inv_sobolev_r(p, beta, beta_excess=beta_excess)


def q_star(n, p, beta=None, *, beta_excess=None):
    """Lower end beta*n*p / (beta*p + n*(beta-1)) of the q-interval (q*, n]."""
    n = _dim(n, 2)
    return 1.0 / (1.0 / n + inv_sobolev_r(p, beta, beta_excess=beta_excess))


def q_star_inf(n, p):
    """q* = n*p/(p+n), the beta -> infinity limit of :func:`q_star`."""
    n = _dim(n, 2)
    _require(p > 0, f"p must be positive, got {p}")
    return n * p / (p + n)


def beta_from_pq(n, p, q):
    """beta = (p-n)q/(p-q), the integrability exponent paired with (p, q)."""
    n = _dim(n, 2)
    _require(p > n, f"p must exceed n, got p={p}, n={n}")
    _require(1.0 <= q < p, f"q must satisfy 1 <= q < p, got q={q}, p={p}")
    return (p - n) * q / (p - q)


def q_from_beta(n, p, beta):
    """q = p*beta/(p+beta-n), the inverse of :func:`beta_from_pq`."""
    n = _dim(n, 2)
    _require(p > n, f"p must exceed n, got p={p}, n={n}")
    _require(beta > 0, f"beta must be positive, got {beta}")
    return p * beta / (p + beta - n)


# ---------------------------------------------------------------- Poincaré

def log_poincare_convex_gap(n, gap, inv_r, diameter, volume):
    """Log of the convex Sobolev-Poincaré bound written in the gap variable.

    ``gap = 1/n - 1/q + 1/r``.  Using the gap instead of q keeps the formula
    accurate when (q*, n] is far narrower than machine epsilon.
    """
    _require(gap > 0.0, f"exponent gap 1/n - 1/q + 1/r must be positive, got {gap}")
    _require(diameter > 0 and volume > 0, "diameter and volume must be positive")
    e = 1.0 - 1.0 / n + gap
    return (n * math.log(diameter) - math.log(n) - math.log(volume)
            + e * (math.log(e) - math.log(gap))
            + (1.0 - 1.0 / n) * log_omega_n(n)
            + gap * math.log(volume))


def poincare_convex(n, r, q, d_diam, volume):
    """Upper bound for the (r, q) Sobolev-Poincaré constant of a convex domain."""
    n = _dim(n, 2)
    _require(q >= 1.0, f"q must be >= 1, got {q}")
    _require(r >= 1.0, f"r must be >= 1, got {r}")
    gap = 1.0 / n - 1.0 / q + 1.0 / r
    _require(gap > 0.0, f"(r, q) = ({r}, {q}) violates 1/n - 1/q + 1/r > 0 for n={n}")
    return _exp(log_poincare_convex_gap(n, gap, 1.0 / r, d_diam, volume))


# ---------------------------------------------------------------- reverse Hölder

def log_bojarski_iwaniec_C(n):
    n = _dim(n, 3, " (the constant has a factor n/(n-2))")
    return ((2 * n + 1.5 + 1.0 / n) * LOG2 + math.log(n / (n - 2.0)) / n
            + math.log(5.0) + log_omega_n(n))


def bojarski_iwaniec_C(n):
    """C(n) = 2^(2n+3/2+1/n) (n/(n-2))^(1/n) 5 omega_n, for n > 2."""
    return _exp(log_bojarski_iwaniec_C(n))


def log_rhi_C1(n, K):
    K = _K(K)
    n = _dim(n, 3, " (the constant has a factor n/(n-2))")
    return log_bojarski_iwaniec_C(n) + 2.0 * (n - 1) / n * math.log(4.0 * K)


def rhi_C1(n, K):
    return _exp(log_rhi_C1(n, K))


@dataclass(frozen=True)
class ExponentWindow:
    """Open interval (lower, lower + width).

    ``upper`` is a float and collapses onto ``lower`` whenever the width is
    below half an ulp, which is the normal situation here; membership tests
    should go through :meth:`contains_excess`.
    """

    lower: float
    log_width: float
    form: str = "alpha"

    @property
    def width(self):
        return _exp(self.log_width)

    @property
    def upper(self):
        return self.lower + self.width

    @property
    def empty(self):
        return self.log_width == -math.inf

    @property
    def representable(self):
        """Whether a double strictly between the endpoints exists."""
        return self.upper > self.lower

    @property
    def midpoint_excess(self):
        return 0.5 * self.width

    def contains_excess(self, excess):
        return 0.0 < excess < self.width

    def describe(self):
        return f"({self.lower!r}, {self.lower!r} + {self.width:.6e})"


def log_alpha_window_width(n, K):
    n = _dim(n, 3)
    return math.log(n - 1.0) - 2 * n * LOG10 - n * math.log(4.0) - n * log_rhi_C1(n, K)


def exponent_window(n, K, form="alpha"):
    """Admissible exponent window of the reverse Hölder inequality.

    ``form="alpha"`` gives (n, n + (n-1)/(10^{2n} 4^n C1^n)); ``form="beta"``
    the companion window for beta = alpha/n, whose width is 1/n of that.
    """
    n = _dim(n, 3)
    log_w = log_alpha_window_width(n, K)
    if form == "alpha":
        return ExponentWindow(float(n), log_w, "alpha")
    if form == "beta":
        return ExponentWindow(1.0, log_w - math.log(n), "beta")
    raise ValueError(f"form must be 'alpha' or 'beta', got {form!r}")


def log_weak_rhi_Cnp(n, p):
    n = _dim(n, 2)
    _require(p > 0, f"p must be positive, got {p}")
    return (1.0 + n / p) * LOG2 + 2 * n * LOG10


def weak_rhi_Cnp(n, p):
    """C(n, p) = 2^(1+n/p) 100^n."""
    return _exp(log_weak_rhi_Cnp(n, p))


def log_doubling_constant(n, K):
    n = _dim(n, 2)
    K = _K(K)
    return K ** (1.0 / (n - 1)) * 2.0 * (LOG_SQRT3_PLUS_SQRT2 + n - 1)


def doubling_constant(n, K):
    """exp{K^(1/(n-1)) 2 (log(sqrt3 + sqrt2) + n - 1)}."""
    return _exp(log_doubling_constant(n, K))


def log_rhi_Cnak(n, x, K, form="alpha", *, x_excess=None):
    """Log of C(n, alpha, K), or of C(n, beta, K) with n/alpha = 1/beta.

    ``x_excess`` is alpha - n (or beta - 1) and is only used to form n/alpha
    without rounding; the value is insensitive to it at double precision.
    """
    n = _dim(n, 3)
    K = _K(K)
    if form == "alpha":
        alpha = n + x_excess if x_excess is not None else x
        _require(alpha > 0, f"alpha must be positive, got {alpha}")
        ratio = n / alpha
    elif form == "beta":
        beta = 1.0 + x_excess if x_excess is not None else x
        _require(beta > 0, f"beta must be positive, got {beta}")
        ratio = 1.0 / beta
    else:
        raise ValueError(f"form must be 'alpha' or 'beta', got {form!r}")
    return ((1.0 - n + ratio) * LOG2 + 2 * n * LOG10 + math.log(K)
            + (ratio - 1.0) * log_omega_n(n) + log_doubling_constant(n, K))


def rhi_Cnak(n, x, K, form="alpha", *, x_excess=None):
    return _exp(log_rhi_Cnak(n, x, K, form, x_excess=x_excess))


# ---------------------------------------------------------------- moduli

def grotzsch_lambda_bounds(n):
    """Known (lower, upper) bounds for the Grötzsch ring constant lambda_n."""
    n = _dim(n, 2)
    if n == 2:
        return 4.0, 4.0
    return 2.0 ** (0.76 * (n - 1)), 2.0 * math.exp(n - 1)


def teichmuller_lower(n, t):
    """Lower bound for the modulus tau_n(t) of the Teichmüller ring.

    Uses the upper bound of lambda_n, which makes the logarithm largest and
    the bound smallest.
    """
    n = _dim(n, 2)
    _require(t > 0, f"t must be positive, got {t}")
    lam = grotzsch_lambda_bounds(n)[1]
    inner = math.log(0.5 * lam * (math.sqrt(1.0 + t) + math.sqrt(t)))
    return 2.0 ** (1 - n) * omega_sphere(n) * inner ** (1 - n)


# ---------------------------------------------------------------- report

def constants_record(n, K, p=None, beta=None, beta_excess=None):
    """Flat mapping of every constant applicable to the given inputs.

    Each entry carries the value and its natural logarithm.
    """
    n = _dim(n, 2)
    K = _K(K)
    out = {}

    def put(name, log_value):
        out[name] = {"value": _exp(log_value), "log": log_value}

    put("omega_n", log_omega_n(n))
    put("omega_sphere", log_omega_sphere(n))
    put("doubling_constant", log_doubling_constant(n, K))
    lo, hi = grotzsch_lambda_bounds(n)
    out["grotzsch_lambda_lower"] = {"value": lo, "log": math.log(lo)}
    out["grotzsch_lambda_upper"] = {"value": hi, "log": math.log(hi)}
    tau = teichmuller_lower(n, 2.0)
    out["teichmuller_lower_t2"] = {"value": tau, "log": math.log(tau)}
    if n >= 3:
        put("bojarski_iwaniec_C", log_bojarski_iwaniec_C(n))
        put("rhi_C1", log_rhi_C1(n, K))
        aw = exponent_window(n, K, "alpha")
        bw = exponent_window(n, K, "beta")
        out["alpha_window"] = {"lower": aw.lower, "width": aw.width, "log_width": aw.log_width,
                               "representable": aw.representable}
        out["beta_window"] = {"lower": bw.lower, "width": bw.width, "log_width": bw.log_width,
                              "representable": bw.representable}
    if p is not None:
        put("pi_p", math.log(pi_p(p)))
        put("weak_rhi_Cnp", log_weak_rhi_Cnp(n, p))
        if p > n:
            out["q_star_inf"] = {"value": q_star_inf(n, p), "log": math.log(q_star_inf(n, p))}
        if beta is not None or beta_excess is not None:
            inv_r = inv_sobolev_r(p, beta, beta_excess=beta_excess)
            out["sobolev_r"] = {"value": 1.0 / inv_r, "log": -math.log(inv_r)}
            qs = q_star(n, p, beta, beta_excess=beta_excess)
            out["q_star"] = {"value": qs, "log": math.log(qs)}
            if n >= 3:
                x_excess = beta_excess if beta_excess is not None else None
                put("rhi_Cnbk", log_rhi_Cnak(n, beta, K, "beta", x_excess=x_excess))
    return out
