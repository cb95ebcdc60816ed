import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as o
from qspec import constants as c
from qspec.errors import RangeError

RTOL = 1e-12

# (n, p, K, beta); beta = inf marks the bounded-Jacobian case
PINNED = [
    (2, 3.0, 1.0, 2.0), (2, 4.0, 2.0, math.inf), (2, 2.5, 1.5, 1.5), (2, 10.0, 7.0, 3.0),
    (3, 4.0, 1.0, 2.0), (3, 4.0, 4.0, math.inf), (3, 6.0, 2.25, 1.25), (3, 3.5, 1.0, 10.0),
    (3, 12.0, 9.0, 4.0), (4, 5.0, 1.0, 2.0), (4, 8.0, 2.0, math.inf), (4, 4.25, 3.5, 1.1),
    (5, 6.0, 1.0, 3.0), (5, 7.5, 16.0, 2.0), (6, 7.0, 1.0, math.inf), (6, 9.0, 5.0, 6.0),
    (7, 8.0, 2.0, 2.5), (8, 12.0, 1.0, 1.5), (10, 11.0, 3.0, math.inf), (12, 20.0, 1.25, 2.0),
]


def _beta_mp(beta):
    return mp.inf if math.isinf(beta) else mp.mpf(beta)


def pinned_comparisons(n, p, K, beta):
    """(name, ours, reference) for every constant defined at this tuple."""
    bm = _beta_mp(beta)
    out = [
        ("omega_n", c.omega_n(n), o.omega_n(n)),
        ("omega_sphere", c.omega_sphere(n), o.sphere_area(n)),
        ("pi_p", c.pi_p(p), o.pi_p(p)),
        ("sobolev_r", c.sobolev_r(p, beta), o.sobolev_r(p, bm)),
        ("q_star", c.q_star(n, p, beta), o.q_star(n, p, bm)),
        ("q_star_inf", c.q_star_inf(n, p), o.q_star(n, p, mp.inf)),
        ("weak_rhi_Cnp", c.weak_rhi_Cnp(n, p), o.weak_rhi_Cnp(n, p)),
        ("doubling_constant", c.doubling_constant(n, K), o.doubling_constant(n, K)),
        ("teichmuller_lower", c.teichmuller_lower(n, 2.0),
         o.teichmuller_lower(n, 2, 4 if n == 2 else 2 * mp.e ** (n - 1))),
    ]
    q = 0.5 * (1.0 + min(p - 1e-9, n))
    if q < p and p > n:
        out.append(("beta_from_pq", c.beta_from_pq(n, p, q), o.beta_from_pq(n, p, q)))
    r = c.sobolev_r(p, beta)
    qq = 0.5 * (c.q_star(n, p, beta) + n)
    out.append(("poincare_convex", c.poincare_convex(n, r, qq, 2.0, 3.0), o.poincare_convex(n, r, qq, 2, 3)))
    if n >= 3:
        out += [
            ("bojarski_iwaniec_C", c.bojarski_iwaniec_C(n), o.bi_constant(n)),
            ("rhi_C1", c.rhi_C1(n, K), o.rhi_C1(n, K)),
            ("alpha_window_width", c.exponent_window(n, K, "alpha").width, o.alpha_window_width(n, K)),
            ("beta_window_width", c.exponent_window(n, K, "beta").width, o.beta_window_width(n, K)),
            ("rhi_Cnak_alpha", c.rhi_Cnak(n, n + 0.5, K, "alpha"), o.rhi_Cnak_alpha(n, n + 0.5, K)),
        ]
        if not math.isinf(beta):
            out.append(("rhi_Cnak_beta", c.rhi_Cnak(n, beta, K, "beta"), o.rhi_Cnak_beta(n, beta, K)))
    return out


@pytest.mark.parametrize("n,p,K,beta", PINNED)
def test_pinned_tuples_match_high_precision_oracle(n, p, K, beta):
    for name, ours, ref in pinned_comparisons(n, p, K, beta):
        assert o.rel(ours, ref) < RTOL, (name, ours, ref)


def test_frozen_reference_values():
    # from the mpmath oracle at 50 digits
    assert c.pi_p(4.0) == pytest.approx(2.9235813887501207304868786699577773, rel=1e-14)
    assert c.bojarski_iwaniec_C(3) == pytest.approx(6889.1768136278433767961629381663656, rel=1e-13)
    assert c.doubling_constant(3, 1.0) == pytest.approx(540.46596712796889326310032439858892, rel=1e-13)
    assert c.omega_n(4) == pytest.approx(math.pi ** 2 / 2, rel=1e-15)
    assert c.pi_p(2.0) == pytest.approx(math.pi, rel=1e-15)


def test_window_is_far_below_double_resolution():
    w = c.exponent_window(3, 1.0, "alpha")
    assert 0 < w.width < 1e-20
    assert not w.representable
    assert w.upper == w.lower == 3.0
    assert w.contains_excess(w.midpoint_excess)
    assert not w.contains_excess(2 * w.width)
    bw = c.exponent_window(3, 1.0, "beta")
    assert bw.lower == 1.0
    assert bw.width == pytest.approx(w.width / 3, rel=1e-14)


def test_window_shrinks_with_K():
    widths = [c.exponent_window(3, K).width for K in (1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(widths, widths[1:]))


def test_log_forms_survive_overflow():
    # 100^n overflows long before n = 400; the log form does not
    assert math.isinf(c.weak_rhi_Cnp(400, 401.0))
    assert c.log_weak_rhi_Cnp(400, 401.0) == pytest.approx(float(mp.log(o.weak_rhi_Cnp(400, 401))), rel=1e-13)
    lw = c.log_alpha_window_width(200, 2.0)
    assert math.isfinite(lw) and c.exponent_window(200, 2.0).width == 0.0


def test_sobolev_r_with_tiny_excess_keeps_precision():
    eps = 1e-22
    assert c.inv_sobolev_r(4.0, beta_excess=eps) == pytest.approx(eps / 4.0, rel=1e-15)
    assert c.sobolev_r(4.0, math.inf) == 4.0
    assert c.q_star(3, 4.0, beta_excess=eps) == 3.0


@pytest.mark.parametrize("call", [
    lambda: c.bojarski_iwaniec_C(2),
    lambda: c.rhi_C1(2, 1.0),
    lambda: c.exponent_window(2, 1.0),
    lambda: c.rhi_Cnak(2, 2.5, 1.0),
    lambda: c.beta_from_pq(3, 4.0, 4.0),
    lambda: c.beta_from_pq(3, 4.0, 5.0),
    lambda: c.beta_from_pq(3, 2.5, 1.0),
    lambda: c.inv_sobolev_r(4.0, 1.0),
    lambda: c.inv_sobolev_r(4.0, 0.5),
    lambda: c.inv_sobolev_r(4.0, beta_excess=-1e-23),
    lambda: c.pi_p(1.0),
    lambda: c.doubling_constant(3, 0.5),
    lambda: c.poincare_convex(3, 4.0, 1.0, 1.0, 1.0),
    lambda: c.teichmuller_lower(3, 0.0),
])
def test_out_of_domain_inputs_raise_range_error(call):
    with pytest.raises(RangeError):
        call()


def test_grotzsch_bounds_bracket():
    assert c.grotzsch_lambda_bounds(2) == (4.0, 4.0)
    for n in range(3, 10):
        lo, hi = c.grotzsch_lambda_bounds(n)
        assert lo < hi


def test_constants_record_is_consistent():
    rec = c.constants_record(3, 2.0, p=4.0, beta=2.0)
    for name, entry in rec.items():
        if "log" in entry and math.isfinite(entry["value"]) and entry["value"] > 0:
            assert math.exp(entry["log"]) == pytest.approx(entry["value"], rel=1e-12), name


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 12), p=st.floats(1.01, 50.0))
def test_pi_p_and_volumes_against_oracle(n, p):
    assert o.rel(c.pi_p(p), o.pi_p(p)) < RTOL
    assert o.rel(c.omega_n(n), o.omega_n(n)) < RTOL


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 8), extra=st.floats(0.05, 20.0), frac=st.floats(0.0, 0.999))
def test_beta_and_q_are_inverse(n, extra, frac):
    p = n + extra
    q = 1.0 + frac * (min(p, n + 1.0) - 1.0)
    if q >= p:
        return
    beta = c.beta_from_pq(n, p, q)
    assert c.q_from_beta(n, p, beta) == pytest.approx(q, rel=1e-12)
