import math

import numpy as np
import pytest

from qspec import constants
from qspec import domains as D
from qspec import quadrature as Q
from qspec.errors import NonFiniteIntegrandError, RangeError
from qspec.qc_maps import Identity, Linear, RadialStretch
from qspec.quadrature import QuadratureSpec


def test_mc_integral_of_radial_power():
    # int_B |x|^2 = n omega_n / (n + 2)
    res = Q.integrate(lambda x: (x ** 2).sum(axis=1), D.Ball(3), QuadratureSpec.mc(300_000, seed=5))
    exact = 3 * constants.omega_n(3) / 5
    assert abs(res.value - exact) < 4 * res.std_error
    assert res.samples_used == 300_000


def test_tensor_integral_is_accurate():
    res = Q.integrate(lambda x: (x ** 2).sum(axis=1), D.Ball(3), QuadratureSpec.tensor(8))
    assert res.value == pytest.approx(3 * constants.omega_n(3) / 5, rel=1e-12)
    assert res.std_error is None


def test_results_do_not_depend_on_thread_count(monkeypatch):
    spec = QuadratureSpec.mc(200_000, seed=9)
    f = lambda x: np.cos(x).prod(axis=1)
    monkeypatch.setenv("QSPEC_THREADS", "1")
    a = Q.integrate(f, D.Ball(3), spec)
    monkeypatch.setenv("QSPEC_THREADS", "4")
    b = Q.integrate(f, D.Ball(3), spec)
    assert a == b


def test_non_finite_integrand_reports_point():
    with pytest.raises(NonFiniteIntegrandError):
        Q.integrate(lambda x: np.full(len(x), np.inf), D.Ball(2), QuadratureSpec.mc(100))


def test_jacobian_norm_of_stretch_has_closed_form():
    # ||J||_beta on B(0,1) for |x|^a x: (a+1) (n omega_n / (n + n a beta))^{1/beta}
    n, a, beta = 3, 1.0, 2.0
    m = RadialStretch(n, a)
    res = Q.jacobian_norm_beta(m, D.Ball(n), beta, QuadratureSpec.tensor(24))
    exact = (a + 1) * (n * constants.omega_n(n) / (n + n * a * beta)) ** (1 / beta)
    assert res.value == pytest.approx(exact, rel=1e-9)


def test_composition_norm_bound_holds():
    n, p, q = 3, 4.0, 2.0
    spec = QuadratureSpec.mc(100_000, seed=2)
    for m in (Identity(n), Linear.diag(2.0, 1.0, 1.0)):
        lhs = Q.composition_norm(m, D.Ball(n), p, q, spec)
        vol_t = Q.jacobian_integral(m, D.Ball(n), spec).value
        rhs = Q.composition_norm_bound(n, p, q, m.declared_K, D.measure(D.Ball(n)), vol_t)
        assert lhs.value <= rhs * (1 + 1e-9)
    with pytest.raises(RangeError):
        Q.composition_norm_bound(n, 2.0, 3.0, 1.0, 1.0, 1.0)


def test_doubling_ratio_of_linear_map():
    res = Q.doubling_ratio(Linear.diag(2.0, 1.0, 1.0), np.zeros(3), 0.5, QuadratureSpec.tensor(6))
    assert res.value == pytest.approx(8.0, rel=1e-12)


def test_doubling_ratio_of_stretch():
    a = 1.0
    res = Q.doubling_ratio(RadialStretch(3, a), np.zeros(3), 1.0, QuadratureSpec.mc(200_000, seed=4))
    assert abs(res.value - 2 ** (3 * (a + 1))) < 4 * res.std_error
    assert res.value <= constants.doubling_constant(3, 4.0)


def test_weak_rhi_with_window_excess():
    w = constants.exponent_window(3, 4.0)
    rec = Q.weak_rhi_check(RadialStretch(3, 1.0), QuadratureSpec.mc(100_000, seed=1), p_excess=w.midpoint_excess)
    assert rec.holds and rec.holds_3sigma
    assert rec.p == 3.0 and rec.p_excess == w.midpoint_excess
    with pytest.raises(RangeError):
        Q.weak_rhi_check(Identity(3), QuadratureSpec.mc(100), p=3.5)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec.mc(0)
    assert QuadratureSpec.mc(10, seed=3).to_dict() == {"method": "mc", "budget": 10, "seed": 3, "want_error": True}


def test_stretch_image_volume_identity():
    # |phi(Q)| = int_Q |J| should match hit-or-miss on the image
    m = RadialStretch(2, 0.5)
    vol = Q.jacobian_integral(m, D.stretch_cube(2), QuadratureSpec.tensor(40)).value
    est = D.measure(D.StretchImage(2, 0.5), QuadratureSpec.mc(300_000, seed=8))
    assert abs(est.value - vol) < 4 * est.std_error
    assert vol <= constants.omega_n(2) * (1 + 1e-12) or math.isclose(vol, math.pi, rel_tol=0.02)
