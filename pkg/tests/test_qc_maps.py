import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qspec import domains as D
from qspec.errors import SingularPointError
from qspec.qc_maps import Composition, Identity, Linear, RadialStretch, coefficient, estimate_K, parse_map, zoo
from qspec.quadrature import QuadratureSpec


def fd_derivative(m, x, h=1e-6):
    n = len(x)
    cols = [(m.evaluate(x + h * e) - m.evaluate(x - h * e)) / (2 * h) for e in np.eye(n)]
    return np.stack(cols, axis=1)


MAPS = [
    Identity(3), Linear.diag(2.0, 1.0, 1.0), Linear([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.2, 0.0, 2.0]]),
    RadialStretch(3, 0.5), RadialStretch(3, 1.0), RadialStretch(2, 2.5),
    Composition(RadialStretch(3, 0.5), Linear.diag(1.0, 2.0, 1.0)),
]

points = arrays(np.float64, 3, elements=st.floats(-1.0, 1.0)).filter(lambda x: np.linalg.norm(x) > 0.05)


@settings(max_examples=50, deadline=None)
@given(x=points)
def test_derivative_matches_finite_differences(x):
    for m in MAPS:
        xx = x[: m.dim]
        if np.linalg.norm(xx) < 0.05:
            continue
        assert np.allclose(m.derivative(xx), fd_derivative(m, xx), rtol=1e-6, atol=1e-7), m


@settings(max_examples=50, deadline=None)
@given(x=points)
def test_hadamard_inequality(x):
    for m in MAPS:
        xx = x[: m.dim]
        if np.linalg.norm(xx) < 0.05:
            continue
        assert abs(m.jacobian(xx)) <= m.operator_norm(xx) ** m.dim * (1 + 1e-12)
        assert m.jacobian(xx) == pytest.approx(np.linalg.det(m.derivative(xx)), rel=1e-10)
        assert m.operator_norm(xx) == pytest.approx(np.linalg.norm(m.derivative(xx), 2), rel=1e-10)


def test_stretch_closed_forms():
    m = RadialStretch(3, 1.0)
    x = np.array([0.3, -0.4, 0.0])
    assert m.jacobian(x) == pytest.approx(2 * 0.5 ** 3)
    assert m.operator_norm(x) == pytest.approx(2 * 0.5)
    assert np.allclose(m.inverse_points(m.evaluate(x)), x)
    assert m.declared_K == 4.0 and m.linear_K == 2.0
    with pytest.raises(SingularPointError):
        m.derivative(np.zeros(3))
    assert np.allclose(m.evaluate(np.zeros(3)), 0)


def test_dilatation_bounded_by_declared_K():
    spec = QuadratureSpec.mc(20_000, seed=1)
    for m in zoo(3):
        k = estimate_K(m, D.Ball(3, 2.0), spec)
        assert k <= coefficient(m) * (1 + 1e-12)
    # the stretch attains its coefficient everywhere
    assert estimate_K(RadialStretch(3, 1.0), D.Ball(3), spec) == pytest.approx(4.0, rel=1e-12)
    assert estimate_K(Linear.diag(2.0, 1.0, 1.0), D.Ball(3), spec) == pytest.approx(4.0, rel=1e-12)


def test_composition_chain_rule_and_coefficient():
    inner = Linear.diag(1.0, 2.0, 1.0)
    outer = RadialStretch(3, 0.5)
    c = Composition(outer, inner)
    x = np.array([[0.2, 0.1, -0.3], [0.5, 0.5, 0.1]])
    expected = outer.jacobian(inner.evaluate(x)) * inner.jacobian(x)
    assert np.allclose(c.jacobian(x), expected, rtol=1e-13)
    assert np.allclose(c.jacobian(x), np.linalg.det(c.derivative(x)), rtol=1e-12)
    assert c.declared_K is None
    assert coefficient(c) == pytest.approx(outer.declared_K * inner.declared_K)


def test_linear_validation():
    with pytest.raises(ValueError):
        Linear([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        Linear([[1.0]])
    m = Linear([[2.0, 1.0], [0.0, 1.0]])
    assert np.allclose(m.inverse().A @ m.A, np.eye(2))


def test_parse_map():
    assert isinstance(parse_map("identity", 3), Identity)
    assert parse_map("stretch:a=0.5", 2).a == 0.5
    assert np.allclose(parse_map("linear:matrix=1,0;0,2").A, [[1, 0], [0, 2]])
    c = parse_map("stretch:a=1*linear:diag=2,1", 2)
    assert isinstance(c, Composition)
    for m in MAPS:
        again = parse_map(m.describe(), m.dim)
        x = np.array([0.3, -0.2, 0.4])[: m.dim]
        assert np.allclose(again.evaluate(x), m.evaluate(x))
    for bad in ["blob", "linear:", "identity"]:
        with pytest.raises(ValueError):
            parse_map(bad)
