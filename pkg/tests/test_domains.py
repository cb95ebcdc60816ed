import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qspec import constants
from qspec import domains as D
from qspec.errors import DegenerateDomainError, RangeError, UnsupportedDomainError
from qspec.quadrature import QuadratureSpec, integrate
from qspec.qc_maps import RadialStretch


def test_exact_measures_and_diameters():
    b = D.Ball(3, 2.0)
    assert D.measure(b) == pytest.approx(constants.omega_n(3) * 8, rel=1e-15)
    assert D.diameter(b) == 4.0
    q = D.stretch_cube(3)
    assert D.measure(q) == pytest.approx(2.0 ** 1.5, rel=1e-14)
    assert D.diameter(q) == pytest.approx(math.sqrt(6.0), rel=1e-15)
    # the nominal diameter is the true one only in the plane
    assert D.diameter(D.stretch_cube(2)) == pytest.approx(D.STRETCH_CUBE_NOMINAL_DIAMETER, rel=1e-15)


def test_stretch_image_needs_a_spec_for_measure():
    s = D.StretchImage(2, 1.0)
    with pytest.raises(ValueError):
        D.measure(s)
    with pytest.raises(UnsupportedDomainError):
        D.diameter(s)


def test_stretch_image_measure_matches_change_of_variables():
    s = D.StretchImage(2, 1.0)
    est = D.measure(s, QuadratureSpec.mc(400_000, seed=3))
    m = RadialStretch(2, 1.0)
    exact = integrate(m.jacobian, D.stretch_cube(2), QuadratureSpec.tensor(60)).value
    assert abs(est.value - exact) < 4 * est.std_error


def test_boundary_distance():
    b = D.Ball(2, 1.0, [1.0, 0.0])
    assert D.boundary_distance(b, [1.25, 0.0]) == pytest.approx(0.75)
    with pytest.raises(RangeError):
        D.boundary_distance(b, [3.0, 0.0])
    c = D.Cube(2, 1.0)
    assert np.allclose(c.boundary_distance([[0.0, 0.5], [0.9, -0.2]]), [0.5, 0.1])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 5), m=st.integers(2, 9), r=st.floats(0.2, 3.0))
def test_tensor_rules_integrate_constants_exactly(n, m, r):
    b = D.Ball(n, r)
    pts, w = D.tensor_rule(b, m)
    assert w.sum() == pytest.approx(D.measure(b), rel=1e-12)
    c = D.Cube(n, r)
    pts, w = D.tensor_rule(c, m)
    assert w.sum() == pytest.approx(D.measure(c), rel=1e-12)


def test_sphere_rule_integrates_polynomials():
    pts, w = D.sphere_rule(4, 6)
    area = constants.omega_sphere(4)
    assert w.sum() == pytest.approx(area, rel=1e-13)
    # int x_1^2 over S^{n-1} = area / n
    assert (w * pts[:, 0] ** 2).sum() == pytest.approx(area / 4, rel=1e-13)
    assert (w * pts[:, 3] ** 4).sum() == pytest.approx(3 * area / (4 * 6), rel=1e-12)


def test_unsupported_tensor_rule():
    with pytest.raises(UnsupportedDomainError):
        D.tensor_rule(D.StretchImage(2, 0.5), 4)


def test_sample_weights_and_determinism():
    spec = QuadratureSpec.mc(70_000, seed=11)
    b = D.Ball(3)
    p1, w1 = D.sample(b, spec)
    p2, w2 = D.sample(b, spec)
    assert np.array_equal(p1, p2)
    assert w1.sum() == pytest.approx(D.measure(b), rel=1e-12)
    assert np.all(np.linalg.norm(p1, axis=1) < 1)
    p3, _ = D.sample(b, spec, exclude_radius=0.3)
    assert np.all(np.linalg.norm(p3, axis=1) >= 0.3)


class _Empty(D.Domain):
    kind = "empty"
    dim = 2

    def contains(self, x):
        return np.zeros(len(np.atleast_2d(x)), dtype=bool)

    def bounding_box(self):
        return np.zeros(2), np.ones(2)

    def to_record(self):
        return "kind=empty;dim=2"


def test_degenerate_domain_raises():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    g = D.GridMask([0, 0], 1.0, mask)
    pts, tries = g._draw(np.random.default_rng(0), 10)
    assert len(pts) == 10 and tries >= 10
    with pytest.raises(DegenerateDomainError):
        D.GridMask([0, 0], 1.0, np.zeros((2, 2), dtype=bool))
    with pytest.raises(DegenerateDomainError):
        D.sample(_Empty(), QuadratureSpec.mc(5))
    with pytest.raises(DegenerateDomainError):
        D.rasterize(_Empty(), 0.1)


def test_rasterize_square_is_exact():
    sq = D.parse_domain("square")
    g = D.rasterize(sq, 1 / 16)
    assert g.shape == (16, 16) and g.cell_count == 256
    assert D.measure(g) == pytest.approx(1.0)
    assert g.contains([0.01, 0.99]) and not g.contains([1.01, 0.5])


def test_rasterize_keeps_one_component():
    g = D.rasterize(D.StretchImage(2, 1.0), 1 / 32)
    assert g.cell_count > 0
    with pytest.raises(ValueError):
        D.GridMask([0, 0], 1.0, np.array([[True, False], [False, True]]))


def test_grid_distance_is_taxicab_steps():
    g = D.rasterize(D.parse_domain("square"), 1 / 8)
    d = g.boundary_distance(g.centers())
    assert d.min() == pytest.approx(0.5 / 8)
    assert d.max() == pytest.approx(3.5 / 8)


@pytest.mark.parametrize("text", ["square", "disk", "ball3", "cube3"])
def test_records_round_trip(text):
    d = D.parse_domain(text)
    again = D.parse_domain(d.to_record())
    pts = np.random.default_rng(0).uniform(-1.2, 1.2, size=(500, d.dim))
    assert np.array_equal(d.contains(pts), again.contains(pts))


def test_gridmask_and_stretch_records_round_trip():
    for d in (D.rasterize(D.Ball(2), 0.1), D.StretchImage(3, 0.5)):
        again = D.parse_domain(d.to_record())
        pts = np.random.default_rng(1).uniform(-1.2, 1.2, size=(500, d.dim))
        assert np.array_equal(d.contains(pts), again.contains(pts))


def test_bad_records():
    for text in ["kind=ball", "dim=2", "kind=blob;dim=2", "kind=ball;dim=2;oops"]:
        with pytest.raises(ValueError):
            D.parse_domain(text)
    with pytest.raises(ValueError):
        D.Ball(1)


def test_equal_measure_radius():
    assert D.equal_measure_radius(D.Ball(3, 1.7)) == pytest.approx(1.7, rel=1e-14)
