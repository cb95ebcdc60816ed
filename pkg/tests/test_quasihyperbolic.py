import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint

from qspec import domains as D
from qspec import quasihyperbolic as QH
from qspec.errors import RangeError, UninformativeFitError

LN2 = math.log(2.0)


@pytest.fixture(scope="module")
def disk_graph():
    return QH.QHGraph(D.Ball(2), 1 / 64)


def test_stencil_is_primitive_and_halved():
    s = QH.stencil(2)
    assert len(s) == 8
    assert all(math.gcd(*map(abs, v)) == 1 for v in s)
    assert len(QH.stencil(3)) == (125 - 1 - 26) // 2


@settings(max_examples=60, deadline=None)
@given(d1=st.floats(1e-3, 10.0), ratio=st.floats(1e-3, 1e3))
def test_log_mean_inverse_is_the_segment_average(d1, ratio):
    d2 = d1 * ratio
    ref = sint.quad(lambda t: 1.0 / (d1 + (d2 - d1) * t), 0.0, 1.0, epsabs=0, epsrel=1e-12)[0]
    assert float(QH.log_mean_inverse(d1, d2)) == pytest.approx(ref, rel=1e-9)


def test_log_mean_inverse_near_equal_ends():
    assert float(QH.log_mean_inverse(2.0, 2.0)) == pytest.approx(0.5, rel=1e-15)
    assert float(QH.log_mean_inverse(1.0, 1.0 + 1e-9)) == pytest.approx(1.0 - 5e-10, rel=1e-14)


def test_radial_distance_in_disk_is_log_two():
    k = QH.qh_distance(D.Ball(2), [0.0, 0.0], [0.5, 0.0], 1 / 128)
    assert k == pytest.approx(LN2, rel=1e-12)


def test_direction_dependence_stays_below_three_percent(disk_graph):
    ang = np.linspace(0.0, math.pi / 4, 9)
    pts = 0.5 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    k = QH.qh_distance(D.Ball(2), [0.0, 0.0], pts, 1 / 64, graph=disk_graph)
    # compare with the exact value at the lattice node actually reached
    nodes = disk_graph.nodes[disk_graph.nearest(pts)]
    exact = -np.log(1.0 - np.linalg.norm(nodes, axis=1))
    assert np.all(k >= exact * (1 - 1e-9))
    assert np.all(k <= exact * 1.03)


def test_symmetry_and_triangle_inequality(disk_graph):
    pts = np.array([[0.1, 0.2], [-0.5, 0.3], [0.6, -0.6], [0.0, -0.8]])
    idx = disk_graph.nearest(pts)
    table = np.array([disk_graph.distances_from(i)[idx] for i in idx])
    assert np.allclose(table, table.T, rtol=1e-12, atol=0)
    for a in range(4):
        for b in range(4):
            for c in range(4):
                assert table[a, c] <= table[a, b] + table[b, c] + 1e-12


def test_shrinking_the_domain_increases_distance():
    small = QH.qh_distance(D.Ball(2), [0.0, 0.0], [0.5, 0.25], 1 / 64)
    big = QH.qh_distance(D.Ball(2, 2.0), [0.0, 0.0], [0.5, 0.25], 1 / 64)
    assert small > big


def test_refinement_is_stable():
    x = [0.3, 0.4]
    ks = [QH.qh_distance(D.Ball(2), [0.0, 0.0], x, h) for h in (1 / 32, 1 / 64, 1 / 128)]
    assert abs(ks[2] - ks[1]) <= abs(ks[1] - ks[0]) + 1e-3
    assert ks[2] == pytest.approx(LN2, rel=0.03)


def test_grid_domains_use_taxicab_distance():
    g = QH.QHGraph(D.StretchImage(2, 0.5), 1 / 32)
    assert not g.exact_distance and g.graph.shape[0] == len(g.nodes)
    assert QH.QHGraph(D.Cube(2, 1.0), 1 / 16).exact_distance


def test_nearest_rejects_bad_points(disk_graph):
    with pytest.raises(RangeError):
        disk_graph.nearest([1.5, 0.0])
    with pytest.raises(RangeError):
        disk_graph.nearest([0.99, 0.0])
    with pytest.raises(RangeError):
        disk_graph.nearest([0.0, 0.0], min_distance=1.5)


def test_fit_on_disk_is_near_one(disk_graph):
    fit = QH.fit_gamma(D.Ball(2), x0=[0.0, 0.0], h=1 / 64, sample_count=500, seed=1, graph=disk_graph)
    assert 0.9 <= fit.gamma_hat <= 1.05
    assert 0 <= fit.C0_hat <= fit.c0_cap
    assert not fit.degenerate and fit.empirical
    assert fit.points_used == 500 and fit.to_dict()["x0"] == [0.0, 0.0]


def test_fit_is_seeded(disk_graph):
    a = QH.fit_gamma(D.Ball(2), sample_count=200, seed=3, graph=disk_graph, h=1 / 64)
    b = QH.fit_gamma(D.Ball(2), sample_count=200, seed=3, graph=disk_graph, h=1 / 64)
    assert a == b


def test_fit_with_short_log_range_is_flagged(disk_graph):
    fit = QH.fit_gamma(D.Ball(2), x0=[0.0, 0.0], h=1 / 64, min_distance=0.4, graph=disk_graph)
    assert fit.degenerate and fit.log_ratio_max < QH.MIN_LOG_RANGE


def test_square_fit_is_below_disk(disk_graph):
    sq = QH.fit_gamma(D.Cube(2, 1.0), h=1 / 32, sample_count=800, seed=0)
    disk = QH.fit_gamma(D.Ball(2), h=1 / 64, sample_count=800, seed=0, graph=disk_graph)
    assert 0 < sq.gamma_hat < disk.gamma_hat


def test_envelope_solution():
    L = np.array([1.0, 2.0, 3.0])
    gamma, c0 = QH.envelope_gamma(L, 2.0 * L + 0.05, 0.1)
    # 1/gamma = max (k - cap)/L = 2 - 0.05/3
    assert 1 / gamma == pytest.approx(2.0 - 0.05 / 3.0, rel=1e-14)
    assert c0 <= 0.1
    assert QH.envelope_gamma(np.array([1.0]), np.array([0.05]), 0.1)[0] == math.inf


def test_uninformative_fits_raise():
    with pytest.raises(UninformativeFitError):
        QH.envelope_gamma(np.array([0.0]), np.array([1.0]), 0.1)
    with pytest.raises(UninformativeFitError):
        QH.envelope_gamma(np.array([1.0, -1.0]), np.array([2.0, 2.0]), 0.1)
    with pytest.raises(UninformativeFitError):
        QH.fit_gamma(D.Ball(2), x0=[0.0, 0.0], h=1 / 16, min_distance=0.99)
    # every eligible node is at least as deep as x0 only if x0 is near the rim
    with pytest.raises(UninformativeFitError):
        QH.fit_gamma(D.Ball(2), x0=[0.55, 0.0], h=1 / 16, min_distance=0.44)
