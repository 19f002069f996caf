import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blisterlab.core import (BondedSet1D, BondedSet2D, EnergyBreakdown, GeometryError, Params,
                             QuadratureError, gl_nodes, measure, quad_piecewise, triangle_nodes,
                             wrap)


class TestParams:
    def test_valid(self):
        p = Params(h=0.01, eta=0.1, alpha_s=1.0, alpha_m=1.0, theta=0.5)
        assert p.replace(h=0.02).h == 0.02
        assert p.as_dict()["theta"] == 0.5

    @pytest.mark.parametrize("kw", [dict(h=0.0), dict(eta=-1.0), dict(theta=1.0), dict(theta=0.0),
                                    dict(h=2.0), dict(eta=1.5), dict(alpha_s=float("nan"))])
    def test_invalid(self, kw):
        base = dict(h=0.01, eta=0.1, alpha_s=1.0, alpha_m=1.0, theta=0.5)
        base.update(kw)
        with pytest.raises(ValueError):
            Params(**base)


class TestQuadrature:
    def test_constant(self):
        assert quad_piecewise(lambda x: np.ones_like(x), [0.0, 1.0], 2) == pytest.approx(1.0, abs=1e-15)
        assert quad_piecewise(lambda x: 0.1 ** 2 + 0 * x, [0.0, 1.0]) == pytest.approx(0.01, abs=1e-15)

    def test_cos_squared(self):
        f = lambda x: np.cos(2 * np.pi * x) ** 2
        # order 8 needs the monotone quarter-period pieces; one piece needs order >= 12
        assert abs(quad_piecewise(f, [0.0, 0.25, 0.5, 0.75, 1.0], 8) - 0.5) < 1e-12
        assert abs(quad_piecewise(f, [0.0, 1.0], 16) - 0.5) < 1e-12

    @pytest.mark.parametrize("order", [2, 4, 8, 16])
    def test_polynomial_exactness(self, order):
        rng = np.random.default_rng(order)
        c = rng.standard_normal(2 * order)
        poly = np.polynomial.Polynomial(c)
        exact = poly.integ()(0.7) - poly.integ()(-0.3)
        assert abs(quad_piecewise(poly, [-0.3, 0.7], order) - exact) < 1e-12

    def test_kink_exact_with_breakpoint(self):
        f = lambda x: np.abs(x - 0.3)
        assert quad_piecewise(f, [0, 0.3, 1]) == pytest.approx(0.5 * 0.09 + 0.5 * 0.49, abs=1e-15)

    def test_non_finite_reports_piece(self):
        with pytest.raises(QuadratureError, match=r"\[0.5, 1.0\]"):
            quad_piecewise(lambda x: np.where(x > 0.5, np.inf, 0.0), [0.0, 0.5, 1.0])

    def test_bad_input(self):
        with pytest.raises(ValueError):
            quad_piecewise(np.sin, [0.0, 1.0], 1)
        with pytest.raises(ValueError):
            quad_piecewise(np.sin, [1.0, 0.0])

    def test_gl_nodes_vectorised(self):
        x, w = gl_nodes(np.array([0.0, 1.0]), np.array([1.0, 3.0]), 4)
        assert x.shape == (2, 4) and np.allclose(w.sum(axis=1), [1.0, 2.0])

    def test_triangle_rule(self):
        p, w = triangle_nodes([0, 0], [2, 0], [0, 1], 6)
        assert w.sum() == pytest.approx(1.0)
        # x = 2s, y = t maps the reference triangle; int s^2 t = 2! 1! / 5! = 1/60
        exact = 4 * 2 / 60
        assert np.dot(w, p[:, 0] ** 2 * p[:, 1]) == pytest.approx(exact, rel=1e-12)


class TestBondedSets:
    def test_measure_examples(self):
        assert measure(BondedSet1D(((0.25, 0.75),))) == 0.5
        assert measure(BondedSet1D(())) == 0.0
        two = BondedSet2D(((0.0, 0.0, 0.3, 0.3), (0.5, 0.5, 0.9, 0.9)))
        assert measure(two) == pytest.approx(0.25, abs=1e-15)

    def test_overlap_rejected(self):
        with pytest.raises(GeometryError):
            BondedSet1D(((0.1, 0.5), (0.4, 0.6)))
        with pytest.raises(GeometryError):
            BondedSet1D(((0.8, 1.3), (0.2, 0.4)))  # wraps into the second interval
        with pytest.raises(GeometryError):
            BondedSet2D(((0.0, 0.0, 0.5, 0.5), (0.4, 0.4, 0.8, 0.8)))
        with pytest.raises(GeometryError):
            BondedSet2D(((0.9, 0.9, 1.2, 1.2), (0.0, 0.0, 0.1, 0.1)))

    def test_equispaced(self):
        om = BondedSet1D.equispaced(4, 0.3)
        assert measure(om) == pytest.approx(0.3, abs=1e-12)
        assert len(om.intervals) == 4

    @given(st.floats(0.01, 0.99), st.integers(1, 12), st.floats(-3.0, 3.0))
    @settings(max_examples=60, deadline=None)
    def test_measure_translation_invariant(self, theta, n, shift):
        om = BondedSet1D.equispaced(n, theta)
        assert measure(om.translate(shift)) == pytest.approx(measure(om), abs=1e-12)
        assert measure(om) == pytest.approx(theta, abs=1e-12)

    def test_measure_additive_2d(self):
        a = BondedSet2D(((0.0, 0.0, 0.2, 0.3),))
        b = BondedSet2D(((0.5, 0.5, 0.6, 0.9),))
        ab = BondedSet2D(a.rects + b.rects)
        assert measure(ab) == pytest.approx(measure(a) + measure(b))
        assert measure(ab.translate((0.7, 0.35))) == pytest.approx(measure(ab))

    def test_periodic_cells_and_lift(self):
        om = BondedSet2D(((0.0, 0.0, 0.05, 0.05),), lifted_area=0.01, cells_per_side=10)
        assert measure(om) == pytest.approx(100 * 0.0025 - 0.01)
        assert om.contains(np.array([[0.52, 0.31], [0.57, 0.31]])).tolist() == [True, False]

    def test_contains_wraps(self):
        om = BondedSet1D(((0.9, 1.1),))
        assert om.contains([0.95, 0.05, 0.5]).tolist() == [True, True, False]
        # a closed interval ending at the seam contains x = 0
        assert BondedSet1D(((0.75, 1.0),)).contains([0.0, 0.5]).tolist() == [True, False]
        assert wrap(1.0 - 1e-14) == 0.0


def test_energy_breakdown_total_exact():
    e = EnergyBreakdown(0.1, 0.2, 0.3)
    assert e.total == e.membrane + e.bending + e.substrate
    s = e + e
    assert s.total == pytest.approx(1.2)
