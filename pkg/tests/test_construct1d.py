import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blisterlab.construct1d import (best_cell_count, bounds_1d, condition_1d, flat_profile,
                                    optimal_length, optimal_periodic_array, periodic_array,
                                    periodic_bending, periodic_energy, periodic_substrate,
                                    single_blister, single_blister_bending)
from blisterlab.core import GeometryError, Params, measure
from blisterlab.energy import energy_1d

PI2 = np.pi ** 2


def test_flat_profile():
    prof, om = flat_profile(0.5)
    assert om.intervals == ((0.0, 0.5),)
    x = np.linspace(0, 1, 11)
    assert not np.any(prof.w(x)) and not np.any(prof.u(x))
    with pytest.raises(ValueError):
        flat_profile(1.0)


def test_flat_energy_independent_of_theta():
    p = Params(h=0.01, eta=0.1, alpha_s=1.0, theta=0.5)
    e1 = energy_1d(*flat_profile(0.5), p)
    e2 = energy_1d(*flat_profile(0.99), p.replace(theta=0.99))
    assert e1.total == pytest.approx(1e-4) and e2.membrane == pytest.approx(e1.membrane)


class TestSingleBlister:
    p = Params(h=0.01, eta=0.1, alpha_s=1.0, theta=0.3)

    def test_formulas(self):
        prof, om = single_blister(self.p)
        b, eta = 0.7, 0.1
        x = np.linspace(0, b, 17)
        assert np.allclose(prof.w(x), eta * b / (4 * np.pi) * np.sin(4 * np.pi * x / b))
        assert np.allclose(prof.u(x), 2 * np.sqrt(eta) * b / np.pi * np.sin(np.pi * x / b) ** 2)
        assert om.intervals == ((0.7, 1.0),)

    def test_membrane_integrand_zero_on_blister(self):
        prof, _ = single_blister(self.p)
        x = np.linspace(0, 0.7, 1001)
        assert np.max(np.abs(prof.dw(x) + 0.5 * prof.du(x) ** 2 - 0.1)) < 1e-15

    def test_endpoints(self):
        prof, _ = single_blister(self.p)
        assert prof.u(np.array([0.0, 0.7])) == pytest.approx([0.0, 0.0], abs=1e-16)
        assert prof.du(np.array([0.0, 0.7])) == pytest.approx([0.0, 0.0], abs=1e-15)

    def test_upper_bound_with_k2(self):
        e = energy_1d(*single_blister(self.p), self.p)
        b = bounds_1d(self.p, {"K2": 8 * PI2})
        assert e.total <= b.upper_single * (1 + 1e-12)
        assert single_blister_bending(self.p) == pytest.approx(e.bending, rel=1e-12)


class TestPeriodic:
    p = Params(h=1e-3, eta=0.01, alpha_s=0.1, theta=0.5)

    def test_requires_integer_cells(self):
        with pytest.raises(GeometryError):
            periodic_array(self.p, 0.3)

    @pytest.mark.parametrize("n", [1, 2, 7, 40])
    def test_closed_forms_and_admissibility(self, n):
        prof, om = periodic_array(self.p, 1.0 / n)
        e = energy_1d(prof, om, self.p)
        assert e.membrane < 1e-10
        assert e.bending == pytest.approx(periodic_bending(self.p, 1.0 / n), rel=1e-10)
        assert e.substrate == pytest.approx(periodic_substrate(self.p, 1.0 / n), rel=1e-10)
        x = np.linspace(0, 1, 4001)
        assert prof.u(x).min() >= 0
        assert np.all(prof.u(x[om.contains(x)]) == 0)
        assert measure(om) == pytest.approx(self.p.theta, abs=1e-12)

    def test_w_continuous_and_periodic(self):
        prof, om = periodic_array(self.p, 0.25)
        for a in om.endpoints():
            assert prof.w(a - 1e-12) == pytest.approx(prof.w(a + 1e-12), abs=1e-12)
        assert prof.w(0.0) == pytest.approx(prof.w(1.0 - 1e-15), abs=1e-12)

    def test_balance_at_optimal_length(self):
        # continuous optimum: d/dl (B/l^2 + S l) = 0 gives bending = substrate / 2,
        # and l* = (32 sqrt(3) pi^2)^(1/3) * l1_theta exactly
        ls = optimal_length(self.p)
        ratio = periodic_bending(self.p, ls) / periodic_substrate(self.p, ls)
        assert ratio == pytest.approx(0.5, rel=1e-10)
        l1 = bounds_1d(self.p).l1_theta
        assert ls / l1 == pytest.approx((32 * np.sqrt(3) * PI2) ** (1 / 3), rel=1e-10)

    def test_optimal_length_minimises(self):
        p = Params(h=1e-5, eta=0.01, alpha_s=0.1, theta=0.4)
        ls = optimal_length(p)
        for f in (0.9, 1.1):
            assert periodic_energy(p, ls) < periodic_energy(p, f * ls)
        n = best_cell_count(p)
        assert periodic_energy(p, 1 / n) <= min(periodic_energy(p, 1 / (n + 1)),
                                                periodic_energy(p, 1 / max(1, n - 1)))
        prof, om, l = optimal_periodic_array(p)
        assert l == 1 / n


class TestBounds:
    def test_l1_plain_example(self):
        b = bounds_1d(Params(h=1e-3, eta=0.01, alpha_s=0.1, theta=0.5))
        assert b.l1_plain == pytest.approx(1e-2, rel=1e-12)

    def test_branches(self):
        assert bounds_1d(Params(h=1e-3, eta=1e-6, alpha_s=0.1)).lower_branch == "membrane"
        assert bounds_1d(Params(h=1e-3, eta=0.1, alpha_s=1e-3)).lower_branch == "lattice"

    def test_constants_positive(self):
        with pytest.raises(ValueError):
            bounds_1d(Params(h=1e-3, eta=0.1), {"K1": 0.0})

    def test_condition_1d(self):
        assert condition_1d(Params(h=1e-5, eta=0.01, alpha_s=0.1))
        assert not condition_1d(Params(h=0.5, eta=0.01, alpha_s=0.1))

    @given(st.floats(1e-6, 1e-2), st.floats(1e-4, 0.5), st.floats(1e-4, 1.0), st.floats(0.05, 0.95))
    @settings(max_examples=50, deadline=None)
    def test_all_nonnegative(self, h, eta, a_s, th):
        b = bounds_1d(Params(h=h, eta=eta, alpha_s=a_s, theta=th))
        assert min(b.lower, b.upper_flat, b.upper_single, b.upper_periodic, b.l1_theta, b.l1_plain) > 0


def test_k3_stable_across_sweeps():
    """One prefactor for the periodic construction at its best cell count, +-20% over 3-decade sweeps."""
    from blisterlab.scaling import BASE_1D, SweepSpec, periodic_formula, sweep
    ks = []
    for var, lo, hi in (("h", 1e-7, 1e-4), ("eta", 1e-4, 1e-1), ("alpha_s", 1e-4, 1e-1)):
        for r in sweep(SweepSpec.geometric(var, lo, hi, 6, BASE_1D, "periodic1d")):
            ks.append(r.energy.total / periodic_formula(r.params))
    ks = np.array(ks)
    assert ks.max() / np.median(ks) < 1.2 and np.median(ks) / ks.min() < 1.2


def test_periodic_profile_just_before_cell_end_is_bonded():
    # points within 1e-5 of a cell end must not be mistaken for the next blister start
    from blisterlab.core import Params
    p = Params(h=0.01, eta=0.1, alpha_s=1.0, theta=0.5)
    prof, _ = periodic_array(p, 1.0)
    x = np.array([1 - 1e-8, 1 - 1e-6])
    assert np.all(prof.u(x) == 0) and np.all(prof.d2u(x) == 0)
