import numpy as np
import pytest

from baxtertq.errors import DomainError, NonConvergenceError, PoleProximityError
from baxtertq.probes import from_offsets, random_offsets
from baxtertq.specfun import (ModularPair, ThetaProductConfig, double_sine, double_sine_alt, modular_B,
                              q_pochhammer, q_pochhammer_tail, quantum_dilog, theta, theta_dual, theta_product)


def cell_points(mp, count=6, seed=3):
    return [from_offsets(x, y, mp) for x, y in random_offsets(count, seed)]


def relative(a, b):
    return abs(a - b) / max(abs(a), abs(b))


class TestModularPair:

    def test_rejects_wrong_half_plane(self):
        with pytest.raises(DomainError):
            ModularPair(1.0, 1j)

    def test_rejects_zero_period(self):
        with pytest.raises(DomainError):
            ModularPair(0.0, 1.0)

    def test_nome_inside_unit_disc(self, hex_pair):
        assert abs(hex_pair.q) < 1
        assert abs(hex_pair.q_dual_m2) < 1

    def test_q2_is_square_of_q(self, hex_pair):
        assert abs(hex_pair.q2 - hex_pair.q ** 2) < 1e-14

    def test_coordinates_round_trip(self, hex_pair):
        z = 0.3 - 0.7j
        m, n = hex_pair.coordinates(z)
        assert abs(hex_pair.lattice_point(m, n) - z) < 1e-14

    def test_nearest_lattice_point(self, hex_pair):
        z = hex_pair.lattice_point(2, -1) + 1e-3
        dist, indices = hex_pair.nearest_lattice_point(z)
        assert indices == (2, -1)
        assert dist == pytest.approx(1e-3)

    def test_hashable(self, hex_pair):
        assert hash(hex_pair) == hash(ModularPair(hex_pair.omega1, hex_pair.omega2))


class TestQPochhammer:

    def test_zero_nome_is_single_factor(self):
        assert q_pochhammer(0.3, 0.0) == pytest.approx(0.7)

    def test_matches_finite_product(self):
        z, p = 0.3 + 0.1j, 0.2 - 0.1j
        expected = np.prod([1 - z * p ** k for k in range(80)])
        assert abs(q_pochhammer(z, p) - expected) < 1e-13

    def test_tail_below_tolerance(self):
        cfg = ThetaProductConfig(tol=1e-10)
        assert q_pochhammer_tail(0.5, 0.5, cfg) < 1e-10

    def test_rejects_nome_outside_disc(self):
        with pytest.raises(DomainError):
            q_pochhammer(0.5, 1.0)

    def test_term_cap_raises(self):
        with pytest.raises(NonConvergenceError):
            q_pochhammer(0.5, 0.9, ThetaProductConfig(max_terms=1))

    def test_config_validation(self):
        with pytest.raises(DomainError):
            ThetaProductConfig(tol=0.0)
        with pytest.raises(DomainError):
            ThetaProductConfig(max_terms=0)


class TestTheta:

    def test_quasi_periodic_in_omega1(self, hex_pair):
        for lam in cell_points(hex_pair):
            shifted = theta(lam - 1j * hex_pair.omega1, hex_pair)
            expected = -np.exp(2 * np.pi * lam / hex_pair.omega2) * theta(lam, hex_pair)
            assert relative(shifted, expected) < 1e-10

    def test_periodic_in_omega2(self, hex_pair):
        for lam in cell_points(hex_pair):
            assert relative(theta(lam + 1j * hex_pair.omega2, hex_pair), theta(lam, hex_pair)) < 1e-10

    def test_reflection(self, hex_pair):
        for lam in cell_points(hex_pair):
            assert relative(theta(-lam - 1j * hex_pair.omega1, hex_pair), theta(lam, hex_pair)) < 1e-9

    def test_modular_transformation(self, hex_pair):
        for lam in cell_points(hex_pair):
            expected = theta_dual(lam, hex_pair) * np.exp(1j * modular_B(lam, hex_pair))
            assert relative(theta(lam, hex_pair), expected) < 1e-9

    def test_zero_at_origin(self, hex_pair):
        assert theta(0.0, hex_pair) == 0

    def test_product_over_roots(self, hex_pair):
        lam, roots = 0.1 + 0.2j, [0.25, -0.25]
        expected = theta(lam - 0.25, hex_pair) * theta(lam + 0.25, hex_pair)
        assert theta_product(lam, roots, hex_pair) == pytest.approx(expected)


class TestDoubleSine:

    def test_zero_at_origin(self, hex_pair):
        assert double_sine(0.0, hex_pair) == 0

    def test_product_forms_agree(self, hex_pair):
        for lam in cell_points(hex_pair):
            assert relative(double_sine(lam, hex_pair), double_sine_alt(lam, hex_pair)) < 1e-9

    def test_reflection(self, conjugate_pair):
        mp = conjugate_pair
        for lam in cell_points(mp):
            product = double_sine(lam, mp) * double_sine(-lam - 1j * mp.Omega, mp)
            assert relative(product, np.exp(1j * modular_B(lam, mp))) < 1e-9

    def test_pole_proximity(self, hex_pair):
        pole = hex_pair.lattice_point(-1, -1)
        with pytest.raises(PoleProximityError) as excinfo:
            double_sine(pole, hex_pair)
        assert excinfo.value.lattice_indices == (-1, -1)


class TestQuantumDilog:

    def test_reflection(self, hex_pair):
        for z in cell_points(hex_pair):
            assert abs(quantum_dilog(z, hex_pair) * quantum_dilog(-z, hex_pair) - 1) < 1e-9

    def test_alt_form_agrees(self, hex_pair):
        for z in cell_points(hex_pair):
            assert relative(quantum_dilog(z, hex_pair), quantum_dilog(z, hex_pair, alt=True)) < 1e-9
