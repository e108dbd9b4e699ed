import numpy as np
import pytest

from baxtertq.errors import DomainError, PoleProximityError
from baxtertq.hill import (KVariant, TruncationPolicy, convergence_slope, expected_slope, find_delta,
                           find_delta_dual, hill_det, hill_det_dual, k_minus, k_minus_dual, k_plus, k_plus_dual,
                           normalize_representatives, u_minus, u_minus_dual, u_plus, u_plus_dual)
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet, constraint_residual, delta_sum_target, t_eval
from baxtertq.probes import from_offsets

from conftest import KAPPA


class TestTruncationPolicy:

    def test_defaults(self):
        pol = TruncationPolicy()
        assert (pol.tol, pol.n_min, pol.n_max) == (1e-15, 2, 2000)

    def test_validation(self):
        with pytest.raises(DomainError):
            TruncationPolicy(tol=0.0)
        with pytest.raises(DomainError):
            TruncationPolicy(n_min=1)
        with pytest.raises(DomainError):
            TruncationPolicy(n_min=10, n_max=5)


class TestKVariant:

    def test_sides_and_directions(self):
        assert not KVariant.PLUS.dual and KVariant.PLUS.direction == 1
        assert KVariant.MINUS_DUAL.dual and KVariant.MINUS_DUAL.direction == -1

    def test_zeta_diagonal(self):
        assert KVariant.MINUS.carries_zeta and KVariant.PLUS_DUAL.carries_zeta
        assert not KVariant.PLUS.carries_zeta and not KVariant.MINUS_DUAL.carries_zeta


class TestRhoZero:

    def test_determinants_are_one(self, rho_zero_spec, tau):
        lam = 0.1 + 0.3j
        assert k_plus(lam, tau, rho_zero_spec).value == 1
        assert k_minus(lam, tau, rho_zero_spec).value == 1
        assert hill_det(lam, tau, rho_zero_spec) == 1

    def test_hill_zeros_are_tau(self, rho_zero_spec, tau, tau_dual):
        for roots in (tau, tau_dual):
            fact = find_delta(roots, rho_zero_spec)
            assert fact.delta.roots == roots.roots
            assert fact.h_const == 1
            assert fact.residual == 0
            assert fact.delta.family is (RootFamily.DELTA_DUAL if roots.is_dual else RootFamily.DELTA)

    def test_u_factors_are_one(self, rho_zero_spec, tau):
        fact = find_delta(tau, rho_zero_spec)
        lam = 0.1 + 0.3j
        assert u_plus(lam, tau, fact, rho_zero_spec) == pytest.approx(1)
        assert u_minus(lam, tau, fact, rho_zero_spec) == pytest.approx(1)

    def test_dual_side(self, rho_zero_spec, tau_dual):
        lam = 0.1 + 0.3j
        assert k_plus_dual(lam, tau_dual, rho_zero_spec).value == 1
        assert k_minus_dual(lam, tau_dual, rho_zero_spec).value == 1
        assert hill_det_dual(lam, tau_dual, rho_zero_spec) == 1

        fact = find_delta_dual(tau_dual, rho_zero_spec)
        assert u_plus_dual(lam, tau_dual, fact, rho_zero_spec) == pytest.approx(1)
        assert u_minus_dual(lam, tau_dual, fact, rho_zero_spec) == pytest.approx(1)


class TestDeterminants:

    def test_wrong_side_rejected(self, qtoda_spec, tau_dual):
        with pytest.raises(DomainError):
            k_plus(0.1 + 0.3j, tau_dual, qtoda_spec)

    def test_dual_finder_needs_dual_roots(self, qtoda_spec, tau):
        with pytest.raises(DomainError):
            find_delta_dual(tau, qtoda_spec)

    def test_single_row_truncation(self, qtoda_spec, tau):
        assert k_plus(0.1 + 0.3j, tau, qtoda_spec, n_fixed=1).value == 1

    def test_pole_proximity(self, qtoda_spec, tau):
        with pytest.raises(PoleProximityError):
            hill_det(tau[0], tau, qtoda_spec)

    def test_expected_slope(self, qtoda_spec, hex_pair):
        assert expected_slope(qtoda_spec) == pytest.approx(4 * np.log(abs(hex_pair.q)))
        toda = ModelSpec(ModelKind.TODA2, 2, 0.5, 0.1, hex_pair)
        assert expected_slope(toda) == pytest.approx(2 * expected_slope(qtoda_spec))

    def test_truncation_differences_decay(self, qtoda_spec, tau):
        assert convergence_slope(0.1 + 0.3j, tau, qtoda_spec) < 0


class TestNormalization:

    def test_strip_translates_are_undone(self, qtoda_spec, tau):
        zeros = [tau[0] + 2j * qtoda_spec.mp.omega2, tau[1] - 1j * qtoda_spec.mp.omega2]
        result = normalize_representatives(zeros, tau.roots, qtoda_spec)
        assert np.allclose(result, tau.roots)

    def test_lattice_shift_of_the_sum_is_removed(self, hex_pair):
        spec = ModelSpec(ModelKind.QTODA, 2, KAPPA, 0.4, hex_pair)
        half = delta_sum_target(spec) / 2
        seeds = [half + 0.1, half - 0.1]
        zeros = [seeds[0] + 1j * hex_pair.omega1, seeds[1]]
        result = normalize_representatives(zeros, seeds, spec)
        assert abs(sum(result) - delta_sum_target(spec)) < 1e-12


class TestFactorization:

    def test_factorization_residual(self, coupled):
        assert coupled.fact.residual < 1e-8
        assert coupled.fact_dual.residual < 1e-8

    def test_delta_sum(self, coupled):
        assert coupled.fact.constraint_residual < 1e-10
        assert coupled.fact_dual.constraint_residual < 1e-10

    def test_zeros_stay_near_tau_at_weak_coupling(self, coupled):
        c = coupled
        assert np.max(np.abs(c.fact.delta.as_array() - c.tau.as_array())) < 0.1
        assert np.max(np.abs(c.fact_dual.delta.as_array() - c.tau_dual.as_array())) < 0.1

    def test_to_dict(self, coupled):
        data = coupled.fact.to_dict()
        assert data["family"] == "delta"
        assert len(data["delta"]) == 2


class TestAsymptotics:

    @pytest.mark.parametrize("chain", ["coupled", "toda"])
    def test_k_plus_tends_to_one(self, chain, request):
        c = request.getfixturevalue(chain)
        lam = from_offsets(8, 0.3, c.spec.mp)
        assert abs(k_plus(lam, c.tau, c.spec).value - 1) < 1e-6

    def test_k_minus_tends_to_one_for_qtoda(self, coupled):
        lam = from_offsets(-8, 0.3, coupled.spec.mp)
        assert abs(k_minus(lam, coupled.tau, coupled.spec).value - 1) < 1e-6

    def test_k_minus_plateau_for_toda2(self, toda):
        lam = from_offsets(-8, 0.3, toda.spec.mp)
        expected = 1 / (1 - toda.spec.rho_power(toda.spec.mp.omega1))
        assert abs(expected - 1) > 0.05
        assert abs(k_minus(lam, toda.tau, toda.spec).value / expected - 1) < 1e-6


class TestRecurrence:

    @pytest.mark.parametrize("chain", ["coupled", "toda"])
    @pytest.mark.parametrize("x, y", [(0.3, 0.2), (0.6, -0.35)])
    def test_k_plus_three_term(self, chain, x, y, request):
        c = request.getfixturevalue(chain)
        spec = c.spec
        shift = 1j * spec.mp.omega1
        mu = from_offsets(x, y, spec.mp)

        below = k_plus(mu - shift, c.tau, spec).value
        here = k_plus(mu, c.tau, spec).value
        above = k_plus(mu + shift, c.tau, spec).value
        coupling = spec.rho_power(spec.mp.omega1) / (t_eval(mu, c.tau, spec) * t_eval(mu + shift, c.tau, spec))
        assert abs(below - here + coupling * above) < 1e-10 * max(1.0, abs(below))


class TestGapScaling:

    def test_gap_follows_the_coupling(self, coupled):
        spec = coupled.spec
        weaker = spec.with_log_rho(spec.L_rho - np.log(10) / spec.mp.omega1.real)
        assert abs(weaker.rho_power(weaker.mp.omega1)) == pytest.approx(
            abs(spec.rho_power(spec.mp.omega1)) / 10, rel=1e-9)

        gap = np.max(np.abs(coupled.fact.delta.as_array() - coupled.tau.as_array()))
        weaker_gap = np.max(np.abs(find_delta(coupled.tau, weaker).delta.as_array() - coupled.tau.as_array()))
        assert 5 < gap / weaker_gap < 20


class TestToda2Factorization:

    def test_tau_on_constraint(self, toda):
        assert constraint_residual(toda.tau, toda.spec) < 1e-12
        assert constraint_residual(toda.tau_dual, toda.spec) < 1e-12

    def test_factorization_residual(self, toda):
        assert toda.fact.residual < 1e-8
        assert toda.fact_dual.residual < 1e-8
        assert toda.fact.constraint_residual < 1e-10


class TestConjugation:

    @pytest.fixture
    def real_spec(self, conjugate_pair):
        return ModelSpec(ModelKind.QTODA, 2, 0.8, 0.0, conjugate_pair)

    @pytest.mark.parametrize("lam", [0.1 + 0.3j, -0.2 + 0.15j, 0.35 - 0.1j])
    def test_k_determinants(self, real_spec, lam):
        tau = RootSet([0.2, -0.2], RootFamily.TAU_DIRECT)
        tau_dual = RootSet([0.2, -0.2], RootFamily.TAU_DUAL)
        bar = np.conj(lam)
        assert np.conj(k_plus(lam, tau, real_spec).value) == pytest.approx(
            k_minus_dual(bar, tau_dual, real_spec).value, rel=1e-8)
        assert np.conj(k_minus(lam, tau, real_spec).value) == pytest.approx(
            k_plus_dual(bar, tau_dual, real_spec).value, rel=1e-8)

    def test_hill_determinants(self, real_spec):
        tau = RootSet([0.2, -0.2], RootFamily.TAU_DIRECT)
        tau_dual = RootSet([0.2, -0.2], RootFamily.TAU_DUAL)
        lam = 0.1 + 0.3j
        shifted = np.conj(lam) - 1j * real_spec.mp.omega2
        assert np.conj(hill_det(lam, tau, real_spec)) == pytest.approx(
            hill_det_dual(shifted, tau_dual, real_spec), rel=1e-8)
