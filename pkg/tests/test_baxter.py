import numpy as np
import pytest

from baxtertq.baxter import (QSign, QSolution, baxter_check, check_probes, decompose, fit_from_q, fit_probes,
                             fit_t_roots, fundamental_pair, polynomial_from_fit, selfdual_wronskian, t_from_q_checked,
                             t_from_q_dual, wronskian, wronskians)
from baxtertq.errors import DomainError
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet, baxter_residual, baxter_terms, t_eval
from baxtertq.spectrum import exponential_distance


@pytest.fixture(scope="module")
def q_pair(coupled):
    return fundamental_pair(coupled.sol, coupled.sol_dual)


def sorted_roots(roots):
    return sorted(roots, key=lambda r: r.real)


class TestWronskian:

    def test_constant_and_linear(self):
        omega = 0.5 + 0.2j
        assert wronskian(lambda lam: 1.0, lambda lam: lam, 0.3, omega) == pytest.approx(1j * omega)

    def test_proportional_functions_vanish(self):
        assert wronskian(np.exp, lambda lam: 3 * np.exp(lam), 0.1 + 0.2j, 0.7) == pytest.approx(0)

    def test_selfdual_of_exponential(self, qtoda_spec):
        # σ² = 1 for two q-Toda particles
        assert abs(selfdual_wronskian(lambda lam: np.exp(0.3 * lam), 0.1 + 0.2j, qtoda_spec)) < 1e-12


class TestRootFit:

    def test_qtoda_direct(self, qtoda_spec, tau):
        points = [1j * (0.25 * qtoda_spec.mp.omega1 + s) for s in np.linspace(-0.45, 0.45, 8)]
        fit = fit_t_roots(lambda lam: t_eval(lam, tau, qtoda_spec), qtoda_spec, points)
        assert np.allclose(sorted_roots(fit.roots.roots), sorted_roots(tau.roots), atol=1e-10)
        assert fit.fit_residual < 1e-12
        assert fit.constraint_residual < 1e-10
        assert fit.roots.family is RootFamily.TAU_DIRECT

    def test_qtoda_dual(self, qtoda_spec, tau_dual):
        points = [1j * (s * qtoda_spec.mp.omega1 + 0.25) for s in np.linspace(-0.45, 0.45, 8)]
        fit = fit_t_roots(lambda lam: t_eval(lam, tau_dual, qtoda_spec), qtoda_spec, points, dual=True)
        assert np.allclose(sorted_roots(fit.roots.roots), sorted_roots(tau_dual.roots), atol=1e-10)
        assert fit.roots.family is RootFamily.TAU_DUAL

    def test_toda2_single_root(self, hex_pair):
        spec = ModelSpec(ModelKind.TODA2, 1, 0.5, 0.0, hex_pair)
        roots = RootSet([0.2], RootFamily.TAU_DIRECT)
        points = [1j * (0.25 * hex_pair.omega1 + s) for s in (-0.3, 0.0, 0.3)]
        fit = fit_t_roots(lambda lam: t_eval(lam, roots, spec), spec, points)
        assert fit.roots[0] == pytest.approx(0.2)


class TestQSolution:

    def test_rho_zero_rejected(self, trivial):
        with pytest.raises(DomainError):
            fundamental_pair(trivial.sol, trivial.sol_dual)

    def test_needs_both_sides(self, coupled):
        with pytest.raises(DomainError):
            QSolution(QSign.PLUS, coupled.sol, coupled.sol)


class TestCoupledPair:

    def test_wronskian_closed_forms(self, coupled, q_pair):
        qp, qm = q_pair
        report = wronskians(qp, qm, check_probes(coupled.sol, coupled.sol_dual, count=4))
        assert report.w1_residual < 1e-7
        assert report.w2_residual < 1e-7
        assert report.selfdual_residual < 1e-8
        assert report.min_w1 > 1e-10

    def test_polynomial_round_trip(self, coupled, q_pair):
        qp, qm = q_pair
        direct, dual = fit_from_q(qp, qm), fit_from_q(qp, qm, dual=True)
        assert exponential_distance(direct.roots, coupled.tau, coupled.spec) < 1e-6
        assert exponential_distance(dual.roots, coupled.tau_dual, coupled.spec) < 1e-6

    def test_baxter_equations(self, coupled, q_pair):
        qp, qm = q_pair
        probe = check_probes(coupled.sol, coupled.sol_dual, count=4)
        assert baxter_check(qp, qm, coupled.tau, coupled.tau_dual, probe) < 1e-6

    def test_polynomial_routes_agree(self, coupled, q_pair):
        qp, qm = q_pair
        for lam in fit_probes(coupled.sol, coupled.sol_dual, 4):
            expected = t_eval(lam, coupled.tau, coupled.spec)
            assert t_from_q_checked(qp, qm, lam) == pytest.approx(expected, rel=1e-6)

    def test_dual_polynomial(self, coupled, q_pair):
        qp, qm = q_pair
        for lam in fit_probes(coupled.sol, coupled.sol_dual, 4, dual=True):
            expected = t_eval(lam, coupled.tau_dual, coupled.spec)
            assert t_from_q_dual(qp, qm, lam) == pytest.approx(expected, rel=1e-6)

    def test_fitted_polynomial(self, coupled, q_pair):
        qp, qm = q_pair
        tfun = polynomial_from_fit(fit_from_q(qp, qm), coupled.spec)
        for lam in check_probes(coupled.sol, coupled.sol_dual, count=3):
            assert tfun(lam) == pytest.approx(t_eval(lam, coupled.tau, coupled.spec), rel=1e-6)

    def test_self_dual_residuals(self, coupled, q_pair):
        qp, _ = q_pair
        for lam in check_probes(coupled.sol, coupled.sol_dual, count=3):
            residual, residual_dual = baxter_residual(qp, coupled.tau, coupled.tau_dual, coupled.spec, lam)
            scale = sum(abs(term) for term in baxter_terms(qp, coupled.tau, coupled.spec, lam))
            scale_dual = sum(abs(term) for term in baxter_terms(qp, coupled.tau_dual, coupled.spec, lam, dual=True))
            assert abs(residual) < 1e-6 * scale
            assert abs(residual_dual) < 1e-6 * scale_dual

    def test_decomposition_of_q_plus(self, q_pair):
        qp, qm = q_pair
        decomposition = decompose(qp, qp, qm)
        plus, minus = decomposition.constants()
        assert plus == pytest.approx(1)
        assert abs(minus) < 1e-12
        assert decomposition.spread() < 1e-8
        assert decomposition.ellipticity_residual < 1e-8

    def test_fit_probes_are_distinct(self, coupled):
        points = fit_probes(coupled.sol, coupled.sol_dual, 8)
        assert len(set(points)) == 8
