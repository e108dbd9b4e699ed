import pytest

import checks
from baxtertq.baxter import fundamental_pair, t_from_q
from baxtertq.bethe import BetheState
from baxtertq.errors import DomainError
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet
from baxtertq.nlie import solution_for
from baxtertq.spectrum import combine_sides, reconstruct_side
from checks import CheckContext, CheckOutcome, run_invariants
from checks._base import Invariant, within

from conftest import KAPPA


class TestOutcome:

    def test_status(self):
        assert CheckOutcome(True, 1e-12).status == "pass"
        assert CheckOutcome(False, 1.0).status == "fail"
        assert CheckOutcome.skip("not applicable").status == "skip"

    def test_within(self):
        assert within(1e-12, 1e-10).passed
        assert not within(1e-3, 1e-10).passed
        assert within(1e-3, 1e-10).detail == "tolerance 1e-10"

    def test_to_dict(self):
        assert CheckOutcome(True, 0.5, "ok").to_dict() == {"status": "pass", "value": 0.5, "detail": "ok"}


class TestInvariant:

    def test_missing_inputs_skip(self, qtoda_spec):
        inv = Invariant(lambda ctx: CheckOutcome(True), "sample", "nlie", requires=("sol", "sol_dual"))
        outcome = inv(CheckContext("fp", qtoda_spec))
        assert outcome.status == "skip"
        assert "sol" in outcome.detail

    def test_numeric_errors_fail(self, qtoda_spec):
        def broken(ctx):
            raise DomainError("out of range")

        outcome = Invariant(broken, "sample", "nlie")(CheckContext("fp", qtoda_spec))
        assert outcome.passed is False
        assert "DomainError" in outcome.detail

    def test_context_scratch(self, qtoda_spec):
        ctx = CheckContext("fp", qtoda_spec)
        calls = []
        for _ in range(2):
            ctx.cached("key", lambda: calls.append(1) or len(calls))
        assert calls == [1]


class TestSpecialFunctionBattery:

    def test_hexagonal_periods(self, qtoda_spec):
        outcomes = run_invariants(CheckContext("fp-hex", qtoda_spec), ("specfun",))
        assert outcomes["dilog_conjugation"].status == "skip"
        assert all(o.passed for name, o in outcomes.items() if name != "dilog_conjugation")

    def test_conjugate_periods(self, conjugate_pair):
        spec = ModelSpec(ModelKind.QTODA, 2, KAPPA, 0.0, conjugate_pair)
        outcomes = run_invariants(CheckContext("fp-conj", spec), ("specfun",))
        assert outcomes["dilog_conjugation"].passed

    def test_other_modules_skip_without_stages(self, qtoda_spec):
        outcomes = run_invariants(CheckContext("fp-empty", qtoda_spec), ("hill", "nlie", "baxter", "bethe"))
        assert all(o.status == "skip" for o in outcomes.values())

    def test_outcomes_cached_per_fingerprint(self, qtoda_spec):
        first = run_invariants(CheckContext("fp-cache", qtoda_spec), ("specfun",))
        again = run_invariants(CheckContext("fp-cache", qtoda_spec), ("specfun",))
        assert first["theta_modular"] is again["theta_modular"]

        checks.clear_caches()
        fresh = run_invariants(CheckContext("fp-cache", qtoda_spec), ("specfun",))
        assert fresh["theta_modular"] is not first["theta_modular"]


@pytest.mark.parametrize("name", ["theta_difference", "hill_factorization", "bethe_converged", "spectrum_round_trip"])
def test_registered(name):
    assert name in checks.REGISTRY


def solved_context(fingerprint, c, **fields) -> CheckContext:
    return CheckContext(fingerprint, c.spec, tau=c.tau, tau_dual=c.tau_dual, fact=c.fact, fact_dual=c.fact_dual,
                        sol=c.sol, sol_dual=c.sol_dual, **fields)


class TestSolvedBattery:

    def test_coupled_chain_passes(self, coupled):
        qp, qm = fundamental_pair(coupled.sol, coupled.sol_dual)
        outcomes = run_invariants(solved_context("fp-coupled", coupled, qp=qp, qm=qm), ("hill", "nlie", "baxter"))
        failed = [name for name, o in outcomes.items() if o.passed is False]
        skipped = [name for name, o in outcomes.items() if o.status == "skip"]
        assert failed == []
        assert skipped == ["hill_conjugation"]

    def test_toda2_chain_passes(self, toda):
        outcomes = run_invariants(solved_context("fp-toda", toda), ("hill", "nlie"))
        for name in ("hill_factorization", "delta_sum", "y_oracle", "k_factorization", "v_wronskian"):
            assert outcomes[name].passed, name

    def test_bethe_and_spectrum(self, coupled, coupled_bethe):
        state = coupled_bethe.state
        qp, qm = fundamental_pair(state.sol, state.sol_dual)
        sides = [reconstruct_side(a, b, None, lambda lam, dual=dual: t_from_q(qp, qm, lam, dual=dual))
                 for a, b, dual in ((state.sol, state.sol_dual, False), (state.sol_dual, state.sol, True))]
        ctx = CheckContext("fp-bethe", coupled.spec, bethe=state, pair_solver=coupled_bethe.solver,
                           spectrum_bethe=combine_sides(*sides))

        outcomes = run_invariants(ctx, ("bethe", "spectrum"))
        assert [name for name, o in outcomes.items() if o.passed is False] == []
        for name in ("bethe_converged", "bethe_idempotence", "bethe_modular", "entirety", "spectrum_crosscheck",
                     "spectrum_constraints", "root_extraction"):
            assert outcomes[name].passed, name
        assert outcomes["spectrum_round_trip"].status == "skip"
        assert outcomes["i_sum_imaginary"].status == "skip"

    def test_spectrum_skips_without_reconstruction(self, qtoda_spec):
        outcomes = run_invariants(CheckContext("fp-nospec", qtoda_spec), ("spectrum",))
        assert all(o.status == "skip" for o in outcomes.values())


class TestRealityInvariants:

    @pytest.fixture
    def real_spec(self, conjugate_pair):
        return ModelSpec(ModelKind.QTODA, 2, 0.8, 0.0, conjugate_pair)

    def test_hill_conjugation(self, real_spec):
        roots = [0.2, -0.2]
        ctx = CheckContext("fp-real-hill", real_spec, tau=RootSet(roots, RootFamily.TAU_DIRECT),
                           tau_dual=RootSet(roots, RootFamily.TAU_DUAL))
        assert checks.REGISTRY["hill_conjugation"](ctx).passed

    def test_bethe_reality(self, real_spec):
        roots = [0.2, -0.2]
        state = BetheState(RootSet(roots, RootFamily.DELTA), 1 + 0j, 1.0, False,
                           sol=solution_for(roots, real_spec, dual=False, n_nodes=128),
                           sol_dual=solution_for(roots, real_spec, dual=True, n_nodes=128))
        ctx = CheckContext("fp-real-bethe", real_spec, bethe=state)
        assert checks.REGISTRY["i_sum_imaginary"](ctx).passed
        assert checks.REGISTRY["lhs_unimodular"](ctx).passed

    def test_complex_roots_skip(self, real_spec):
        roots = [0.2 + 0.05j, -0.2 - 0.05j]
        ctx = CheckContext("fp-real-complex", real_spec, bethe=BetheState(RootSet(roots, RootFamily.DELTA),
                                                                          1 + 0j, 1.0, False))
        assert checks.REGISTRY["i_sum_imaginary"](ctx).status == "skip"

    def test_hexagonal_periods_skip(self, qtoda_spec, tau, tau_dual):
        ctx = CheckContext("fp-hex-hill", qtoda_spec, tau=tau, tau_dual=tau_dual)
        outcome = checks.REGISTRY["hill_conjugation"](ctx)
        assert outcome.status == "skip"
        assert "conjugate" in outcome.detail
