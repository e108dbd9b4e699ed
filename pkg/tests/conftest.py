import json
from types import SimpleNamespace

import numpy as np
import pytest

import checks
from baxtertq.bethe import default_pair_solver, solve_bethe
from baxtertq.hill import find_delta, find_delta_dual
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet, tau_constraint
from baxtertq.nlie import solution_for, solve_from_factorization
from baxtertq.specfun import ModularPair

HEX_OMEGA1 = complex(0.5, 0.8660254037844386)
KAPPA = complex(0.5497, 0.9521)


@pytest.fixture(autouse=True)
def fresh_invariant_caches():
    checks.clear_caches()
    yield
    checks.clear_caches()


@pytest.fixture
def hex_pair() -> ModularPair:
    return ModularPair(HEX_OMEGA1, 1.0)


@pytest.fixture
def conjugate_pair() -> ModularPair:
    return ModularPair(np.exp(0.25j * np.pi), np.exp(-0.25j * np.pi))


@pytest.fixture
def qtoda_spec(hex_pair) -> ModelSpec:
    return ModelSpec(ModelKind.QTODA, 2, KAPPA, 0.0, hex_pair)


@pytest.fixture
def rho_zero_spec(hex_pair) -> ModelSpec:
    return ModelSpec(ModelKind.QTODA, 2, KAPPA, 0.0, hex_pair, rho_override=0)


@pytest.fixture
def tau() -> RootSet:
    return RootSet([0.25, -0.25], RootFamily.TAU_DIRECT)


@pytest.fixture
def tau_dual() -> RootSet:
    return RootSet([0.25, -0.25], RootFamily.TAU_DUAL)


def config_dict(**overrides) -> dict:
    data = {
        "model": {"kind": "qtoda", "N": 2, "kappa": [KAPPA.real, KAPPA.imag], "p0": 0.0},
        "periods": {"omega1": [HEX_OMEGA1.real, HEX_OMEGA1.imag], "omega2": [1.0, 0.0]},
        "seeds": {"tau": [[0.25, 0.0], [-0.25, 0.0]]},
        "outputs": {"directory": "results", "emit_csv": True, "emit_grid": True},
    }
    data.update(overrides)
    return data


@pytest.fixture
def write_config(tmp_path):
    def write(data: dict, name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return write


@pytest.fixture(scope="session")
def coupled():
    """
    The q-Toda chain with two particles at weak coupling, solved through the Hill zeros on both sides.
    """
    spec = ModelSpec(ModelKind.QTODA, 2, KAPPA, 0.0, ModularPair(HEX_OMEGA1, 1.0))
    tau = RootSet([0.25, -0.25], RootFamily.TAU_DIRECT)
    tau_dual = RootSet([0.25, -0.25], RootFamily.TAU_DUAL)
    fact, fact_dual = find_delta(tau, spec), find_delta_dual(tau_dual, spec)
    sol = solve_from_factorization(tau, fact, spec, n_nodes=128)
    sol_dual = solve_from_factorization(tau_dual, fact_dual, spec, n_nodes=128)
    return SimpleNamespace(spec=spec, tau=tau, tau_dual=tau_dual, fact=fact, fact_dual=fact_dual, sol=sol,
                           sol_dual=sol_dual)


@pytest.fixture(scope="session")
def trivial():
    """
    The same chain in the rho = 0 limit, where every integral-equation solution vanishes.
    """
    spec = ModelSpec(ModelKind.QTODA, 2, KAPPA, 0.0, ModularPair(HEX_OMEGA1, 1.0), rho_override=0)
    roots = [0.25, -0.25]
    return SimpleNamespace(spec=spec, tau=RootSet(roots, RootFamily.TAU_DIRECT),
                           tau_dual=RootSet(roots, RootFamily.TAU_DUAL),
                           sol=solution_for(roots, spec, dual=False, n_nodes=32),
                           sol_dual=solution_for(roots, spec, dual=True, n_nodes=32))


@pytest.fixture(scope="session")
def toda():
    """
    The two-particle Toda₂ chain at κ = 0.2, with both τ sets placed on their constraint surfaces.
    """
    spec = ModelSpec(ModelKind.TODA2, 2, 0.2, 0.0, ModularPair(HEX_OMEGA1, 1.0))

    def constrained(family: RootFamily) -> RootSet:
        c, target = tau_constraint(family, spec)
        total = -spec.strip_period(family.is_dual) * np.log(target) / (c * np.pi)
        return RootSet([total / 2 + 0.25, total / 2 - 0.25], family)

    tau, tau_dual = constrained(RootFamily.TAU_DIRECT), constrained(RootFamily.TAU_DUAL)
    fact, fact_dual = find_delta(tau, spec), find_delta_dual(tau_dual, spec)
    sol = solve_from_factorization(tau, fact, spec, n_nodes=128)
    sol_dual = solve_from_factorization(tau_dual, fact_dual, spec, n_nodes=128)
    return SimpleNamespace(spec=spec, tau=tau, tau_dual=tau_dual, fact=fact, fact_dual=fact_dual, sol=sol,
                           sol_dual=sol_dual)


@pytest.fixture(scope="session")
def coupled_bethe(coupled):
    """
    The Bethe equations of the coupled chain, started from its Hill zeros.
    """
    solver = default_pair_solver(coupled.spec, coupled.sol.contour, coupled.sol_dual.contour)
    seed = RootSet(coupled.fact.delta.roots, RootFamily.DELTA)
    return SimpleNamespace(solver=solver, seed=seed, state=solve_bethe(seed, coupled.spec, solver))
