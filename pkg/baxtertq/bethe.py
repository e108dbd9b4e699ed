from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from baxtertq.baxter import QSolution, fundamental_pair
from baxtertq.errors import BaxterError, DomainError, NonConvergenceError
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet, check_distinct, delta_sum_target
from baxtertq.nlie import (Contour, NlieSolution, SolverConfig, admissible_contour, coth_sum, guard_line,
                           solve_Y)
from baxtertq.specfun import DEFAULT_CONFIG, ThetaProductConfig, quantum_dilog

logger = logging.getLogger(__name__)

#############
# CONSTANTS #
#############

JACOBIAN_STEP = 1e-5
MAX_HALVINGS = 6
ENTIRETY_RADIUS = 1e-4
ENTIRETY_POINTS = 8

PairSolver = Callable[[Sequence[complex]], tuple[NlieSolution, NlieSolution]]


@dataclass(eq=True, frozen=True)
class BetheConfig():
    """
    Newton settings of the Bethe solver.
    """

    tol: float = 1e-10
    max_iter: int = 30

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise DomainError(f"Bethe tol must be positive. The current value is {self.tol}")

        if self.max_iter < 1:
            raise DomainError(f"Bethe max_iter must be at least 1. The current value is {self.max_iter}")


@dataclass
class BetheState():
    """
    A candidate (δ, ξ) with δ = δ̃, its residuals and the integral-equation solutions they were computed from.
    """

    delta: RootSet
    xi: complex
    residual_norm: float
    converged: bool
    residuals: list = field(default_factory=list)
    iterations: int = 0
    trace: list = field(default_factory=list)
    sol: Optional[NlieSolution] = None
    sol_dual: Optional[NlieSolution] = None

    def to_dict(self) -> dict:
        return {
            "delta": list(self.delta.roots),
            "xi": self.xi,
            "residual_norm": self.residual_norm,
            "residuals": list(self.residuals),
            "converged": self.converged,
            "iterations": self.iterations,
            "trace": list(self.trace),
        }


#############
# INTEGRALS #
#############

def i_delta(lam: complex, sol: NlieSolution) -> complex:
    """
    I(λ) = −∫_C {coth(π(λ − τ + iω/2)/ω_p) + coth(π(λ − τ − iω/2)/ω_p) + 2} log V(τ) dτ/(2iω_p). The dual
    integral is the same expression on a dual solution.
    """
    offset = sol.contour.offset(lam)
    guard_line(sol, offset, -0.5, "I")
    guard_line(sol, offset, 0.5, "I")

    half = 0.5j * sol.contour.omega_s
    return -(coth_sum(sol, lam, half) + coth_sum(sol, lam, -half)) / (2j * sol.contour.omega_p)


def i_delta_dual(lam: complex, sol_dual: NlieSolution) -> complex:
    if not sol_dual.dual:
        raise DomainError("i_delta_dual needs a dual solution")
    return i_delta(lam, sol_dual)


def _dilog_ratio(a: complex, b: complex, spec: ModelSpec, alt: bool, cfg: ThetaProductConfig) -> complex:
    """
    ϖ(a + iΩ/2)/ϖ(b + iΩ/2).
    """
    half = 0.5j * spec.mp.Omega
    return quantum_dilog(a + half, spec.mp, cfg, alt) / quantum_dilog(b + half, spec.mp, cfg, alt)


def _exponential_part(lam: complex, sol: NlieSolution, sol_dual: NlieSolution) -> complex:
    """
    ρ^{−iλ}e^{I(λ) + Ĩ(λ)}, times e^{−iNπλ²/(ω₁ω₂) − ip0λ} for Toda₂.
    """
    spec = sol.spec
    if spec.rho_zero:
        raise DomainError("The Bethe equations carry ρ^{−iλ} and are undefined in the rho = 0 limit")

    exponent = -1j * lam * spec.L_rho + i_delta(lam, sol) + i_delta(lam, sol_dual)
    if spec.kind is ModelKind.TODA2:
        mp = spec.mp
        exponent += -1j * np.pi * spec.N * lam * lam / (mp.omega1 * mp.omega2) - 1j * spec.p0 * lam
    return complex(np.exp(exponent))


def ratio_closed_form(lam: complex, sol: NlieSolution, sol_dual: NlieSolution, alt: bool = False,
                      cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    """
    The closed form of q₊(λ)/q₋(λ) off the δ lattice:
    ρ^{−iλ}e^{I + Ĩ}·∏_ℓ e^{−πΩδ_ℓ/(ω₁ω₂)}ϖ(δ_ℓ − λ + iΩ/2)/ϖ(λ − δ_ℓ + iΩ/2), with the extra Gaussian for
    Toda₂.
    """
    spec = sol.spec
    mp = spec.mp
    value = _exponential_part(lam, sol, sol_dual)
    for d in sol.delta.roots:
        value *= np.exp(-np.pi * mp.Omega * d / (mp.omega1 * mp.omega2))
        value *= _dilog_ratio(d - lam, lam - d, spec, alt, cfg)
    return complex(value)


def bethe_lhs(sol: NlieSolution, sol_dual: NlieSolution, k: int, alt: bool = False,
              cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    """
    lim_{λ→δ_k} q₊(λ)/q₋(λ). The ℓ = k factor of the dilogarithm product tends to −1 because 𝒮 has a simple
    zero at the origin.
    """
    spec = sol.spec
    mp = spec.mp
    delta = sol.delta.roots
    lam = delta[k]

    value = -_exponential_part(lam, sol, sol_dual)
    value *= np.exp(-np.pi * mp.Omega * sum(delta) / (mp.omega1 * mp.omega2))
    for ell, d in enumerate(delta):
        if ell != k:
            value *= _dilog_ratio(d - lam, lam - d, spec, alt, cfg)
    return complex(value)


def bethe_residuals(sol: NlieSolution, sol_dual: NlieSolution, xi: complex, alt: bool = False,
                    cfg: ThetaProductConfig = DEFAULT_CONFIG) -> np.ndarray:
    """
    LHS_k/ξ − 1 for k = 1..N. Moving the e^{−πΩΣδ/(ω₁ω₂)} = e^{−Ωp0/2} factor of LHS_k to the other side
    gives the familiar right-hand side ξe^{Ωp0/2}.
    """
    if xi == 0:
        raise DomainError("xi must be nonzero")
    return np.array([bethe_lhs(sol, sol_dual, k, alt, cfg) / xi - 1 for k in range(len(sol.delta))])


def bethe_residual(state: BetheState, k: int, alt: bool = False) -> complex:
    if state.sol is None or state.sol_dual is None:
        raise DomainError("The Bethe state carries no integral-equation solutions")
    return complex(bethe_lhs(state.sol, state.sol_dual, k, alt) / state.xi - 1)


###########
# SOLVING #
###########

def default_pair_solver(spec: ModelSpec, contour: Contour, contour_dual: Contour,
                        cfg: SolverConfig = SolverConfig()) -> PairSolver:
    """
    Solves the direct and the dual equation for δ = δ̃, keeping the given contours whenever they separate δ.
    """
    def solve(roots: Sequence[complex]) -> tuple[NlieSolution, NlieSolution]:
        delta = RootSet(roots, RootFamily.DELTA)
        delta_dual = RootSet(roots, RootFamily.DELTA_DUAL)

        direct = contour if contour.separates(delta) else admissible_contour(
            delta, spec.mp, contour.x0, contour.n_nodes)
        dual = contour_dual if contour_dual.separates(delta_dual) else admissible_contour(
            delta_dual, spec.mp, contour_dual.x0, contour_dual.n_nodes, dual=True)
        return solve_Y(delta, spec, direct, cfg), solve_Y(delta_dual, spec, dual, cfg)

    return solve


def _complete(free: np.ndarray, target: complex) -> list[complex]:
    # The last root is fixed by the sum constraint
    return list(free) + [target - complex(np.sum(free))]


def _evaluate(solver: PairSolver, roots: Sequence[complex],
              xi: Optional[complex]) -> tuple[NlieSolution, NlieSolution, np.ndarray, complex]:
    try:
        sol, sol_dual = solver(roots)
    except BaxterError as e:
        raise type(e)(f"Integral equation failed at delta={list(roots)}: {e}") from e

    lhs = np.array([bethe_lhs(sol, sol_dual, k) for k in range(len(roots))])
    if xi is None:
        xi = complex(np.mean(lhs))
    return sol, sol_dual, lhs / xi - 1, xi


def solve_bethe(seed: RootSet, spec: ModelSpec, pair_solver: PairSolver,
                cfg: BetheConfig = BetheConfig()) -> BetheState:
    """
    Damped Newton over the N − 1 free roots and ξ. The last root always satisfies Σδ = ω₁ω₂p0/(2π) exactly,
    each evaluation re-solves both integral equations, and a step is halved up to six times while it
    increases the residual.
    """
    if seed.family is not RootFamily.DELTA:
        raise DomainError(f"The Bethe seed must be a delta root set, got {seed.family.value}")

    if len(seed) != spec.N:
        raise DomainError(f"Expected {spec.N} seed roots, got {len(seed)}")

    check_distinct(seed, spec.mp)
    target = delta_sum_target(spec)
    N = spec.N
    h = JACOBIAN_STEP * spec.mp.min_abs

    free = np.array(seed.roots[:-1], dtype=complex)
    roots = _complete(free, target)
    sol, sol_dual, residuals, xi = _evaluate(pair_solver, roots, None)
    norm = float(np.max(np.abs(residuals)))
    trace = [norm]

    iteration = 0
    converged = norm < cfg.tol
    while not converged and iteration < cfg.max_iter:
        iteration += 1

        if N == 1:
            # Only ξ is free and the residual is linear in 1/ξ
            xi = xi * (1 + residuals[0])
            sol, sol_dual, residuals, _ = _evaluate(pair_solver, roots, xi)
        else:
            jacobian = np.empty((N, N), dtype=complex)
            for j in range(N - 1):
                bumped = free.copy()
                bumped[j] += h
                _, _, res_j, _ = _evaluate(pair_solver, _complete(bumped, target), xi)
                jacobian[:, j] = (res_j - residuals) / h
            jacobian[:, N - 1] = -(residuals + 1) / xi

            try:
                step = scipy.linalg.solve(jacobian, -residuals)
            except np.linalg.LinAlgError as e:
                raise NonConvergenceError(
                    f"Singular Bethe Jacobian at iteration {iteration}, delta={roots}: {e}",
                    iterations=iteration,
                    achieved=norm) from e
            accepted = False
            scale = 1.0
            for _ in range(MAX_HALVINGS + 1):
                trial_free = free + scale * step[:N - 1]
                trial_xi = xi + scale * step[N - 1]
                try:
                    trial = _evaluate(pair_solver, _complete(trial_free, target), trial_xi)
                except BaxterError as e:
                    logger.debug(f"Bethe trial step failed ({e}), halving")
                    scale /= 2
                    continue

                if float(np.max(np.abs(trial[2]))) < norm:
                    free, xi = trial_free, trial_xi
                    sol, sol_dual, residuals, _ = trial
                    accepted = True
                    break
                scale /= 2

            if not accepted:
                logger.warning(f"Bethe Newton stagnated at iteration {iteration} (residual {norm:.3e})")
                break

        roots = _complete(free, target)
        norm = float(np.max(np.abs(residuals)))
        trace.append(norm)
        converged = norm < cfg.tol
        logger.debug(f"Bethe iteration {iteration}: residual {norm:.3e}")

    if converged:
        logger.info(f"Bethe equations solved in {iteration} iterations (residual {norm:.3e})")
    else:
        logger.warning(f"Bethe equations not solved: residual {norm:.3e} after {iteration} iterations")

    return BetheState(RootSet(roots, RootFamily.DELTA), complex(xi), norm, converged, list(residuals), iteration,
                      trace, sol, sol_dual)


def require_converged(state: BetheState) -> BetheState:
    if not state.converged:
        raise NonConvergenceError(
            f"Bethe solve did not converge (residual {state.residual_norm:.3e})",
            iterations=state.iterations,
            achieved=state.residual_norm)
    return state


def reevaluate(state: BetheState, pair_solver: PairSolver) -> float:
    """
    The residual norm of ``state`` recomputed from freshly solved integral equations.
    """
    _, _, residuals, _ = _evaluate(pair_solver, state.delta.roots, state.xi)
    return float(np.max(np.abs(residuals)))


def jacobian_column_check(state: BetheState, pair_solver: PairSolver, j: int = 0) -> float:
    """
    Relative difference between the forward and the centred difference of the residuals in δ_j.
    """
    N = len(state.delta)
    if N < 2:
        raise DomainError("The Jacobian in delta needs at least two roots")

    spec = state.sol.spec
    target = delta_sum_target(spec)
    h = JACOBIAN_STEP * spec.mp.min_abs
    free = np.array(state.delta.roots[:-1], dtype=complex)

    def residuals(offset: complex) -> np.ndarray:
        bumped = free.copy()
        bumped[j] += offset
        return _evaluate(pair_solver, _complete(bumped, target), state.xi)[2]

    base = residuals(0)
    forward = (residuals(h) - base) / h
    centred = (residuals(h) - residuals(-h)) / (2 * h)
    return float(np.max(np.abs(forward - centred)) / np.max(np.abs(centred)))


############
# ENTIRETY #
############

@dataclass
class EntiretyReport():
    """
    For every δ_k: the relative error of lim q₊/q₋ against ξ, and the residue of q = q₊ − ξq₋ relative to the
    residue of q₊ alone.
    """

    ratio_errors: list
    residues: list

    @property
    def worst_ratio_error(self) -> float:
        return max(self.ratio_errors)

    @property
    def worst_residue(self) -> float:
        return max(self.residues)

    def to_dict(self) -> dict:
        return {"ratio_errors": list(self.ratio_errors), "residues": list(self.residues)}


def entirety_check(state: BetheState, qp: Optional[QSolution] = None,
                   qm: Optional[QSolution] = None) -> EntiretyReport:
    """
    Samples q₊/q₋ and q = q₊ − ξq₋ on a small circle around every δ_k. The circle mean extrapolates the
    ratio to the centre, and the mean of q(λ)(λ − δ_k) estimates the residue of q there.
    """
    if qp is None or qm is None:
        qp, qm = fundamental_pair(state.sol, state.sol_dual)

    radius = ENTIRETY_RADIUS * abs(state.sol.spec.mp.omega2)
    offsets = radius * np.exp(2j * np.pi * (np.arange(ENTIRETY_POINTS) + 0.5) / ENTIRETY_POINTS)

    ratio_errors, residues = [], []
    for root in state.delta.roots:
        plus = np.array([qp(root + h) for h in offsets])
        minus = np.array([qm(root + h) for h in offsets])

        ratio = np.mean(plus / minus)
        ratio_errors.append(float(abs(ratio - state.xi) / abs(state.xi)))

        residue = np.mean((plus - state.xi * minus) * offsets)
        scale = abs(np.mean(plus * offsets))
        residues.append(float(abs(residue) / scale) if scale else float(abs(residue)))

    return EntiretyReport(ratio_errors, residues)
