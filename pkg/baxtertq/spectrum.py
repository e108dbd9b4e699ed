from __future__ import annotations

import itertools
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from baxtertq.baxter import fit_probes
from baxtertq.errors import DegeneracyError, DomainError, NonConvergenceError
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet, t_eval, tau_constraint
from baxtertq.nlie import NlieSolution, v_form_t

logger = logging.getLogger(__name__)

#############
# CONSTANTS #
#############

DK_MAX_ITER = 200
DK_TOL = 1e-13
DK_SEED_PHASE = 0.4
CROSSCHECK_TOL = 1e-6

TFun = Callable[[complex], complex]


#######################
# SYMMETRIC FUNCTIONS #
#######################

def newton_to_elementary(power_sums: Sequence[complex], sigma_N: complex, N: int) -> list[complex]:
    """
    Newton's identities e_k = (1/k)Σ_{j=1}^{k}(−1)^{j−1}e_{k−j}p_j for k ≤ N − 1, with e_N supplied. Returns
    [e_1, ..., e_N].
    """
    if len(power_sums) != N - 1:
        raise DomainError(f"Expected {N - 1} power sums for N={N}, got {len(power_sums)}")

    e = [1 + 0j]
    for k in range(1, N):
        total = sum((-1) ** (j - 1) * e[k - j] * power_sums[j - 1] for j in range(1, k + 1))
        e.append(complex(total / k))
    e.append(complex(sigma_N))
    return e[1:]


def elementary_to_monic(elementary: Sequence[complex]) -> np.ndarray:
    """
    Coefficients (leading first) of ∏(w − z_k) = Σ_j (−1)^j e_j w^{N−j}.
    """
    return np.array([1 + 0j] + [(-1) ** j * e for j, e in enumerate(elementary, start=1)], dtype=complex)


def durand_kerner(coeffs: Sequence[complex], max_iter: int = DK_MAX_ITER, tol: float = DK_TOL) -> np.ndarray:
    """
    All roots of the monic polynomial with coefficients ``coeffs`` (leading first), by simultaneous
    Weierstrass corrections from seeds on the circle of radius |constant term|^{1/N}.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs[0] != 1:
        raise DomainError("durand_kerner expects a monic polynomial")

    n = len(coeffs) - 1
    if n == 1:
        return np.array([-coeffs[1]])

    radius = abs(coeffs[-1]) ** (1 / n) or 1.0
    roots = radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + DK_SEED_PHASE))

    for iteration in range(1, max_iter + 1):
        step = 0.0
        for i in range(n):
            others = np.delete(roots, i)
            denominator = np.prod(roots[i] - others)
            if denominator == 0:
                raise DegeneracyError(f"Durand-Kerner iterates collided at iteration {iteration}")
            correction = np.polyval(coeffs, roots[i]) / denominator
            roots[i] -= correction
            step = max(step, abs(correction))

        if step < tol * max(1.0, float(np.max(np.abs(roots)))):
            logger.debug(f"Durand-Kerner converged in {iteration} iterations")
            return roots

    raise NonConvergenceError(
        f"Durand-Kerner did not converge in {max_iter} iterations", iterations=max_iter, achieved=step)


def companion_roots(coeffs: Sequence[complex]) -> np.ndarray:
    """
    Eigenvalues of the companion matrix of the monic polynomial ``coeffs``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if len(coeffs) == 2:
        return np.array([-coeffs[1]])
    return np.linalg.eigvals(scipy.linalg.companion(coeffs))


def root_set_distance(a: Sequence[complex], b: Sequence[complex]) -> float:
    """
    Worst relative distance from a root in ``a`` to its nearest root in ``b``.
    """
    b = np.asarray(b, dtype=complex)
    return max(float(np.min(np.abs(b - z))) / max(1.0, abs(z)) for z in a)


###############
# NEWTON SUMS #
###############

def _alpha_prime(lam: np.ndarray, k: int, period: complex) -> np.ndarray:
    return -(2 * np.pi * k / period) * np.exp(-2 * np.pi * k * lam / period)


def integral_correction(k: int, sol: NlieSolution) -> complex:
    """
    ∫_C {α_k′(μ − iω/2) − α_k′(μ + iω/2)} log V(μ) dμ/(2iπ), with α_k(λ) = e^{−2πkλ/ω_p}.
    """
    contour = sol.contour
    half = 0.5j * contour.omega_s
    nodes = contour.nodes
    integrand = (_alpha_prime(nodes - half, k, contour.omega_p)
                 - _alpha_prime(nodes + half, k, contour.omega_p))
    return complex(np.sum(integrand * sol.weighted_log) / (2j * np.pi))


def newton_sum(k: int, sol: NlieSolution) -> complex:
    """
    Σ_a e^{−2πkτ_a/ω_p} = Σ_a e^{−2πkδ_a/ω_p} − ∫_C {α_k′(μ − iω/2) − α_k′(μ + iω/2)} log V dμ/(2iπ). The dual
    sum is the same expression on a dual solution.
    """
    N = sol.spec.N
    if not 1 <= k <= N - 1:
        raise DomainError(f"Newton sums are only used for 1 <= k <= N - 1 = {N - 1}, got k={k}")

    period = sol.contour.omega_p
    delta_part = complex(np.sum(np.exp(-2 * np.pi * k * sol.delta.as_array() / period)))
    return delta_part - integral_correction(k, sol)


def sigma_N(spec: ModelSpec, dual: bool = False) -> complex:
    """
    ∏_a e^{−2πτ_a/ω_p} as fixed by the constraint on τ: e^{−ωp0} for q-Toda, e^{−ωp0} + g^{2Nω} for Toda₂.
    """
    omega = spec.period(dual)
    value = np.exp(-omega * spec.p0)
    if spec.kind is ModelKind.TODA2 and not spec.rho_zero:
        value += spec.g_power(2 * spec.N * omega)
    return complex(value)


##################
# RECONSTRUCTION #
##################

@dataclass
class SideResult():
    """
    The reconstruction on one side (direct or dual).
    """

    newton_sums: list
    elementary: list
    tau: RootSet
    companion_distance: float
    crosscheck_residual: float
    shifts: tuple = ()

    def to_dict(self) -> dict:
        return {
            "newton_sums": list(self.newton_sums),
            "elementary_syms": list(self.elementary),
            "tau": list(self.tau.roots),
            "companion_distance": self.companion_distance,
            "crosscheck_residual": self.crosscheck_residual,
            "shifts": list(self.shifts),
        }


@dataclass
class SpectrumResult():
    direct: SideResult
    dual: SideResult
    warnings: list = field(default_factory=list)

    @property
    def tau(self) -> RootSet:
        return self.direct.tau

    @property
    def tau_dual(self) -> RootSet:
        return self.dual.tau

    @property
    def crosscheck_residual(self) -> float:
        return max(self.direct.crosscheck_residual, self.dual.crosscheck_residual)

    def to_dict(self) -> dict:
        return {"direct": self.direct.to_dict(), "dual": self.dual.to_dict(), "warnings": list(self.warnings)}


def _fix_parity(tau: list[complex], spec: ModelSpec, dual: bool) -> list[complex]:
    """
    For q-Toda the constraint fixes ∏e^{−πτ/ω}, not just its square; move the last root by iω if needed.
    """
    if spec.kind is not ModelKind.QTODA:
        return tau

    period = spec.strip_period(dual)
    family = RootFamily.TAU_DUAL if dual else RootFamily.TAU_DIRECT
    _, target = tau_constraint(family, spec)
    product = np.exp(-np.pi * sum(tau) / period)
    if abs(product + target) < abs(product - target):
        tau[-1] += 1j * period
    return tau


def _place(zeros: np.ndarray, spec: ModelSpec, dual: bool,
           reference: Optional[RootSet]) -> list[complex]:
    """
    τ = −(ω_p/2π)log z, matched root by root to ``reference`` in the exponential variable and moved by
    multiples of iω_p next to it.
    """
    period = spec.strip_period(dual)
    tau = [complex(-period * np.log(z) / (2 * np.pi)) for z in zeros]

    if reference is not None:
        ref = list(reference.roots)
        ref_z = np.exp(-2 * np.pi * np.asarray(ref) / period)
        order = []
        remaining = list(range(len(tau)))
        for z_ref in ref_z:
            best = min(remaining, key=lambda i: abs(zeros[i] - z_ref))
            order.append(best)
            remaining.remove(best)

        placed = []
        for i, r in zip(order, ref):
            m, n = spec.mp.coordinates(tau[i] - r)
            k = round(m) if dual else round(n)
            placed.append(tau[i] - 1j * k * period)
        tau = placed

    return _fix_parity(tau, spec, dual)


def _crosscheck(tau: list[complex], family: RootFamily, spec: ModelSpec, tfun: TFun,
                points: Sequence[complex]) -> float:
    roots = RootSet(tau, family)
    worst = 0.0
    for lam in points:
        expected = tfun(lam)
        actual = t_eval(lam, roots, spec)
        worst = max(worst, abs(actual - expected) / max(abs(expected), 1e-300))
    return worst


def _shift_search(tau: list[complex], family: RootFamily, spec: ModelSpec, tfun: TFun,
                  points: Sequence[complex]) -> tuple[list[complex], tuple, float]:
    """
    Tries τ_k ↦ τ_k + ip_kω with p_k ∈ {−1, 0, 1} and Σp_k = 0, keeping the best cross-check residual.
    """
    omega = spec.period(family.is_dual)
    best = (tau, tuple(0 for _ in tau), _crosscheck(tau, family, spec, tfun, points))

    for shifts in itertools.product((-1, 0, 1), repeat=len(tau)):
        if sum(shifts) != 0 or not any(shifts):
            continue
        candidate = [t + 1j * p * omega for t, p in zip(tau, shifts)]
        residual = _crosscheck(candidate, family, spec, tfun, points)
        if residual < best[2]:
            best = (candidate, shifts, residual)

    return best


def reconstruct_side(sol: NlieSolution, sol_other: NlieSolution, reference: Optional[RootSet] = None,
                     tfun: Optional[TFun] = None, tol: float = CROSSCHECK_TOL) -> SideResult:
    """
    Power sums → elementary symmetric functions → roots in w → τ, on the side of ``sol``.
    """
    spec = sol.spec
    dual = sol.dual
    N = spec.N
    family = RootFamily.TAU_DUAL if dual else RootFamily.TAU_DIRECT

    sums = [newton_sum(k, sol) for k in range(1, N)]
    elementary = newton_to_elementary(sums, sigma_N(spec, dual), N)
    coeffs = elementary_to_monic(elementary)

    zeros = durand_kerner(coeffs)
    distance = root_set_distance(zeros, companion_roots(coeffs))
    if distance > 1e-8:
        logger.warning(f"Durand-Kerner and companion roots differ by {distance:.3e}")

    tau = _place(zeros, spec, dual, reference)

    if tfun is None:
        def tfun(lam: complex) -> complex:
            return v_form_t(lam, sol)

    direct_sol, dual_sol = (sol_other, sol) if dual else (sol, sol_other)
    points = fit_probes(direct_sol, dual_sol, 4 * N, dual)
    residual = _crosscheck(tau, family, spec, tfun, points)
    shifts: tuple = ()
    if residual > tol and N > 1:
        tau, shifts, residual = _shift_search(tau, family, spec, tfun, points)

    return SideResult(sums, elementary, RootSet(tau, family), distance, residual, shifts)


def reconstruct_tau(sol: NlieSolution, sol_dual: NlieSolution, reference: Optional[RootSet] = None,
                    reference_dual: Optional[RootSet] = None, tfun: Optional[TFun] = None,
                    tfun_dual: Optional[TFun] = None, tol: float = CROSSCHECK_TOL) -> SpectrumResult:
    """
    Reconstructs τ and τ̃ from converged direct and dual solutions. A cross-check residual above ``tol`` after
    the lattice shift search means the roots may not satisfy τ_k ± iω/2 ∈ ℬ±; it is reported as a warning.
    """
    if sol.dual or not sol_dual.dual:
        raise DomainError("reconstruct_tau needs a direct and a dual solution")

    direct = reconstruct_side(sol, sol_dual, reference, tfun, tol)
    dual = reconstruct_side(sol_dual, sol, reference_dual, tfun_dual, tol)
    return combine_sides(direct, dual, tol)


def combine_sides(direct: SideResult, dual: SideResult, tol: float = CROSSCHECK_TOL) -> SpectrumResult:
    warnings = []
    for name, side in (("direct", direct), ("dual", dual)):
        if side.crosscheck_residual > tol:
            message = (f"The {name} reconstruction misses the cross-check ({side.crosscheck_residual:.3e}); "
                       f"a root may sit outside its half-plane even after the lattice shift search")
            logger.warning(message)
            warnings.append(message)

    return SpectrumResult(direct, dual, warnings)


def exponential_distance(a: RootSet, b: RootSet, spec: ModelSpec) -> float:
    """
    Worst relative distance between two root sets in the exponential variable e^{−2πτ/ω_p}.
    """
    period = spec.strip_period(a.is_dual)
    za = np.exp(-2 * np.pi * a.as_array() / period)
    zb = np.exp(-2 * np.pi * b.as_array() / period)
    return root_set_distance(za, zb)
