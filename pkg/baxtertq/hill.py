from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from baxtertq import probes
from baxtertq.errors import DegeneracyError, DomainError, NonConvergenceError, PoleProximityError
from baxtertq.model import (ModelKind, ModelSpec, RootFamily, RootSet, check_distinct, delta_sum_target,
                            exp_zeta, t_eval)
from baxtertq.specfun import DEFAULT_CONFIG, ThetaProductConfig, q_pochhammer, theta_product

logger = logging.getLogger(__name__)

#############
# CONSTANTS #
#############

NEWTON_MAX_ITER = 50
NEWTON_STEP_TOL = 1e-12
DERIVATIVE_STEP = 1e-6
SEED_OFFSET = 1e-3
LADDER_RUNGS = 8
SLOPE_SIZES = (4, 8, 12, 16)


@dataclass(eq=True, frozen=True)
class TruncationPolicy():
    """
    When to stop growing a truncated determinant: once an increment falls below ``tol`` relative to the
    value, but never before ``n_min`` rows nor after ``n_max``.
    """

    tol: float = 1e-15
    n_min: int = 2
    n_max: int = 2000

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise DomainError(f"Truncation tol must be positive. The current value is {self.tol}")

        if self.n_min < 2:
            raise DomainError(f"n_min must be at least 2. The current value is {self.n_min}")

        if self.n_min > self.n_max:
            raise DomainError(f"n_min ({self.n_min}) must not exceed n_max ({self.n_max})")


@dataclass(eq=True, frozen=True)
class DetValue():
    value: complex
    n_used: int
    tail_estimate: float


@dataclass(frozen=True)
class HillFactorization():
    """
    The zero set ``delta`` of a Hill determinant together with the constant 𝔥 of
    ℋ = 𝔥·θ_δ/θ_τ and the factorization residual on the verification grid.
    """

    h_const: complex
    delta: RootSet
    residual: float
    constraint_residual: float = 0.0
    newton_iterations: tuple[int, ...] = ()
    ladder_used: bool = False

    def to_dict(self) -> dict:
        return {
            "h_const": self.h_const,
            "delta": list(self.delta.roots),
            "family": self.delta.family.value,
            "residual": self.residual,
            "constraint_residual": self.constraint_residual,
            "newton_iterations": list(self.newton_iterations),
            "ladder_used": self.ladder_used,
        }


class KVariant(Enum):
    """
    The four infinite determinants. Each one is tied to a side (direct or dual) and to the direction in
    which its rows march along the shift period.
    """
    PLUS = ("plus", False, 1)
    MINUS = ("minus", False, -1)
    PLUS_DUAL = ("plus_dual", True, 1)
    MINUS_DUAL = ("minus_dual", True, -1)

    @property
    def dual(self) -> bool:
        return self.value[1]

    @property
    def direction(self) -> int:
        return self.value[2]

    @property
    def carries_zeta(self) -> bool:
        # K₋ and K̃₊ have the e^{ωζ} diagonal
        return self in (KVariant.MINUS, KVariant.PLUS_DUAL)


######################
# TRIDIAGONAL KERNEL #
######################

def _k_coefficients(lam: complex, tau: RootSet, spec: ModelSpec,
                    variant: KVariant) -> tuple[complex, Callable[[int], complex]]:
    """
    Returns the diagonal entry d and the off-diagonal products C_k = b_{k−1}c_k of the tridiagonal matrix
    whose determinant is the requested K.
    """
    if tau.is_dual != variant.dual:
        raise DomainError(f"{variant.name} needs a {'dual' if variant.dual else 'direct'} root set")

    omega = spec.period(variant.dual)
    step = 1j * omega * variant.direction
    rho = 0j if spec.rho_zero else spec.rho_power(omega)

    if variant.carries_zeta:
        d = exp_zeta(tau, spec)
        rho = rho * d * d
    else:
        d = 1 + 0j

    def coeff(k: int) -> complex:
        return rho / (t_eval(lam + (k - 1) * step, tau, spec) * t_eval(lam + k * step, tau, spec))

    return d, coeff


def _check_k_poles(lam: complex, tau: RootSet, spec: ModelSpec, variant: KVariant) -> None:
    """
    Raises when ``lam`` is within the pole tolerance of τ_k ∓ iℕ*ω + i(other period)ℤ.
    """
    for k, root in enumerate(tau.roots):
        dist, (m, n) = spec.mp.nearest_lattice_point(lam - root)
        index = n if variant.dual else m
        if dist < spec.mp.pole_eps and index * variant.direction <= -1:
            raise PoleProximityError(
                f"{variant.name} evaluated {dist:.3e} away from a pole (root {k}, shift m={m}, n={n})",
                lattice_indices=(k, m, n))


def _recursion(d: complex, coeff: Callable[[int], complex], pol: TruncationPolicy,
               n_fixed: Optional[int] = None) -> DetValue:
    """
    Runs D_k = d·D_{k−1} − C_k·D_{k−2} through its increments E_k = (d − 1)D_{k−1} − C_k·D_{k−2}, which keeps
    small corrections from cancelling against D itself.
    """
    if n_fixed == 1:
        return DetValue(d, 1, 0.0)

    D_prev2, D_prev = 1 + 0j, d
    inc_prev = d - 1
    small_run = 0
    n_stop = pol.n_max if n_fixed is None else n_fixed

    for n in range(2, n_stop + 1):
        inc = (d - 1) * D_prev - coeff(n) * D_prev2
        D = D_prev + inc

        if not np.isfinite(D):
            raise NonConvergenceError(f"Determinant overflowed after {n} rows", iterations=n)

        ratio = abs(inc) / abs(inc_prev) if inc_prev != 0 else 0.0
        tail = abs(inc) * ratio / (1 - ratio) if ratio < 1 else abs(inc)

        # Two consecutive small increments so that a single accidental near-zero does not stop us
        small_run = small_run + 1 if abs(inc) <= pol.tol * abs(D) else 0
        if n_fixed is None and n >= pol.n_min and small_run >= 2:
            return DetValue(complex(D), n, tail)

        D_prev2, D_prev, inc_prev = D_prev, D, inc

    if n_fixed is not None:
        return DetValue(complex(D_prev), n_fixed, tail)

    raise NonConvergenceError(
        f"Determinant did not converge within n_max={pol.n_max} rows (last increment {abs(inc_prev):.3e})",
        iterations=pol.n_max,
        achieved=abs(inc_prev))


def k_determinant(lam: complex, tau: RootSet, spec: ModelSpec, variant: KVariant,
                  pol: TruncationPolicy = TruncationPolicy(), n_fixed: Optional[int] = None,
                  check_poles: bool = True) -> DetValue:
    """
    Evaluates one of K₊, K₋, K̃₊, K̃₋ at ``lam``. With ``n_fixed`` the n×n truncation is returned as is.
    """
    if check_poles:
        _check_k_poles(lam, tau, spec, variant)

    d, coeff = _k_coefficients(lam, tau, spec, variant)
    return _recursion(d, coeff, pol, n_fixed)


def k_plus(lam: complex, tau: RootSet, spec: ModelSpec, pol: TruncationPolicy = TruncationPolicy(),
           **kwargs) -> DetValue:
    return k_determinant(lam, tau, spec, KVariant.PLUS, pol, **kwargs)


def k_minus(lam: complex, tau: RootSet, spec: ModelSpec, pol: TruncationPolicy = TruncationPolicy(),
            **kwargs) -> DetValue:
    return k_determinant(lam, tau, spec, KVariant.MINUS, pol, **kwargs)


def k_plus_dual(lam: complex, tau: RootSet, spec: ModelSpec, pol: TruncationPolicy = TruncationPolicy(),
                **kwargs) -> DetValue:
    return k_determinant(lam, tau, spec, KVariant.PLUS_DUAL, pol, **kwargs)


def k_minus_dual(lam: complex, tau: RootSet, spec: ModelSpec, pol: TruncationPolicy = TruncationPolicy(),
                 **kwargs) -> DetValue:
    return k_determinant(lam, tau, spec, KVariant.MINUS_DUAL, pol, **kwargs)


def convergence_slope(lam: complex, tau: RootSet, spec: ModelSpec, variant: KVariant = KVariant.PLUS,
                      sizes: Sequence[int] = SLOPE_SIZES) -> float:
    """
    Least-squares slope of log|K^{(2n)} − K^{(n)}| against n. The differences are accumulated from the
    increments directly since they sit far below the rounding level of K itself.
    """
    d, coeff = _k_coefficients(lam, tau, spec, variant)
    n_top = 2 * max(sizes)

    increments = [0j, d - 1]
    D_prev2, D_prev = 1 + 0j, d
    for n in range(2, n_top + 1):
        inc = (d - 1) * D_prev - coeff(n) * D_prev2
        increments.append(inc)
        D_prev2, D_prev = D_prev, D_prev + inc

    logs = []
    for n in sizes:
        diff = abs(sum(increments[n + 1:2 * n + 1]))
        if diff == 0:
            raise NonConvergenceError(f"Truncation differences underflowed at n={n}; use smaller sizes")
        logs.append(np.log(diff))

    slope, _ = np.polyfit(np.asarray(sizes, dtype=float), np.asarray(logs), 1)
    return float(slope)


def expected_slope(spec: ModelSpec) -> float:
    """
    The geometric bound 2γN·log|q| per added row, with γ = 1 for q-Toda and 2 for Toda₂. The factor 2
    comes from the two t factors in every off-diagonal product.
    """
    gamma = 1 if spec.kind is ModelKind.QTODA else 2
    return 2 * gamma * spec.N * float(np.log(abs(spec.mp.q)))


####################
# HILL DETERMINANT #
####################

def _check_hill_poles(lam: complex, tau: RootSet, spec: ModelSpec) -> None:
    for k, root in enumerate(tau.roots):
        dist, (m, n) = spec.mp.nearest_lattice_point(lam - root)
        if dist < spec.mp.pole_eps:
            raise PoleProximityError(
                f"Hill determinant evaluated {dist:.3e} away from the pole at root {k} + i({m}ω₁ + {n}ω₂)",
                lattice_indices=(k, m, n))


def hill_det(lam: complex, tau: RootSet, spec: ModelSpec, pol: TruncationPolicy = TruncationPolicy(),
             check_poles: bool = True) -> complex:
    """
    ℋ(λ) = K₊(λ)K₋(λ + iω₁) − ρ^{ω₁}e^{ω₁ζ}K₊(λ + iω₁)K₋(λ)/(t(λ)t(λ + iω₁)), or its dual when ``tau`` is a
    dual root set.
    """
    dual = tau.is_dual
    if check_poles:
        _check_hill_poles(lam, tau, spec)

    omega = spec.period(dual)
    shift = 1j * omega
    plus = KVariant.PLUS_DUAL if dual else KVariant.PLUS
    minus = KVariant.MINUS_DUAL if dual else KVariant.MINUS

    def k(variant: KVariant, at: complex) -> complex:
        return k_determinant(at, tau, spec, variant, pol, check_poles=False).value

    first = k(plus, lam) * k(minus, lam + shift)
    coupling = 0j if spec.rho_zero else spec.rho_power(omega) * exp_zeta(tau, spec)
    if coupling == 0:
        return first

    second = coupling * k(plus, lam + shift) * k(minus, lam) / (
        t_eval(lam, tau, spec) * t_eval(lam + shift, tau, spec))
    return first - second


def hill_det_dual(lam: complex, tau_dual: RootSet, spec: ModelSpec,
                  pol: TruncationPolicy = TruncationPolicy(), check_poles: bool = True) -> complex:
    if not tau_dual.is_dual:
        raise DomainError("hill_det_dual needs a dual root set")
    return hill_det(lam, tau_dual, spec, pol, check_poles)


#############
# ZERO SETS #
#############

def _newton(func: Callable[[complex], complex], seed: complex, h: float, scale: float) -> tuple[complex, int]:
    """
    Newton iteration for an analytic function with a central-difference derivative.
    """
    lam = seed
    for iteration in range(1, NEWTON_MAX_ITER + 1):
        value = func(lam)
        derivative = (func(lam + h) - func(lam - h)) / (2 * h)

        if derivative == 0 or not np.isfinite(derivative):
            raise NonConvergenceError(f"Vanishing derivative at {lam}", iterations=iteration)

        step = value / derivative
        lam = lam - step

        # Newton wandered off its seed cell
        if abs(lam - seed) > 0.25 * scale:
            raise NonConvergenceError(f"Newton left the neighbourhood of {seed}", iterations=iteration)

        if abs(step) < NEWTON_STEP_TOL * scale:
            return lam, iteration

    raise NonConvergenceError(
        f"Newton did not converge within {NEWTON_MAX_ITER} iterations from {seed}",
        iterations=NEWTON_MAX_ITER,
        achieved=abs(step))


def _entire_hill(tau: RootSet, spec: ModelSpec, pol: TruncationPolicy,
                 cfg: ThetaProductConfig) -> Callable[[complex], complex]:
    """
    ℋθ_τ (or ℋ̃θ̃_τ̃), which is entire and vanishes exactly on the δ lattice.
    """
    def func(lam: complex) -> complex:
        return hill_det(lam, tau, spec, pol, check_poles=False) * theta_product(
            lam, tau.roots, spec.mp, tau.is_dual, cfg)

    return func


def _solve_seeds(tau: RootSet, spec: ModelSpec, pol: TruncationPolicy, cfg: ThetaProductConfig,
                 seeds: Sequence[complex]) -> tuple[list[complex], list[int]]:
    func = _entire_hill(tau, spec, pol, cfg)
    h = DERIVATIVE_STEP * spec.mp.min_abs

    zeros, iterations = [], []
    for seed in seeds:
        zero, its = _newton(func, seed, h, spec.mp.min_abs)
        zeros.append(zero)
        iterations.append(its)

    return zeros, iterations


def _initial_seeds(tau: RootSet, spec: ModelSpec) -> list[complex]:
    # Off the pole itself, along a generic direction
    h0 = SEED_OFFSET * spec.mp.min_abs * np.exp(1j * np.pi / 5)
    return [root + h0 for root in tau.roots]


def _ladder(tau: RootSet, spec: ModelSpec, pol: TruncationPolicy,
            cfg: ThetaProductConfig) -> tuple[list[complex], list[int]]:
    """
    Continuation in ρ: solve at ρ/2⁸ first and double ρ at every rung, seeding each rung with the previous
    zeros.
    """
    if spec.kind is not ModelKind.QTODA:
        # Rescaling ρ alone breaks the Toda₂ link between τ and the coupling, so K₋ would not converge
        raise NonConvergenceError("The rho continuation ladder is only available for the q-Toda chain")

    seeds = _initial_seeds(tau, spec)
    iterations: list[int] = []
    for rung in range(LADDER_RUNGS + 1):
        rung_spec = spec.with_log_rho(spec.L_rho + (rung - LADDER_RUNGS) * np.log(2))
        seeds, its = _solve_seeds(tau, rung_spec, pol, cfg, seeds)
        iterations.extend(its)
        logger.debug(f"Ladder rung {rung}: zeros {seeds}")

    return seeds, iterations


def normalize_representatives(zeros: Sequence[complex], seeds: Sequence[complex], spec: ModelSpec,
                              dual: bool = False) -> list[complex]:
    """
    Moves each zero by multiples of the strip period towards its seed, then shifts the last zero by the
    lattice vector that makes Σδ equal ω₁ω₂p0/(2π).
    """
    mp = spec.mp
    strip = spec.strip_period(dual)
    result = []
    for zero, seed in zip(zeros, seeds):
        m, n = mp.coordinates(zero - seed)
        k = round(m) if dual else round(n)
        result.append(zero - 1j * k * strip)

    m, n = mp.coordinates(sum(result) - delta_sum_target(spec))
    result[-1] -= mp.lattice_point(round(m), round(n))
    return result


def _verification_grid(tau: RootSet, delta: Sequence[complex], spec: ModelSpec) -> list[complex]:
    origin = complex(np.mean(tau.roots))
    roots = list(tau.roots) + list(delta)
    return probes.cell_grid((-0.375, -0.125, 0.125, 0.375), (-0.28, 0.05, 0.38), roots, spec.mp, origin)


def find_delta(tau: RootSet, spec: ModelSpec, pol: TruncationPolicy = TruncationPolicy(),
               cfg: ThetaProductConfig = DEFAULT_CONFIG, use_ladder: bool = True) -> HillFactorization:
    """
    Locates the N zeros of ℋ (or ℋ̃ for a dual ``tau``), one per τ_k, normalizes their representatives, fits
    𝔥 and measures the factorization residual on a 12-point grid.
    """
    dual = tau.is_dual
    family = RootFamily.DELTA_DUAL if dual else RootFamily.DELTA
    check_distinct(tau, spec.mp)

    # Without coupling the Hill determinant is identically one
    if spec.rho_zero:
        delta = RootSet(normalize_representatives(tau.roots, tau.roots, spec, dual), family)
        return HillFactorization(1 + 0j, delta, 0.0, abs(sum(delta.roots) - delta_sum_target(spec)),
                                 tuple(0 for _ in tau.roots))

    ladder_used = False
    try:
        zeros, iterations = _solve_seeds(tau, spec, pol, cfg, _initial_seeds(tau, spec))
    except NonConvergenceError as e:
        if not use_ladder:
            raise
        logger.info(f"Direct Newton failed ({e}), switching to the rho continuation ladder")
        zeros, iterations = _ladder(tau, spec, pol, cfg)
        ladder_used = True

    try:
        check_distinct(RootSet(zeros, family), spec.mp)
    except DegeneracyError as e:
        raise DegeneracyError(f"Two seeds converged to the same zero of the Hill determinant: {e}")

    delta = RootSet(normalize_representatives(zeros, tau.roots, spec, dual), family)
    constraint = abs(sum(delta.roots) - delta_sum_target(spec))

    grid = _verification_grid(tau, delta.roots, spec)

    def ratio(lam: complex) -> complex:
        return (theta_product(lam, delta.roots, spec.mp, dual, cfg)
                / theta_product(lam, tau.roots, spec.mp, dual, cfg))

    # Fit 𝔥 at the first grid point, check the rest
    h_const = hill_det(grid[0], tau, spec, pol) / ratio(grid[0])

    residual = 0.0
    for lam in grid:
        value = hill_det(lam, tau, spec, pol)
        residual = max(residual, abs(value - h_const * ratio(lam)) / abs(value))

    logger.debug(f"find_delta ({'dual' if dual else 'direct'}): delta={delta.roots}, h={h_const}, "
                 f"residual={residual:.3e}")

    return HillFactorization(h_const, delta, residual, constraint, tuple(iterations), ladder_used)


def find_delta_dual(tau_dual: RootSet, spec: ModelSpec, pol: TruncationPolicy = TruncationPolicy(),
                    cfg: ThetaProductConfig = DEFAULT_CONFIG, use_ladder: bool = True) -> HillFactorization:
    if not tau_dual.is_dual:
        raise DomainError("find_delta_dual needs a dual root set")
    return find_delta(tau_dual, spec, pol, cfg, use_ladder)


#############
# U FACTORS #
#############

def _pochhammer_ratio(lam: complex, delta: RootSet, tau: RootSet, spec: ModelSpec,
                      prefactor: complex, sign: int, dual: bool, cfg: ThetaProductConfig) -> complex:
    """
    ∏_k (prefactor·e^{sign·2π(λ − δ_k)/ω}; p) / ∏_k (same with τ_k), with (ω, p) = (ω₂, q²) or (ω₁, q̃⁻²).
    """
    mp = spec.mp
    omega, p = (mp.omega1, mp.q_dual_m2) if dual else (mp.omega2, mp.q2)

    value = 1 + 0j
    for d, t in zip(delta.roots, tau.roots):
        value *= q_pochhammer(prefactor * np.exp(sign * 2 * np.pi * (lam - d) / omega), p, cfg)
        value /= q_pochhammer(prefactor * np.exp(sign * 2 * np.pi * (lam - t) / omega), p, cfg)
    return value


def u_plus(lam: complex, tau: RootSet, fact: HillFactorization, spec: ModelSpec,
           cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    return _pochhammer_ratio(lam, fact.delta, tau, spec, spec.mp.q2, 1, False, cfg)


def u_minus(lam: complex, tau: RootSet, fact: HillFactorization, spec: ModelSpec,
            cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    return fact.h_const * _pochhammer_ratio(lam, fact.delta, tau, spec, 1, -1, False, cfg)


def u_plus_dual(lam: complex, tau_dual: RootSet, fact: HillFactorization, spec: ModelSpec,
                cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    return fact.h_const * _pochhammer_ratio(lam, fact.delta, tau_dual, spec, spec.mp.q_dual_m2, -1, True, cfg)


def u_minus_dual(lam: complex, tau_dual: RootSet, fact: HillFactorization, spec: ModelSpec,
                 cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    return _pochhammer_ratio(lam, fact.delta, tau_dual, spec, 1, 1, True, cfg)
