from __future__ import annotations

import itertools
import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

import numpy as np

from baxtertq.errors import DegeneracyError, DomainError
from baxtertq.specfun import ModularPair

logger = logging.getLogger(__name__)

ArrayLike = Union[complex, np.ndarray]


class ModelKind(Enum):
    """
    The two chains whose Baxter equations are supported.
    """
    QTODA = "qtoda"
    TODA2 = "toda2"


class RootFamily(Enum):
    """
    Which constraint a root set obeys, and whether it belongs to the direct (ω₂-periodic) or the dual
    (ω₁-periodic) side.
    """
    TAU_DIRECT = "tau"
    TAU_DUAL = "tau_dual"
    DELTA = "delta"
    DELTA_DUAL = "delta_dual"

    @property
    def is_dual(self) -> bool:
        return self in (RootFamily.TAU_DUAL, RootFamily.DELTA_DUAL)

    @property
    def is_delta(self) -> bool:
        return self in (RootFamily.DELTA, RootFamily.DELTA_DUAL)


class ModelSpec():
    """
    Model parameters with every complex power carried through an explicit logarithm:
    g^x = e^{x L_g}, ϰ^x = e^{x L_kappa}, ρ^x = e^{x L_rho} and σ^x = e^{x·sigma_exponent}.

    ``rho_override`` either fixes L_rho (the coupling is then re-derived from it) or, when it is exactly 0,
    selects the ρ = 0 limit in which every positive power of ρ and g vanishes.
    """

    kind: ModelKind
    N: int
    kappa: complex
    p0: complex
    mp: ModularPair
    L_g: complex
    L_kappa: complex
    L_rho: complex
    sigma_exponent: complex
    rho_zero: bool

    def __init__(self, kind: ModelKind, N: int, kappa: complex, p0: complex, mp: ModularPair,
                 rho_override: Optional[Union[int, complex]] = None) -> None:
        self.kind = ModelKind(kind)
        self.N = N
        self.kappa = complex(kappa)
        self.p0 = complex(p0)
        self.mp = mp
        self.rho_override = rho_override

        self.validate_particle_number()

        self.L_kappa = 0j if self.kind is ModelKind.QTODA else -self.p0
        self.rho_zero = rho_override is not None and not isinstance(rho_override, complex) \
            and rho_override == 0

        if rho_override is None or self.rho_zero:
            self.L_g = -np.pi * self.kappa / (mp.omega1 * mp.omega2)
            self.L_rho = self.L_kappa + 2 * N * self.L_g
        else:
            # Fix L_rho and re-derive the coupling from it
            self.L_rho = complex(rho_override)
            self.L_g = (self.L_rho - self.L_kappa) / (2 * N)
            self.kappa = -mp.omega1 * mp.omega2 * self.L_g / np.pi

        if self.kind is ModelKind.QTODA:
            self.sigma_exponent = -0.5j * np.pi * N
        else:
            self.sigma_exponent = 1j * np.pi * N

        self.validate_regime()

    def validate_particle_number(self) -> None:
        """
        Checks that ``self.N`` is a positive integer.
        """
        if not isinstance(self.N, (int, np.integer)) or isinstance(self.N, bool):
            raise TypeError(f"N must be an integer. The current value is {self.N!r}")

        if self.N < 1:
            raise DomainError(f"N must be positive. The current value is {self.N}")

    def validate_regime(self) -> None:
        """
        Toda₂ determinants only converge when max_a |e^{ω_a(2p0 + L_rho)}| < 1.
        """
        if self.kind is not ModelKind.TODA2 or self.rho_zero:
            return

        gate = self.regime_gate()
        if gate >= 1:
            raise DomainError(
                f"The Toda2 regime gate max_a |exp(omega_a (2 p0 + L_rho))| < 1 is violated. "
                f"The current value is {gate:.6g}")

    def regime_gate(self) -> float:
        exponent = 2 * self.p0 + self.L_rho
        return max(abs(np.exp(self.mp.omega1 * exponent)), abs(np.exp(self.mp.omega2 * exponent)))

    ##########
    # POWERS #
    ##########

    def power(self, base: str, exponent: ArrayLike) -> ArrayLike:
        """
        Returns ``base**exponent`` for base in {"g", "kappa", "rho", "sigma"} through the stored logarithms.
        """
        if base == "kappa":
            return np.exp(exponent * self.L_kappa)
        if base == "sigma":
            return np.exp(exponent * self.sigma_exponent)
        if base not in ("g", "rho"):
            raise ValueError(f"Unknown base {base!r}")

        if self.rho_zero:
            # In the ρ = 0 limit only decaying powers make sense
            if np.any(np.real(exponent) <= 0):
                raise DomainError(f"{base}^x with Re(x) <= 0 diverges in the rho = 0 limit")
            return np.zeros_like(exponent) if isinstance(exponent, np.ndarray) else 0j

        log = self.L_g if base == "g" else self.L_rho
        return np.exp(exponent * log)

    def g_power(self, exponent: ArrayLike) -> ArrayLike:
        return self.power("g", exponent)

    def kappa_power(self, exponent: ArrayLike) -> ArrayLike:
        return self.power("kappa", exponent)

    def rho_power(self, exponent: ArrayLike) -> ArrayLike:
        return self.power("rho", exponent)

    def sigma_power(self, exponent: ArrayLike) -> ArrayLike:
        return self.power("sigma", exponent)

    @property
    def sigma(self) -> complex:
        return complex(np.exp(self.sigma_exponent))

    def period(self, dual: bool = False) -> complex:
        """
        The shift period of the Baxter equation on the given side: ω₁ for the direct one, ω₂ for the dual.
        """
        return self.mp.omega2 if dual else self.mp.omega1

    def strip_period(self, dual: bool = False) -> complex:
        """
        The period in which t is periodic on the given side: ω₂ for the direct one, ω₁ for the dual.
        """
        return self.mp.omega1 if dual else self.mp.omega2

    def with_log_rho(self, L_rho: complex) -> ModelSpec:
        """
        Returns a copy of this model with ρ replaced by e^{L_rho}.
        """
        return ModelSpec(self.kind, self.N, self.kappa, self.p0, self.mp, rho_override=complex(L_rho))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "N": self.N,
            "kappa": self.kappa,
            "p0": self.p0,
            "omega1": self.mp.omega1,
            "omega2": self.mp.omega2,
            "L_g": self.L_g,
            "L_kappa": self.L_kappa,
            "L_rho": self.L_rho,
            "rho_zero": self.rho_zero,
        }


#############
# ROOT SETS #
#############

class RootSet():
    """
    An ordered list of N complex roots tagged with the constraint family they satisfy.
    """

    roots: tuple[complex, ...]
    family: RootFamily

    def __init__(self, roots: Iterable[complex], family: RootFamily) -> None:
        self.roots = tuple(complex(r) for r in roots)
        self.family = RootFamily(family)

        if not self.roots:
            raise DomainError("A root set needs at least one root.")

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def __getitem__(self, k: int) -> complex:
        return self.roots[k]

    def __repr__(self) -> str:
        return f"RootSet({list(self.roots)}, {self.family.name})"

    @property
    def is_dual(self) -> bool:
        return self.family.is_dual

    def as_array(self) -> np.ndarray:
        return np.array(self.roots, dtype=complex)

    def replaced(self, roots: Iterable[complex], family: Optional[RootFamily] = None) -> RootSet:
        return RootSet(roots, self.family if family is None else family)


@dataclass(eq=True, frozen=True)
class ZetaPair():
    """
    The constants ζ, ζ̃ with e^{ω₁ζ} = e^{ω₁p0}∏e^{−2πτ_a/ω₂} and e^{ω₂ζ̃} = e^{ω₂p0}∏e^{−2πτ̃_a/ω₁}.
    """

    zeta: complex
    zeta_dual: complex


def zeta_of(roots: RootSet, spec: ModelSpec) -> complex:
    """
    ζ for a direct τ set, or ζ̃ for a dual one. The q-Toda chain always uses ζ = ζ̃ = 0.
    """
    if spec.kind is ModelKind.QTODA:
        return 0j

    total = sum(roots.roots)
    return spec.p0 - 2 * np.pi * total / (spec.mp.omega1 * spec.mp.omega2)


def zeta_pair(tau: RootSet, tau_dual: RootSet, spec: ModelSpec) -> ZetaPair:
    return ZetaPair(zeta_of(tau, spec), zeta_of(tau_dual, spec))


def exp_zeta(roots: RootSet, spec: ModelSpec) -> complex:
    """
    e^{ω₁ζ} for a direct τ set, e^{ω₂ζ̃} for a dual one.
    """
    return complex(np.exp(spec.period(roots.is_dual) * zeta_of(roots, spec)))


###############
# POLYNOMIALS #
###############

def t_eval(lam: ArrayLike, roots: RootSet, spec: ModelSpec) -> ArrayLike:
    """
    Evaluates the hyperbolic polynomial with the given roots. Direct families use ω₂, dual families ω₁:

    q-Toda: t(λ) = ∏ 2 sinh(π(λ − τ_k)/ω₂);  Toda₂: t(λ) = ∏ (e^{−2πλ/ω₂} − e^{−2πτ_k/ω₂}).
    """
    period = spec.strip_period(roots.is_dual)
    value = np.ones_like(lam, dtype=complex) if isinstance(lam, np.ndarray) else 1 + 0j

    if spec.kind is ModelKind.QTODA:
        for root in roots.roots:
            value = value * 2 * np.sinh(np.pi * (lam - root) / period)
    else:
        w = np.exp(-2 * np.pi * lam / period)
        for root in roots.roots:
            value = value * (w - np.exp(-2 * np.pi * root / period))

    return value


def baxter_terms(qfun: Callable[[complex], complex], roots: RootSet, spec: ModelSpec, lam: complex,
                 dual: bool = False) -> tuple[complex, complex, complex]:
    """
    Returns the three terms t(λ)q(λ), g^{Nω}σϰ^{ω}q(λ − iω) and g^{Nω}σ⁻¹q(λ + iω) of one Baxter equation,
    with ω = ω₁ (direct) or ω₂ (dual).
    """
    omega = spec.period(dual)
    prefactor = spec.g_power(spec.N * omega)

    lhs = t_eval(lam, roots, spec) * qfun(lam)
    down = prefactor * spec.sigma * spec.kappa_power(omega) * qfun(lam - 1j * omega)
    up = prefactor * spec.sigma_power(-1) * qfun(lam + 1j * omega)
    return lhs, down, up


def baxter_residual(qfun: Callable[[complex], complex], roots_direct: RootSet, roots_dual: RootSet,
                    spec: ModelSpec, lam: complex) -> tuple[complex, complex]:
    """
    The residuals of the self-dual pair of Baxter equations at ``lam``.
    """
    residuals = []
    for roots, dual in ((roots_direct, False), (roots_dual, True)):
        lhs, down, up = baxter_terms(qfun, roots, spec, lam, dual)
        residuals.append(lhs - down - up)

    return residuals[0], residuals[1]


def baxter_relative_residual(qfun: Callable[[complex], complex], roots: RootSet, spec: ModelSpec,
                             lam: complex, dual: bool = False) -> float:
    lhs, down, up = baxter_terms(qfun, roots, spec, lam, dual)
    scale = abs(lhs) + abs(down) + abs(up)
    return abs(lhs - down - up) / scale if scale else 0.0


###############
# CONSTRAINTS #
###############

def delta_sum_target(spec: ModelSpec) -> complex:
    """
    The common value ω₁ω₂p0/(2π) of Σδ_k and Σδ̃_k.
    """
    return spec.mp.omega1 * spec.mp.omega2 * spec.p0 / (2 * np.pi)


def tau_constraint(family: RootFamily, spec: ModelSpec) -> tuple[float, complex]:
    """
    Returns (c, target) such that a τ set obeys ∏ e^{−cπτ_k/ω'} = target. ω' is the strip period (ω₂ direct, ω₁
    dual) while the target is built from the shift period.
    """
    omega = spec.period(family.is_dual)

    if spec.kind is ModelKind.QTODA:
        return 1.0, complex(np.exp(-omega * spec.p0 / 2))

    return 2.0, complex(np.exp(-omega * spec.p0) + spec.g_power(2 * spec.N * omega))


def constraint_residual(roots: RootSet, spec: ModelSpec) -> float:
    """
    How far a root set is from its family's constraint: an absolute sum residual for δ sets, a relative
    product residual for τ sets.
    """
    if roots.family.is_delta:
        return abs(sum(roots.roots) - delta_sum_target(spec))

    c, target = tau_constraint(roots.family, spec)
    period = spec.strip_period(roots.is_dual)
    product = complex(np.exp(-c * np.pi * sum(roots.roots) / period))
    return abs(product - target) / max(1.0, abs(target))


def check_distinct(roots: RootSet, mp: ModularPair, eps: Optional[float] = None) -> None:
    """
    Raises if two roots coincide modulo the lattice iω₁ℤ + iω₂ℤ.
    """
    eps = mp.pole_eps if eps is None else eps
    for (j, a), (k, b) in itertools.combinations(enumerate(roots.roots), 2):
        dist, indices = mp.nearest_lattice_point(a - b)
        if dist < eps:
            raise DegeneracyError(
                f"Roots {j} and {k} coincide modulo the period lattice (distance {dist:.3e}, "
                f"lattice shift {indices})")


def check_roots(roots: RootSet, spec: ModelSpec, eps: Optional[float] = None) -> float:
    """
    Validates the size and distinctness of ``roots`` and returns its constraint residual.
    """
    if len(roots) != spec.N:
        raise DomainError(f"Expected {spec.N} roots, got {len(roots)}")

    check_distinct(roots, spec.mp, eps)
    return constraint_residual(roots, spec)
