from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from baxtertq.errors import DomainError, NonConvergenceError, PoleProximityError

logger = logging.getLogger(__name__)

#############
# CONSTANTS #
#############

DEFAULT_TOL = 1e-12
DEFAULT_MAX_TERMS = 512
POLE_EPS_FACTOR = 1e-6


#################
# MODULAR PAIRS #
#################

# Using eq=True and frozen=True makes the dataclass automatically hashable
@dataclass(eq=True, frozen=True)
class ModularPair():
    """
    The two half-periods ``omega1`` and ``omega2``. Everything else (the nomes, ``Omega`` and the lattice
    iω₁ℤ + iω₂ℤ) is derived from them.
    """

    omega1: complex
    omega2: complex

    def __post_init__(self) -> None:
        # Frozen dataclasses need object.__setattr__ to normalize their fields
        object.__setattr__(self, "omega1", complex(self.omega1))
        object.__setattr__(self, "omega2", complex(self.omega2))
        self.validate_periods()

    def validate_periods(self) -> None:
        """
        Checks that the periods are nonzero and that Im(ω₁/ω₂) > 0, which is the same as |q| < 1.
        """
        if self.omega1 == 0 or self.omega2 == 0:
            raise DomainError("Both periods must be nonzero.")

        if not (self.omega1 / self.omega2).imag > 0:
            raise DomainError(
                f"Im(omega1/omega2) must be positive so that |q| < 1. "
                f"The current value is {(self.omega1 / self.omega2).imag}")

    @property
    def q(self) -> complex:
        return complex(np.exp(1j * np.pi * self.omega1 / self.omega2))

    @property
    def q_dual(self) -> complex:
        return complex(np.exp(1j * np.pi * self.omega2 / self.omega1))

    @property
    def q2(self) -> complex:
        """
        The nome q² of the direct products, computed from the exponent rather than by squaring.
        """
        return complex(np.exp(2j * np.pi * self.omega1 / self.omega2))

    @property
    def q_dual_m2(self) -> complex:
        """
        The nome q̃⁻² of the dual products.
        """
        return complex(np.exp(-2j * np.pi * self.omega2 / self.omega1))

    @property
    def Omega(self) -> complex:
        return self.omega1 + self.omega2

    @property
    def min_abs(self) -> float:
        return min(abs(self.omega1), abs(self.omega2))

    @property
    def pole_eps(self) -> float:
        return POLE_EPS_FACTOR * self.min_abs

    def coordinates(self, z: complex) -> tuple[float, float]:
        """
        Returns the real pair (m, n) with ``z = i(m ω₁ + n ω₂)``.
        """
        w = -1j * complex(z)
        m = (w * self.omega2.conjugate()).imag / (self.omega1 * self.omega2.conjugate()).imag
        n = (w * self.omega1.conjugate()).imag / (self.omega2 * self.omega1.conjugate()).imag
        return m, n

    def lattice_point(self, m: float, n: float) -> complex:
        return 1j * (m * self.omega1 + n * self.omega2)

    def nearest_lattice_point(self, z: complex) -> tuple[float, tuple[int, int]]:
        """
        Returns the distance from ``z`` to the nearest point of iω₁ℤ + iω₂ℤ together with its indices. The
        rounded coordinates are only a guess for sheared lattices, so the eight neighbours are searched too.
        """
        m, n = self.coordinates(z)
        m0, n0 = round(m), round(n)

        best = (math.inf, (m0, n0))
        for dm, dn in itertools.product((-1, 0, 1), repeat=2):
            indices = (m0 + dm, n0 + dn)
            dist = abs(z - self.lattice_point(*indices))
            if dist < best[0]:
                best = (dist, indices)

        return best


@dataclass(eq=True, frozen=True)
class ThetaProductConfig():
    """
    Truncation settings of the infinite q-products.
    """

    tol: float = DEFAULT_TOL
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self) -> None:
        if not 0 < self.tol < 1:
            raise DomainError(f"tol must lie in (0, 1). The current value is {self.tol}")

        if self.max_terms < 1:
            raise DomainError(f"max_terms must be at least 1. The current value is {self.max_terms}")


DEFAULT_CONFIG = ThetaProductConfig()


##############
# Q-PRODUCTS #
##############

def _q_pochhammer_with_tail(z: complex, p: complex, cfg: ThetaProductConfig) -> tuple[complex, float]:
    """
    Returns ∏_{k≥0}(1 − z pᵏ) together with the tail bound at which the product was truncated.
    """
    if abs(p) >= 1:
        raise DomainError(f"The q-Pochhammer nome must satisfy |p| < 1. The current value is {abs(p)}")

    value = 1 + 0j
    term = complex(z)
    tail_scale = 1 / (1 - abs(p))

    for _ in range(cfg.max_terms):
        tail = abs(term) * tail_scale

        if tail < cfg.tol:
            return value, tail

        value *= 1 - term
        term *= p

    tail = abs(term) * tail_scale
    if tail < cfg.tol:
        return value, tail

    raise NonConvergenceError(
        f"q-Pochhammer product did not reach tol={cfg.tol} within {cfg.max_terms} factors "
        f"(|z|={abs(z):.3e}, |p|={abs(p):.3e})",
        iterations=cfg.max_terms,
        achieved=tail)


def q_pochhammer(z: complex, p: complex, cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    """
    The infinite product (z; p) = ∏_{k≥0}(1 − z pᵏ), truncated once |z pᵏ|/(1 − |p|) drops below
    ``cfg.tol``.
    """
    return _q_pochhammer_with_tail(z, p, cfg)[0]


def q_pochhammer_tail(z: complex, p: complex, cfg: ThetaProductConfig = DEFAULT_CONFIG) -> float:
    return _q_pochhammer_with_tail(z, p, cfg)[1]


#####################
# THETA AND FRIENDS #
#####################

def theta(lam: complex, mp: ModularPair, cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    """
    θ(λ) = (e^{−2πλ/ω₂}; q²)(q² e^{2πλ/ω₂}; q²).
    """
    x = complex(np.exp(-2 * np.pi * lam / mp.omega2))
    q2 = mp.q2
    return q_pochhammer(x, q2, cfg) * q_pochhammer(q2 / x, q2, cfg)


def theta_dual(lam: complex, mp: ModularPair, cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    """
    θ̃(λ) = (e^{2πλ/ω₁}; q̃⁻²)(q̃⁻² e^{−2πλ/ω₁}; q̃⁻²).
    """
    x = complex(np.exp(2 * np.pi * lam / mp.omega1))
    p = mp.q_dual_m2
    return q_pochhammer(x, p, cfg) * q_pochhammer(p / x, p, cfg)


def theta_product(lam: complex, roots: Iterable[complex], mp: ModularPair, dual: bool = False,
                  cfg: ThetaProductConfig = DEFAULT_CONFIG) -> complex:
    """
    The shorthand θ_δ(λ) = ∏_k θ(λ − δ_k), or its dual with ``dual=True``.
    """
    func = theta_dual if dual else theta
    value = 1 + 0j
    for root in roots:
        value *= func(lam - root, mp, cfg)
    return value


def modular_B(z: complex, mp: ModularPair) -> complex:
    """
    The quadratic form B(z) = πz²/(ω₁ω₂) + iπΩz/(ω₁ω₂) − π(ω₁² + 3ω₁ω₂ + ω₂²)/(6ω₁ω₂).
    """
    w1, w2 = mp.omega1, mp.omega2
    prod = w1 * w2
    return (np.pi * z * z / prod + 1j * np.pi * mp.Omega * z / prod
            - np.pi * (w1 * w1 + 3 * prod + w2 * w2) / (6 * prod))


###############
# DOUBLE SINE #
###############

def _check_double_sine_pole(lam: complex, mp: ModularPair, eps: float) -> None:
    """
    Raises if ``lam`` sits within ``eps`` of a pole i(mω₁ + nω₂) with m, n ≤ −1.
    """
    dist, (m, n) = mp.nearest_lattice_point(lam)
    if m <= -1 and n <= -1 and dist < eps:
        raise PoleProximityError(
            f"Double sine evaluated {dist:.3e} away from its pole at m={m}, n={n}", lattice_indices=(m, n))


def double_sine(lam: complex, mp: ModularPair, cfg: ThetaProductConfig = DEFAULT_CONFIG,
                eps: float | None = None) -> complex:
    """
    𝒮(λ) = (e^{−2πλ/ω₂}; q²) / (q̃⁻² e^{−2πλ/ω₁}; q̃⁻²). Zeros sit at i(mω₁ + nω₂) with m, n ≥ 0 and poles
    at m, n ≤ −1.
    """
    _check_double_sine_pole(lam, mp, mp.pole_eps if eps is None else eps)

    num = q_pochhammer(complex(np.exp(-2 * np.pi * lam / mp.omega2)), mp.q2, cfg)
    den = q_pochhammer(mp.q_dual_m2 * complex(np.exp(-2 * np.pi * lam / mp.omega1)), mp.q_dual_m2, cfg)
    return num / den


def double_sine_alt(lam: complex, mp: ModularPair, cfg: ThetaProductConfig = DEFAULT_CONFIG,
                    eps: float | None = None) -> complex:
    """
    The second product form e^{iB(λ)}(e^{2πλ/ω₁}; q̃⁻²)/(q² e^{2πλ/ω₂}; q²), which is the first one with the
    roles of ω₁ and ω₂ exchanged.
    """
    _check_double_sine_pole(lam, mp, mp.pole_eps if eps is None else eps)

    num = q_pochhammer(complex(np.exp(2 * np.pi * lam / mp.omega1)), mp.q_dual_m2, cfg)
    den = q_pochhammer(mp.q2 * complex(np.exp(2 * np.pi * lam / mp.omega2)), mp.q2, cfg)
    return complex(np.exp(1j * modular_B(lam, mp))) * num / den


def quantum_dilog(z: complex, mp: ModularPair, cfg: ThetaProductConfig = DEFAULT_CONFIG,
                  alt: bool = False) -> complex:
    """
    ϖ(z) = e^{−iB(z − iΩ/2)/2} 𝒮(z − iΩ/2). The exponent is halved directly, so no square root branch is
    involved. ``alt`` switches to the second product form of 𝒮.
    """
    shifted = z - 0.5j * mp.Omega
    sine = double_sine_alt(shifted, mp, cfg) if alt else double_sine(shifted, mp, cfg)
    return complex(np.exp(-0.5j * modular_B(shifted, mp))) * sine
