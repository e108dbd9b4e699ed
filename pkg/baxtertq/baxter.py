from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from baxtertq import probes
from baxtertq.errors import CrossCheckError, DomainError, PoleProximityError
from baxtertq.model import (ModelKind, ModelSpec, RootFamily, RootSet, baxter_relative_residual, t_eval,
                            tau_constraint)
from baxtertq.nlie import NlieSolution, v_down_shift, v_form_t, v_up
from baxtertq.specfun import (DEFAULT_CONFIG, ThetaProductConfig, double_sine, double_sine_alt, q_pochhammer,
                              theta_product)

logger = logging.getLogger(__name__)

#############
# CONSTANTS #
#############

ROUTE_AGREEMENT_TOL = 1e-8
T_AGREEMENT_TOL = 1e-6
WRONSKIAN_ZERO_FACTOR = 1e-12
SAME_ROOTS_TOL = 1e-12
FIT_OFFSET = 0.25
FIT_SPREAD = 0.45


class QSign(Enum):
    """
    Which of the two fundamental solutions q₊, q₋.
    """
    PLUS = "plus"
    MINUS = "minus"

    @property
    def factor(self) -> int:
        return 1 if self is QSign.PLUS else -1


class Route(Enum):
    """
    How q± is assembled: from the q-products and θ (generic), or from the double sine, which requires δ = δ̃.
    """
    GENERIC = "generic"
    DOUBLE_SINE = "double_sine"


def f_p0(sign: QSign, lam: complex, spec: ModelSpec) -> complex:
    """
    The exponential-of-quadratic prefactors f^{(±)}.

    q-Toda: exp{iNπλ²/(2ω₁ω₂) ∓ NπΩλ/(2ω₁ω₂)}·e^{−ip0λ/2}.
    Toda₂: f⁺ = e^{−ip0λ} and f⁻ = exp{iNπλ²/(ω₁ω₂) + NπΩλ/(ω₁ω₂)}.
    """
    mp = spec.mp
    prod = mp.omega1 * mp.omega2
    N = spec.N

    if spec.kind is ModelKind.QTODA:
        exponent = (1j * N * np.pi * lam * lam / (2 * prod) - sign.factor * N * np.pi * mp.Omega * lam / (2 * prod)
                    - 0.5j * spec.p0 * lam)
    elif sign is QSign.PLUS:
        exponent = -1j * spec.p0 * lam
    else:
        exponent = 1j * N * np.pi * lam * lam / prod + N * np.pi * mp.Omega * lam / prod

    return complex(np.exp(exponent))


class QSolution():
    """
    One of the fundamental solutions q± of the self-dual pair of Baxter equations, bound to converged solutions
    of the direct and the dual integral equations.
    """

    sign: QSign
    delta: RootSet
    delta_dual: RootSet
    sol: NlieSolution
    sol_dual: NlieSolution
    spec: ModelSpec
    cfg: ThetaProductConfig

    def __init__(self, sign: QSign, sol: NlieSolution, sol_dual: NlieSolution,
                 cfg: ThetaProductConfig = DEFAULT_CONFIG) -> None:
        self.sign = QSign(sign)
        self.sol = sol
        self.sol_dual = sol_dual
        self.delta = sol.delta
        self.delta_dual = sol_dual.delta
        self.spec = sol.spec
        self.cfg = cfg

        self.validate_solutions()

    def validate_solutions(self) -> None:
        if self.sol.dual or not self.sol_dual.dual:
            raise DomainError("QSolution needs one direct and one dual integral-equation solution")

        if self.spec.rho_zero:
            raise DomainError("q± carry powers g^{∓iNλ} and cannot be evaluated in the rho = 0 limit")

    @property
    def self_dual(self) -> bool:
        """
        True when δ̃ coincides with δ, which is what the double sine route needs.
        """
        return all(abs(a - b) < SAME_ROOTS_TOL for a, b in zip(self.delta.roots, self.delta_dual.roots))

    def __call__(self, lam: complex) -> complex:
        return q_eval(self, lam)


def fundamental_pair(sol: NlieSolution, sol_dual: NlieSolution,
                     cfg: ThetaProductConfig = DEFAULT_CONFIG) -> tuple[QSolution, QSolution]:
    return QSolution(QSign.PLUS, sol, sol_dual, cfg), QSolution(QSign.MINUS, sol, sol_dual, cfg)


############
# ASSEMBLY #
############

def _power_prefactor(qsol: QSolution, lam: complex) -> complex:
    spec = qsol.spec
    if qsol.sign is QSign.PLUS:
        # (ϰg^N)^{−iλ}
        return complex(spec.kappa_power(-1j * lam) * spec.g_power(-1j * spec.N * lam))
    return complex(spec.g_power(1j * spec.N * lam))


def _products(qsol: QSolution, lam: complex) -> tuple[complex, complex]:
    """
    The q-product parts of ψ± and ψ̃±.
    """
    mp, cfg = qsol.spec.mp, qsol.cfg
    s = qsol.sign.factor

    direct = 1 + 0j
    for d in qsol.delta.roots:
        direct *= q_pochhammer(mp.q2 * np.exp(s * 2 * np.pi * (lam - d) / mp.omega2), mp.q2, cfg)

    dual = 1 + 0j
    for d in qsol.delta_dual.roots:
        dual *= q_pochhammer(mp.q_dual_m2 * np.exp(-s * 2 * np.pi * (lam - d) / mp.omega1), mp.q_dual_m2, cfg)

    return direct, dual


def _v_factors(qsol: QSolution, lam: complex) -> tuple[complex, complex]:
    """
    v↑(λ)ṽ↑(λ) for q₊, v↓(λ − iω₁)ṽ↓(λ − iω₂) for q₋.
    """
    if qsol.sign is QSign.PLUS:
        return v_up(lam, qsol.sol), v_up(lam, qsol.sol_dual)
    return v_down_shift(lam, qsol.sol), v_down_shift(lam, qsol.sol_dual)


def psi(qsol: QSolution, lam: complex) -> tuple[complex, complex]:
    """
    Returns (ψ±(λ), ψ̃±(λ)).
    """
    v, v_dual = _v_factors(qsol, lam)
    direct, dual = _products(qsol, lam)
    return v * direct, v_dual * dual


def _check_q_poles(qsol: QSolution, lam: complex) -> None:
    mp = qsol.spec.mp
    for k, root in enumerate(qsol.delta.roots):
        dist, (m, n) = mp.nearest_lattice_point(lam - root)
        if dist < mp.pole_eps:
            raise PoleProximityError(
                f"q{'+' if qsol.sign is QSign.PLUS else '-'} evaluated {dist:.3e} away from its pole at "
                f"delta_{k} + i({m}ω₁ + {n}ω₂)",
                lattice_indices=(k, m, n))


def big_q_eval(qsol: QSolution, lam: complex) -> complex:
    """
    The entire function Q±(λ) = prefactor·ψ±(λ)ψ̃±(λ)f^{(±)}(λ).
    """
    direct, dual = psi(qsol, lam)
    return _power_prefactor(qsol, lam) * direct * dual * f_p0(qsol.sign, lam, qsol.spec)


def _theta_denominator(qsol: QSolution, lam: complex) -> complex:
    if qsol.sign is QSign.PLUS:
        return theta_product(lam, qsol.delta.roots, qsol.spec.mp, cfg=qsol.cfg)
    return theta_product(-lam, [-d for d in qsol.delta.roots], qsol.spec.mp, cfg=qsol.cfg)


def _double_sine_form(qsol: QSolution, lam: complex, alt: bool) -> complex:
    sine = double_sine_alt if alt else double_sine
    mp, cfg = qsol.spec.mp, qsol.cfg
    v, v_dual = _v_factors(qsol, lam)

    denominator = 1 + 0j
    for d in qsol.delta.roots:
        arg = lam - d if qsol.sign is QSign.PLUS else d - lam
        denominator *= sine(arg, mp, cfg, eps=0.0)

    return _power_prefactor(qsol, lam) * v * v_dual * f_p0(qsol.sign, lam, qsol.spec) / denominator


def q_eval(qsol: QSolution, lam: complex, route: Route = Route.GENERIC, alt: bool = False) -> complex:
    """
    q₊(λ) = Q₊(λ)/θ_δ(λ) and q₋(λ) = Q₋(λ)/θ_{−δ}(−λ). The double sine route is only available when δ = δ̃;
    ``alt`` then uses the product form of 𝒮 with the two periods exchanged.
    """
    _check_q_poles(qsol, lam)

    if Route(route) is Route.DOUBLE_SINE:
        if not qsol.self_dual:
            raise DomainError("The double sine form of q± needs δ = δ̃")
        return _double_sine_form(qsol, lam, alt)

    return big_q_eval(qsol, lam) / _theta_denominator(qsol, lam)


def q_eval_checked(qsol: QSolution, lam: complex, tol: float = ROUTE_AGREEMENT_TOL) -> complex:
    """
    Evaluates q± by the generic route and, when δ = δ̃, asserts agreement with the double sine route.
    """
    value = q_eval(qsol, lam)
    if not qsol.self_dual:
        return value

    other = q_eval(qsol, lam, Route.DOUBLE_SINE)
    diff = abs(value - other) / max(abs(value), abs(other))
    if diff > tol:
        raise CrossCheckError(f"q± assembly routes disagree at {lam}: relative difference {diff:.3e}")
    return value


##############
# WRONSKIANS #
##############

QFun = Callable[[complex], complex]


def wronskian(u1: QFun, u2: QFun, lam: complex, omega: complex) -> complex:
    """
    W_ω[u1, u2](λ) = u1(λ)u2(λ + iω) − u2(λ)u1(λ + iω).
    """
    shift = 1j * omega
    return u1(lam) * u2(lam + shift) - u2(lam) * u1(lam + shift)


def selfdual_wronskian(u: QFun, lam: complex, spec: ModelSpec) -> complex:
    """
    𝒲[u](λ) = u(λ)u(λ + iΩ) − σ²u(λ + iω₁)u(λ + iω₂).
    """
    mp = spec.mp
    return (u(lam) * u(lam + 1j * mp.Omega)
            - spec.sigma_power(2) * u(lam + 1j * mp.omega1) * u(lam + 1j * mp.omega2))


def selfdual_scale(u: QFun, lam: complex, spec: ModelSpec) -> float:
    mp = spec.mp
    return (abs(u(lam) * u(lam + 1j * mp.Omega))
            + abs(spec.sigma_power(2) * u(lam + 1j * mp.omega1) * u(lam + 1j * mp.omega2)))


def c_delta_tilde(delta_dual: RootSet, spec: ModelSpec) -> complex:
    """
    The constant of the self-dual Wronskian of a combination of q₊ and q₋.
    """
    mp = spec.mp
    prod = mp.omega1 * mp.omega2
    roots = delta_dual.as_array()
    exponent = (-1j * np.pi * np.sum(roots * roots) / prod
                + 1j * np.pi * spec.N * (mp.omega1 ** 2 + 3 * prod + mp.omega2 ** 2) / (6 * prod))
    if spec.kind is ModelKind.TODA2:
        exponent -= np.pi * spec.N * mp.Omega * np.sum(roots) / prod
    return complex(np.exp(exponent))


def wronskian_closed_form(qp: QSolution, qm: QSolution, lam: complex, dual: bool = False) -> complex:
    """
    W_{ω₁}[q₊, q₋] = ϰ^{−iλ}g^{−Nω₁}ψ̃₊ψ̃₋f⁺(λ)f⁻(λ + iω₁)/θ_{−δ}(−λ − iω₁), and with ``dual``
    W_{ω₂}[q₊, q₋] = ϰ^{−iλ}g^{−Nω₂}ψ₊ψ₋f⁺(λ)f⁻(λ + iω₂)θ̃_δ̃(λ)/(θ_δ(λ)θ_{−δ}(−λ)).
    """
    spec, mp, cfg = qp.spec, qp.spec.mp, qp.cfg
    omega = spec.period(dual)
    minus_delta = [-d for d in qp.delta.roots]

    psi_p, psi_p_dual = psi(qp, lam)
    psi_m, psi_m_dual = psi(qm, lam)
    common = (spec.kappa_power(-1j * lam) * spec.g_power(-spec.N * omega)
              * f_p0(QSign.PLUS, lam, spec) * f_p0(QSign.MINUS, lam + 1j * omega, spec))

    if not dual:
        return complex(common * psi_p_dual * psi_m_dual
                       / theta_product(-lam - 1j * omega, minus_delta, mp, cfg=cfg))

    ratio = theta_product(lam, qp.delta_dual.roots, mp, dual=True, cfg=cfg) / (
        theta_product(lam, qp.delta.roots, mp, cfg=cfg) * theta_product(-lam, minus_delta, mp, cfg=cfg))
    return complex(common * psi_p * psi_m * ratio)


def selfdual_combination(qp: QSolution, qm: QSolution, lam: complex, a: complex, b: complex) -> complex:
    """
    The closed form of 𝒲[a·q₊ + b·q₋] for constant a, b: ab·ϰ^{−iλ}g^{−NΩ}C_δ̃·θ_δ̃(λ)/θ_δ(λ).
    """
    spec, mp = qp.spec, qp.spec.mp
    ratio = (theta_product(lam, qp.delta_dual.roots, mp, cfg=qp.cfg)
             / theta_product(lam, qp.delta.roots, mp, cfg=qp.cfg))
    return complex(a * b * spec.kappa_power(-1j * lam) * spec.g_power(-spec.N * mp.Omega)
                   * c_delta_tilde(qp.delta_dual, spec) * ratio)


@dataclass
class WronskianReport():
    """
    Worst relative residuals of the Wronskian identities over a probe set.
    """

    w1_residual: float
    w2_residual: float
    selfdual_residual: float
    c_delta_tilde: complex
    combination_residual: float = 0.0
    difference_residual: float = 0.0
    min_w1: float = 0.0
    probes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "w1_residual": self.w1_residual,
            "w2_residual": self.w2_residual,
            "selfdual_residual": self.selfdual_residual,
            "c_delta_tilde": self.c_delta_tilde,
            "combination_residual": self.combination_residual,
            "difference_residual": self.difference_residual,
            "min_w1": self.min_w1,
        }


def _relative(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


def wronskians(qp: QSolution, qm: QSolution, probe: Sequence[complex]) -> WronskianReport:
    """
    Compares W_{ω₁}, W_{ω₂} computed from q± values with their closed forms, checks that 𝒲[q±] vanishes and
    that 𝒲[2q₊ − 3q₋] matches its closed form, and checks W_{ω₁}(λ + iω₁) = σ²ϰ^{ω₁}W_{ω₁}(λ).
    """
    spec = qp.spec
    mp = spec.mp
    w1_res = w2_res = sd_res = comb_res = diff_res = 0.0
    min_w1 = np.inf

    def combination(lam: complex) -> complex:
        return 2 * qp(lam) - 3 * qm(lam)

    for lam in probe:
        w1 = wronskian(qp, qm, lam, mp.omega1)
        w2 = wronskian(qp, qm, lam, mp.omega2)
        min_w1 = min(min_w1, abs(w1))

        w1_res = max(w1_res, _relative(w1, wronskian_closed_form(qp, qm, lam)))
        w2_res = max(w2_res, _relative(w2, wronskian_closed_form(qp, qm, lam, dual=True)))

        for u in (qp, qm):
            sd_res = max(sd_res, abs(selfdual_wronskian(u, lam, spec)) / selfdual_scale(u, lam, spec))

        comb_res = max(comb_res, _relative(selfdual_wronskian(combination, lam, spec),
                                           selfdual_combination(qp, qm, lam, 2, -3)))

        shifted = wronskian(qp, qm, lam + 1j * mp.omega1, mp.omega1)
        expected = spec.sigma_power(2) * spec.kappa_power(mp.omega1) * w1
        diff_res = max(diff_res, _relative(shifted, expected))

    report = WronskianReport(w1_res, w2_res, sd_res, c_delta_tilde(qp.delta_dual, spec), comb_res, diff_res,
                             float(min_w1), list(probe))
    logger.info(f"Wronskians: W1 {w1_res:.3e}, W2 {w2_res:.3e}, self-dual {sd_res:.3e}")
    return report


##########################
# POLYNOMIAL FROM Q PAIR #
##########################

def t_from_q(qp: QSolution, qm: QSolution, lam: complex, dual: bool = False) -> complex:
    """
    t(λ) = σg^{Nω}ϰ^{ω}[q₊(λ − iω)q₋(λ + iω) − q₋(λ − iω)q₊(λ + iω)]/W_ω[q₊, q₋](λ), with ω = ω₁ or ω₂ for
    the dual polynomial.
    """
    spec = qp.spec
    omega = spec.period(dual)
    shift = 1j * omega

    first = qp(lam) * qm(lam + shift)
    second = qm(lam) * qp(lam + shift)
    denominator = first - second
    if abs(denominator) <= WRONSKIAN_ZERO_FACTOR * (abs(first) + abs(second)):
        raise PoleProximityError(f"The Wronskian of q± nearly vanishes at {lam}")

    numerator = qp(lam - shift) * qm(lam + shift) - qm(lam - shift) * qp(lam + shift)
    prefactor = spec.sigma * spec.g_power(spec.N * omega) * spec.kappa_power(omega)
    return complex(prefactor * numerator / denominator)


def t_from_q_dual(qp: QSolution, qm: QSolution, lam: complex) -> complex:
    return t_from_q(qp, qm, lam, dual=True)


def t_from_q_checked(qp: QSolution, qm: QSolution, lam: complex, dual: bool = False,
                     tol: float = T_AGREEMENT_TOL) -> complex:
    """
    Evaluates t through the Wronskian ratio and through the auxiliary functions, and asserts that they agree.
    """
    value = t_from_q(qp, qm, lam, dual)
    other = v_form_t(lam, qp.sol_dual if dual else qp.sol)
    diff = _relative(value, other)
    if diff > tol:
        raise CrossCheckError(f"t from q± and the v-form disagree at {lam}: relative difference {diff:.3e}")
    return value


##########
# PROBES #
##########

def _avoid(qsol_or_sols) -> list[complex]:
    sol, sol_dual = qsol_or_sols
    return list(sol.delta.roots) + list(sol_dual.delta.roots)


def _shifts(mp) -> tuple[complex, ...]:
    return (0, 1j * mp.omega1, -1j * mp.omega1, 1j * mp.omega2, -1j * mp.omega2, 1j * mp.Omega,
            2j * mp.omega1)


def check_probes(sol: NlieSolution, sol_dual: NlieSolution, count: int = 10, seed: int = 0) -> list[complex]:
    """
    ``count`` reproducible probe points around the two contours, clear of the δ and δ̃ lattices.
    """
    mp = sol.spec.mp
    roots = _avoid((sol, sol_dual))
    x0, y0 = sol.contour.x0, sol_dual.contour.x0

    result: list[complex] = []
    for dx, dy in probes.random_offsets(8 * count, seed):
        lam = probes.from_offsets(x0 + dx, y0 + dy, mp)
        if probes.is_clear(lam, roots, mp, _shifts(mp)):
            result.append(lam)
        if len(result) == count:
            return result

    raise DomainError(f"Only found {len(result)} clear probe points out of {count}")


def fit_probes(sol: NlieSolution, sol_dual: NlieSolution, count: int, dual: bool = False) -> list[complex]:
    """
    Points at a fixed offset on the fitted side, spread across the period strip the polynomial lives on.
    """
    mp = sol.spec.mp
    roots = _avoid((sol, sol_dual))
    x0, y0 = sol.contour.x0, sol_dual.contour.x0
    omega = sol.spec.period(dual)
    shifts = (0, 1j * omega, -1j * omega)

    spread = np.linspace(-FIT_SPREAD, FIT_SPREAD, 2 * count)
    candidates = []
    for s in spread:
        if dual:
            lam = probes.from_offsets(x0 + s, y0 + FIT_OFFSET, mp)
        else:
            lam = probes.from_offsets(x0 + FIT_OFFSET, y0 + s, mp)
        if probes.is_clear(lam, roots, mp, shifts):
            candidates.append(lam)

    if len(candidates) < count:
        raise DomainError(f"Only found {len(candidates)} clear fit points out of {count}")

    # Spread the chosen points over the whole range
    picks = np.linspace(0, len(candidates) - 1, count).round().astype(int)
    return [candidates[i] for i in picks]


###########
# FITTING #
###########

@dataclass
class RootFit():
    """
    Roots of a fitted hyperbolic polynomial, with the fit residual and the constraint residual of the roots.
    """

    roots: RootSet
    coefficients: np.ndarray
    fit_residual: float
    constraint_residual: float

    def to_dict(self) -> dict:
        return {
            "roots": list(self.roots.roots),
            "fit_residual": self.fit_residual,
            "constraint_residual": self.constraint_residual,
        }


def fit_t_roots(tfun: QFun, spec: ModelSpec, points: Sequence[complex], dual: bool = False) -> RootFit:
    """
    Fits the samples of ``tfun`` to a hyperbolic polynomial of degree N in w = e^{−2πλ/ω} and recovers its
    roots. q-Toda samples are first multiplied by e^{−πNλ/ω}, which turns ∏2 sinh into a polynomial in w.
    """
    period = spec.strip_period(dual)
    family = RootFamily.TAU_DUAL if dual else RootFamily.TAU_DIRECT
    N = spec.N

    points = np.asarray(points, dtype=complex)
    w = np.exp(-2 * np.pi * points / period)
    values = np.array([tfun(lam) for lam in points], dtype=complex)
    if spec.kind is ModelKind.QTODA:
        values = values * np.exp(-np.pi * N * points / period)

    vander = np.vander(w, N + 1, increasing=True)
    coeffs, *_ = scipy.linalg.lstsq(vander, values)
    fit_residual = float(np.max(np.abs(vander @ coeffs - values)) / np.max(np.abs(values)))

    # np.roots wants the leading coefficient first
    zeros = np.roots(coeffs[::-1])
    tau = list(-period * np.log(zeros) / (2 * np.pi))

    if spec.kind is ModelKind.QTODA:
        # w only fixes e^{−2πτ/ω}; the sign of ∏e^{πτ/ω} = (−1)^N a_N decides the last iω shift
        expected = (-1) ** N * coeffs[N]
        actual = np.prod(np.exp(np.pi * np.asarray(tau) / period))
        if abs(actual + expected) < abs(actual - expected):
            tau[-1] += 1j * period

    roots = RootSet(tau, family)
    c, target = tau_constraint(family, spec)
    product = complex(np.exp(-c * np.pi * sum(roots.roots) / period))
    constraint = abs(product - target) / max(1.0, abs(target))

    logger.debug(f"fit_t_roots ({'dual' if dual else 'direct'}): roots {tau}, residual {fit_residual:.3e}")
    return RootFit(roots, coeffs, fit_residual, constraint)


def fit_from_q(qp: QSolution, qm: QSolution, dual: bool = False) -> RootFit:
    """
    Samples t_from_q on 4N fit points and fits the roots.
    """
    points = fit_probes(qp.sol, qp.sol_dual, 4 * qp.spec.N, dual)
    return fit_t_roots(lambda lam: t_from_q(qp, qm, lam, dual), qp.spec, points, dual)


def polynomial_from_fit(fit: RootFit, spec: ModelSpec) -> QFun:
    def tfun(lam: complex) -> complex:
        return complex(t_eval(lam, fit.roots, spec))
    return tfun


#################
# DECOMPOSITION #
#################

@dataclass
class Decomposition():
    """
    Samples of the elliptic coefficients 𝒫± of q = 𝒫₊q₊ + 𝒫₋q₋ on a cell grid.
    """

    grid: list
    P_plus: np.ndarray
    P_minus: np.ndarray
    ellipticity_residual: float

    def constants(self) -> tuple[complex, complex]:
        return complex(np.mean(self.P_plus)), complex(np.mean(self.P_minus))

    def spread(self) -> float:
        """
        Largest deviation of the samples from their mean, i.e. how far 𝒫± are from constants.
        """
        a, b = self.constants()
        return float(max(np.max(np.abs(self.P_plus - a)), np.max(np.abs(self.P_minus - b))))


def decomposition_grid(qp: QSolution) -> list[complex]:
    mp = qp.spec.mp
    offsets = (-0.35, -0.15, 0.15, 0.35)
    origin = probes.from_offsets(qp.sol.contour.x0, qp.sol_dual.contour.x0, mp)
    roots = _avoid((qp.sol, qp.sol_dual))
    return probes.cell_grid(offsets, offsets, roots, mp, origin, _shifts(mp))


def decompose(q: QFun, qp: QSolution, qm: QSolution, grid: Optional[Sequence[complex]] = None) -> Decomposition:
    """
    𝒫± = ±W_{ω₁}[q, q∓]/W_{ω₁}[q₊, q₋] on a cell grid, with the ellipticity of each sample checked against its
    iω₁ and iω₂ translates.
    """
    mp = qp.spec.mp
    grid = decomposition_grid(qp) if grid is None else list(grid)

    def coefficients(lam: complex) -> tuple[complex, complex]:
        base = wronskian(qp, qm, lam, mp.omega1)
        first, second = qp(lam) * qm(lam + 1j * mp.omega1), qm(lam) * qp(lam + 1j * mp.omega1)
        if abs(base) <= WRONSKIAN_ZERO_FACTOR * (abs(first) + abs(second)):
            raise PoleProximityError(f"W[q+, q-] nearly vanishes at {lam}")
        return wronskian(q, qm, lam, mp.omega1) / base, -wronskian(q, qp, lam, mp.omega1) / base

    plus, minus, residual = [], [], 0.0
    for lam in grid:
        a, b = coefficients(lam)
        plus.append(a)
        minus.append(b)
        for shift in (1j * mp.omega1, 1j * mp.omega2):
            a_s, b_s = coefficients(lam + shift)
            scale = max(abs(a), abs(b), 1.0)
            residual = max(residual, abs(a_s - a) / scale, abs(b_s - b) / scale)

    return Decomposition(grid, np.array(plus), np.array(minus), residual)


#############
# RESIDUALS #
#############

def baxter_check(qp: QSolution, qm: QSolution, tau: RootSet, tau_dual: RootSet,
                 probe: Sequence[complex]) -> float:
    """
    Worst relative residual of both Baxter equations, for q₊ and q₋, over the probe points.
    """
    worst = 0.0
    for lam in probe:
        for u in (qp, qm):
            worst = max(worst,
                        baxter_relative_residual(u, tau, qp.spec, lam),
                        baxter_relative_residual(u, tau_dual, qp.spec, lam, dual=True))
    return worst
