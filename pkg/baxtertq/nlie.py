from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy.linalg

from baxtertq.errors import ContourPinchError, DomainError, NonConvergenceError, PoleProximityError
from baxtertq.hill import (HillFactorization, KVariant, TruncationPolicy, hill_det, k_determinant)
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet, exp_zeta, t_eval
from baxtertq.specfun import ModularPair

logger = logging.getLogger(__name__)

#############
# CONSTANTS #
#############

V_FLOOR = 1e-8
MAX_ARG_JUMP = np.pi / 2
QUADRATURE_DIGITS = 30.0
MIN_SEPARATION = 0.05
MAX_CONTINUATION_DEPTH = 64
DIVERGENCE_WINDOW = 5
CONTRACTION_FLOOR = 100.0
NUDGE_CANDIDATES = tuple(round(-0.4 + 0.05 * k, 2) for k in range(17))

GRID_COLUMNS = ["y_j", "Re λ_j", "Im λ_j", "Re Y", "Im Y", "Re logV", "Im logV"]

ArrayLike = Union[complex, np.ndarray]


class Orientation(Enum):
    """
    Orientation convention of the integration contour: the ℬ₊ end of the strip lies to its left.
    """
    PLUS_LEFT = "plus_left"


@dataclass(eq=True, frozen=True)
class SolverConfig():
    """
    Fixed-point settings of the integral equation.
    """

    tol: float = 1e-13
    max_iter: int = 200
    damping: float = 1.0
    anderson: bool = False
    anderson_depth: int = 5

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise DomainError(f"Solver tol must be positive. The current value is {self.tol}")

        if self.max_iter < 1:
            raise DomainError(f"max_iter must be at least 1. The current value is {self.max_iter}")

        if not 0 < self.damping <= 1:
            raise DomainError(f"damping must lie in (0, 1]. The current value is {self.damping}")


###########
# CONTOUR #
###########

class Contour():
    """
    A straight segment across one period strip, sampled by the periodic trapezoid rule.

    The direct contour runs from ix0ω₁ − iω₂/2 to ix0ω₁ + iω₂/2. The dual one runs from iy0ω₂ + iω₁/2 to
    iy0ω₂ − iω₁/2. In both cases ℬ₊ (x → +∞, resp. y → +∞) is on the left.
    """

    mp: ModularPair
    x0: float
    n_nodes: int
    dual: bool
    params: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    orientation: Orientation

    def __init__(self, mp: ModularPair, x0: float = 0.0, n_nodes: int = 256, dual: bool = False) -> None:
        self.mp = mp
        self.x0 = float(x0)
        self.n_nodes = int(n_nodes)
        self.dual = dual
        self.orientation = Orientation.PLUS_LEFT

        self.validate_nodes()

        self.params = -0.5 + np.arange(self.n_nodes) / self.n_nodes
        if dual:
            self.nodes = 1j * self.x0 * mp.omega2 - 1j * self.params * mp.omega1
            weight = -1j * mp.omega1 / self.n_nodes
        else:
            self.nodes = 1j * self.x0 * mp.omega1 + 1j * self.params * mp.omega2
            weight = 1j * mp.omega2 / self.n_nodes
        self.weights = np.full(self.n_nodes, weight, dtype=complex)

    def validate_nodes(self) -> None:
        if self.n_nodes < 4:
            raise DomainError(f"A contour needs at least 4 nodes. The current value is {self.n_nodes}")

    @property
    def omega_s(self) -> complex:
        """
        The shift period of the equation living on this contour.
        """
        return self.mp.omega2 if self.dual else self.mp.omega1

    @property
    def omega_p(self) -> complex:
        """
        The strip period along which the contour runs.
        """
        return self.mp.omega1 if self.dual else self.mp.omega2

    def offset(self, lam: complex) -> float:
        """
        The strip coordinate of ``lam`` (x for the direct contour, y for the dual) relative to the contour.
        """
        m, n = self.mp.coordinates(lam)
        return (n if self.dual else m) - self.x0

    def point(self, offset: float, along: float = 0.0) -> complex:
        """
        The point ``offset`` strip units off the contour and ``along`` periods down it.
        """
        return 1j * (self.x0 + offset) * self.omega_s + 1j * along * self.omega_p

    @property
    def line_margin(self) -> float:
        """
        Distance (in strip coordinates) from a kernel singularity line below which the trapezoid rule loses
        more than about 30 e-folds of accuracy.
        """
        return QUADRATURE_DIGITS / (2 * np.pi * self.n_nodes * abs((self.omega_s / self.omega_p).imag))

    @property
    def separation_margin(self) -> float:
        return max(MIN_SEPARATION, self.line_margin)

    def separates(self, delta: RootSet) -> bool:
        """
        True when every δ_k ± iω/2 lies strictly on its own side of the contour.
        """
        limit = 0.5 - self.separation_margin
        return all(abs(self.offset(d)) < limit for d in delta.roots)

    def refined(self, factor: int = 2) -> Contour:
        return Contour(self.mp, self.x0, factor * self.n_nodes, self.dual)

    def to_dict(self) -> dict:
        return {"x0": self.x0, "n_nodes": self.n_nodes, "dual": self.dual,
                "orientation": self.orientation.value}


class GridFunction():
    """
    Samples of a strip-periodic function on the nodes of a contour.
    """

    contour: Contour
    values: np.ndarray

    def __init__(self, contour: Contour, values: np.ndarray) -> None:
        self.contour = contour
        self.values = np.asarray(values, dtype=complex)

        if self.values.shape != (contour.n_nodes,):
            raise DomainError(f"Expected {contour.n_nodes} samples, got {self.values.shape}")

        if not np.all(np.isfinite(self.values)):
            raise DomainError("Grid function samples must be finite")

    def sup_distance(self, other: GridFunction) -> float:
        return float(np.max(np.abs(self.values - other.values)))


def admissible_contour(delta: RootSet, mp: ModularPair, x0: float = 0.0, n_nodes: int = 256,
                       dual: bool = False) -> Contour:
    """
    Returns the contour at ``x0`` if it separates ``delta``, otherwise the first admissible position of the
    scan over [−0.4, 0.4].
    """
    for candidate in (x0,) + NUDGE_CANDIDATES:
        contour = Contour(mp, candidate, n_nodes, dual)
        if contour.separates(delta):
            if candidate != x0:
                logger.info(f"Moved the {'dual ' if dual else ''}contour from {x0} to {candidate}")
            return contour

    raise ContourPinchError(
        f"No straight {'dual ' if dual else ''}contour separates the roots {list(delta.roots)}")


##########
# KERNEL #
##########

def _coth(z: ArrayLike) -> ArrayLike:
    """
    coth written through e^{−2|Re z|}, which stays finite for large arguments.
    """
    z = np.asarray(z, dtype=complex)
    sign = np.where(z.real >= 0, 1.0, -1.0)
    e = np.exp(-2 * sign * z)
    result = sign * (1 + e) / (1 - e)
    return complex(result) if result.ndim == 0 else result


def _kernel(lam: ArrayLike, omega_s: complex, omega_p: complex) -> ArrayLike:
    return (_coth(np.pi * (lam - 1j * omega_s) / omega_p)
            - _coth(np.pi * (lam + 1j * omega_s) / omega_p)) / (2j * omega_p)


def _check_kernel_poles(lam: complex, omega_s: complex, mp: ModularPair, dual: bool) -> None:
    # Poles sit at ±iω_s + iω_pℤ only
    for sign in (1, -1):
        dist, indices = mp.nearest_lattice_point(lam - sign * 1j * omega_s)
        if dist < mp.pole_eps and indices[1 if dual else 0] == 0:
            raise PoleProximityError(f"Kernel evaluated {dist:.3e} away from its pole at ±iω", indices)


def kernel_K(lam: ArrayLike, mp: ModularPair) -> ArrayLike:
    """
    K(λ) = [coth(π(λ − iω₁)/ω₂) − coth(π(λ + iω₁)/ω₂)]/(2iω₂).
    """
    if np.ndim(lam) == 0:
        _check_kernel_poles(complex(lam), mp.omega1, mp, False)
    return _kernel(lam, mp.omega1, mp.omega2)


def kernel_K_dual(lam: ArrayLike, mp: ModularPair) -> ArrayLike:
    if np.ndim(lam) == 0:
        _check_kernel_poles(complex(lam), mp.omega2, mp, True)
    return _kernel(lam, mp.omega2, mp.omega1)


def kernel_matrix(contour: Contour) -> np.ndarray:
    """
    The quadrature matrix M_ij = K(λ_i − λ_j)·w_j of the fixed-point map.
    """
    diff = contour.nodes[:, None] - contour.nodes[None, :]
    return _kernel(diff, contour.omega_s, contour.omega_p) * contour.weights[None, :]


#################
# LOG BRANCHING #
#################

def winding_number(values: Sequence[complex]) -> int:
    """
    Number of turns of ``values`` around 0 along the closed periodic node sequence.
    """
    values = np.asarray(values, dtype=complex)
    steps = np.angle(np.roll(values, -1) / values)
    return int(round(float(np.sum(steps)) / (2 * np.pi)))


def continuous_log(values: np.ndarray) -> np.ndarray:
    """
    A log of ``values`` that is continuous along the node order. The branch is fixed by the principal value
    at the node where V is closest to 1, and every step is unwrapped from there.
    """
    values = np.asarray(values, dtype=complex)
    if np.min(np.abs(values)) < V_FLOOR:
        j = int(np.argmin(np.abs(values)))
        raise ContourPinchError(
            f"V nearly vanishes on the contour (|V|={abs(values[j]):.3e} at node {j}); move the contour")

    n = len(values)
    ref = int(np.argmin(np.abs(values - 1)))
    order = (ref + np.arange(n)) % n

    steps = np.angle(values[order][1:] / values[order][:-1])
    if steps.size and np.max(np.abs(steps)) > MAX_ARG_JUMP:
        raise ContourPinchError(
            f"arg V jumps by {np.max(np.abs(steps)):.3f} between neighbouring nodes; refine the contour")

    if winding_number(values) != 0:
        raise ContourPinchError("log V winds around the contour; a zero of V crossed it")

    args = np.angle(values[ref]) + np.concatenate(([0.0], np.cumsum(steps)))
    logs = np.empty(n, dtype=complex)
    logs[order] = np.log(np.abs(values[order])) + 1j * args
    return logs


########################
# FIXED-POINT SOLUTION #
########################

class NlieSolution():
    """
    A solution of the integral equation for Y on one contour, together with everything needed to continue
    Y, V, v↑ and v↓ off the contour.
    """

    Y: GridFunction
    logV: GridFunction
    iterations: int
    contraction_estimate: float
    converged: bool
    delta: RootSet
    spec: ModelSpec
    contour: Contour
    updates: tuple[float, ...]

    def __init__(self, Y: GridFunction, logV: GridFunction, iterations: int, contraction_estimate: float,
                 converged: bool, delta: RootSet, spec: ModelSpec, updates: Sequence[float] = ()) -> None:
        self.Y = Y
        self.logV = logV
        self.iterations = iterations
        self.contraction_estimate = contraction_estimate
        self.converged = converged
        self.delta = delta
        self.spec = spec
        self.contour = Y.contour
        self.updates = tuple(updates)

    @property
    def dual(self) -> bool:
        return self.contour.dual

    @property
    def weighted_log(self) -> np.ndarray:
        return self.logV.values * self.contour.weights

    def integral_log(self) -> complex:
        """
        ∫_C log V dτ by the trapezoid rule.
        """
        return complex(np.sum(self.weighted_log))

    def coupling(self, power: float = 1.0) -> complex:
        return 0j if self.spec.rho_zero else complex(self.spec.rho_power(power * self.contour.omega_s))

    def to_frame(self) -> pd.DataFrame:
        nodes = self.contour.nodes
        return pd.DataFrame({
            "y_j": self.contour.params,
            "Re λ_j": nodes.real,
            "Im λ_j": nodes.imag,
            "Re Y": self.Y.values.real,
            "Im Y": self.Y.values.imag,
            "Re logV": self.logV.values.real,
            "Im logV": self.logV.values.imag,
        }, columns=GRID_COLUMNS)

    def diagnostics(self) -> dict:
        return {
            "contour": self.contour.to_dict(),
            "iterations": self.iterations,
            "contraction_estimate": self.contraction_estimate,
            "converged": self.converged,
            "delta": list(self.delta.roots),
            "integral_log": self.integral_log(),
        }


def _check_delta_family(delta: RootSet, dual: bool) -> None:
    if not delta.family.is_delta or delta.is_dual != dual:
        expected = RootFamily.DELTA_DUAL if dual else RootFamily.DELTA
        raise DomainError(f"Expected a {expected.value} root set, got {delta.family.value}")


def _node_denominators(delta: RootSet, spec: ModelSpec, contour: Contour) -> np.ndarray:
    half = 0.5j * contour.omega_s
    return t_eval(contour.nodes - half, delta, spec) * t_eval(contour.nodes + half, delta, spec)


def V_of_Y(Y: GridFunction, delta: RootSet, spec: ModelSpec) -> tuple[GridFunction, GridFunction]:
    """
    V = 1 + ρ^{ω}e^{Y}/(t_δ(λ − iω/2)t_δ(λ + iω/2)) on the nodes, and its continuous logarithm.
    """
    contour = Y.contour
    _check_delta_family(delta, contour.dual)

    coupling = 0j if spec.rho_zero else spec.rho_power(contour.omega_s)
    values = 1 + coupling * np.exp(Y.values) / _node_denominators(delta, spec, contour)
    return GridFunction(contour, values), GridFunction(contour, continuous_log(values))


def _anderson_step(history_f: list[np.ndarray], history_g: list[np.ndarray]) -> np.ndarray:
    """
    Anderson mixing over the stored residuals f = g(Y) − Y and images g(Y).
    """
    if len(history_f) < 2:
        return history_g[-1]

    dF = np.stack([history_f[k + 1] - history_f[k] for k in range(len(history_f) - 1)], axis=1)
    dG = np.stack([history_g[k + 1] - history_g[k] for k in range(len(history_g) - 1)], axis=1)
    gamma, *_ = scipy.linalg.lstsq(dF, history_f[-1])
    return history_g[-1] - dG @ gamma


def solve_Y(delta: RootSet, spec: ModelSpec, contour: Contour,
            cfg: SolverConfig = SolverConfig()) -> NlieSolution:
    """
    Solves Y(λ) = ∫_C K(λ − τ) log V(τ) dτ by fixed-point iteration from Y ≡ 0.
    """
    _check_delta_family(delta, contour.dual)
    if not contour.separates(delta):
        raise ContourPinchError(f"The contour at {contour.x0} does not separate {list(delta.roots)}")

    matrix = kernel_matrix(contour)
    denominators = _node_denominators(delta, spec, contour)
    coupling = 0j if spec.rho_zero else spec.rho_power(contour.omega_s)

    def image(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        logs = continuous_log(1 + coupling * np.exp(Y) / denominators)
        return matrix @ logs, logs

    Y = np.zeros(contour.n_nodes, dtype=complex)
    history_f: list[np.ndarray] = []
    history_g: list[np.ndarray] = []
    updates: list[float] = []
    ratios: list[float] = []
    growing = 0
    converged = False

    for iteration in range(1, cfg.max_iter + 1):
        g, _ = image(Y)

        if cfg.anderson:
            history_f.append(g - Y)
            history_g.append(g)
            del history_f[:-cfg.anderson_depth - 1], history_g[:-cfg.anderson_depth - 1]
            Y_new = _anderson_step(history_f, history_g)
        else:
            Y_new = (1 - cfg.damping) * Y + cfg.damping * g

        update = float(np.max(np.abs(Y_new - Y)))
        if updates and updates[-1] > CONTRACTION_FLOOR * cfg.tol:
            ratios.append(update / updates[-1])

        growing = growing + 1 if updates and update > updates[-1] else 0
        updates.append(update)
        Y = Y_new

        logger.debug(f"solve_Y iteration {iteration}: update {update:.3e}")

        if update < cfg.tol:
            converged = True
            break

        if growing >= DIVERGENCE_WINDOW:
            raise NonConvergenceError(
                f"The fixed-point iteration diverges (update grew {DIVERGENCE_WINDOW} times in a row, "
                f"last {update:.3e})",
                iterations=iteration,
                achieved=update)

    if not converged:
        raise NonConvergenceError(
            f"The fixed-point iteration did not reach tol={cfg.tol} in {cfg.max_iter} iterations",
            iterations=cfg.max_iter,
            achieved=updates[-1])

    contraction = max(ratios) if ratios else 0.0
    if contraction >= 1:
        logger.warning(f"Measured contraction ratio {contraction:.3f} is not below 1")

    Y_grid = GridFunction(contour, Y)
    _, logV = V_of_Y(Y_grid, delta, spec)
    logger.info(f"Solved the {'dual ' if contour.dual else ''}integral equation in {iteration} iterations "
                f"(contraction {contraction:.3e})")

    return NlieSolution(Y_grid, logV, iteration, contraction, converged, delta, spec, updates)


def solve_Y_dual(delta_dual: RootSet, spec: ModelSpec, contour: Contour,
                 cfg: SolverConfig = SolverConfig()) -> NlieSolution:
    if not contour.dual:
        raise DomainError("solve_Y_dual needs a dual contour")
    return solve_Y(delta_dual, spec, contour, cfg)


def refinement_change(sol: NlieSolution, cfg: SolverConfig = SolverConfig()) -> float:
    """
    Sup-norm change of Y on the original nodes when the node count is doubled.
    """
    fine = solve_Y(sol.delta, sol.spec, sol.contour.refined(2), cfg)
    return GridFunction(sol.contour, fine.Y.values[::2]).sup_distance(sol.Y)


##########################
# OFF-CONTOUR EVALUATION #
##########################

def guard_line(sol: NlieSolution, offset: float, line: float, what: str) -> None:
    if abs(offset - line) < sol.contour.line_margin:
        raise PoleProximityError(
            f"{what} evaluated {abs(offset - line):.3e} strip units away from its singular line {line:+.1f}")


def coth_sum(sol: NlieSolution, lam: complex, shift: complex) -> complex:
    """
    Σ_j w_j (coth(π(λ − τ_j + shift)/ω_p) + 1) log V_j.
    """
    contour = sol.contour
    args = np.pi * (lam - contour.nodes + shift) / contour.omega_p
    return complex(np.sum((_coth(args) + 1) * sol.weighted_log))


def _j_integral(sol: NlieSolution, lam: complex) -> complex:
    contour = sol.contour
    return complex(np.sum(_kernel(lam - contour.nodes, contour.omega_s, contour.omega_p) * sol.weighted_log))


def y_continued(lam: complex, sol: NlieSolution, depth: int = 0) -> complex:
    """
    e^{Y(λ)} anywhere off the singular lines. Inside the strip |a(λ) − a0| < 1 the integral represents Y
    directly; further out it picks up a factor V(λ ∓ iω) for every crossed strip.
    """
    if depth > MAX_CONTINUATION_DEPTH:
        raise NonConvergenceError(f"Continuation depth cap {MAX_CONTINUATION_DEPTH} reached at {lam}")

    offset = sol.contour.offset(lam)
    guard_line(sol, abs(offset), 1.0, "Y")
    value = np.exp(_j_integral(sol, lam))

    if abs(offset) < 1:
        return complex(value)

    omega = sol.contour.omega_s
    if offset >= 1:
        return complex(value * v_continued(lam - 1j * omega, sol, depth + 1))
    return complex(value * v_continued(lam + 1j * omega, sol, depth + 1))


def v_continued(lam: complex, sol: NlieSolution, depth: int = 0) -> complex:
    """
    V(λ) = 1 + ρ^{ω}e^{Y(λ)}/(t_δ(λ − iω/2)t_δ(λ + iω/2)) at any point.
    """
    coupling = sol.coupling()
    if coupling == 0:
        return 1 + 0j

    half = 0.5j * sol.contour.omega_s
    denominator = t_eval(lam - half, sol.delta, sol.spec) * t_eval(lam + half, sol.delta, sol.spec)
    return 1 + coupling * y_continued(lam, sol, depth) / denominator


def v_up(lam: complex, sol: NlieSolution) -> complex:
    """
    v↑(λ) = exp{−Σ w (coth(π(λ − τ + iω/2)/ω_p) + 1) log V/(2iω_p)}, times V(λ + iω/2) once λ has moved past
    the singular line a(λ) = a0 − 1/2.
    """
    offset = sol.contour.offset(lam)
    guard_line(sol, offset, -0.5, "v_up")

    half = 0.5j * sol.contour.omega_s
    value = np.exp(-coth_sum(sol, lam, half) / (2j * sol.contour.omega_p))
    if offset + 0.5 > 0:
        return complex(value)
    return complex(value * v_continued(lam + half, sol))


def v_down_shift(lam: complex, sol: NlieSolution) -> complex:
    """
    v↓(λ − iω) = exp{Σ w (coth(π(λ − τ − iω/2)/ω_p) + 1) log V/(2iω_p)}, times V(λ − iω/2) beyond the line
    a(λ) = a0 + 1/2.
    """
    offset = sol.contour.offset(lam)
    guard_line(sol, offset, 0.5, "v_down")

    half = 0.5j * sol.contour.omega_s
    value = np.exp(coth_sum(sol, lam, -half) / (2j * sol.contour.omega_p))
    if offset - 0.5 > 0:
        return complex(value * v_continued(lam - half, sol))
    return complex(value)


def v_down(lam: complex, sol: NlieSolution) -> complex:
    return v_down_shift(lam + 1j * sol.contour.omega_s, sol)


def v_wronskian(lam: complex, sol: NlieSolution) -> complex:
    """
    v↑(λ)v↓(λ) − 1 − ρ^{ω}v↑(λ + iω)v↓(λ − iω)/(t_δ(λ)t_δ(λ + iω)), which vanishes identically.
    """
    shift = 1j * sol.contour.omega_s
    product = v_up(lam, sol) * v_down(lam, sol)
    coupling = sol.coupling()
    if coupling == 0:
        return complex(product - 1)

    cross = coupling * v_up(lam + shift, sol) * v_down_shift(lam, sol) / (
        t_eval(lam, sol.delta, sol.spec) * t_eval(lam + shift, sol.delta, sol.spec))
    return complex(product - 1 - cross)


def v_form_t(lam: complex, sol: NlieSolution) -> complex:
    """
    The polynomial rebuilt from the auxiliary functions:
    t_δ(λ)v↑(λ − iω)v↓(λ) − ρ^{2ω}v↑(λ + iω)v↓(λ − 2iω)/(t_δ(λ − iω)t_δ(λ)t_δ(λ + iω)).
    """
    shift = 1j * sol.contour.omega_s
    t_mid = t_eval(lam, sol.delta, sol.spec)

    first = t_mid * v_up(lam - shift, sol) * v_down_shift(lam + shift, sol)
    coupling = sol.coupling(2.0)
    if coupling == 0:
        return complex(first)

    second = coupling * v_up(lam + shift, sol) * v_down_shift(lam - shift, sol) / (
        t_eval(lam - shift, sol.delta, sol.spec) * t_mid * t_eval(lam + shift, sol.delta, sol.spec))
    return complex(first - second)


def plateau(spec: ModelSpec, dual: bool = False) -> complex:
    """
    The far-left limit of V: 1/(1 − ρ^{ω}e^{2ωp0}) for Toda₂, 1 for q-Toda.
    """
    if spec.kind is ModelKind.QTODA or spec.rho_zero:
        return 1 + 0j
    omega = spec.period(dual)
    return 1 / (1 - spec.rho_power(omega) * np.exp(2 * omega * spec.p0))


################
# DETERMINANTS #
################

def y_from_determinants(lam: complex, tau: RootSet, delta: RootSet, spec: ModelSpec,
                        pol: TruncationPolicy = TruncationPolicy()) -> complex:
    """
    e^{Y(λ)} from the infinite determinants:
    e^{ωζ}·K₊(λ + iω/2)K₋(λ − iω/2)/ℋ(λ − iω/2)·∏_± t_δ(λ ± iω/2)/t_τ(λ ± iω/2).
    """
    dual = tau.is_dual
    if delta.is_dual != dual:
        raise DomainError("tau and delta must live on the same side")

    if spec.rho_zero:
        return 1 + 0j

    half = 0.5j * spec.period(dual)
    plus = KVariant.PLUS_DUAL if dual else KVariant.PLUS
    minus = KVariant.MINUS_DUAL if dual else KVariant.MINUS

    k_plus_value = k_determinant(lam + half, tau, spec, plus, pol).value
    k_minus_value = k_determinant(lam - half, tau, spec, minus, pol).value
    hill_value = hill_det(lam - half, tau, spec, pol)

    ratio = 1 + 0j
    for shift in (half, -half):
        ratio *= t_eval(lam + shift, delta, spec) / t_eval(lam + shift, tau, spec)

    return complex(exp_zeta(tau, spec) * k_plus_value * k_minus_value / hill_value * ratio)


def solve_from_factorization(tau: RootSet, fact: HillFactorization, spec: ModelSpec, x0: float = 0.0,
                             n_nodes: int = 256, cfg: SolverConfig = SolverConfig()) -> NlieSolution:
    """
    Picks an admissible contour for the Hill zeros of ``tau`` and solves the matching integral equation.
    """
    contour = admissible_contour(fact.delta, spec.mp, x0, n_nodes, tau.is_dual)
    return solve_Y(fact.delta, spec, contour, cfg)


def winding_survey(delta: RootSet, spec: ModelSpec, contour: Contour, cfg: SolverConfig = SolverConfig(),
                   rungs: Sequence[float] = (-6.0, -4.0, -2.0, 0.0)) -> list[dict]:
    """
    Solves at ρ·e^{s} for every s in ``rungs`` and records the winding of V on the contour. Constant zero
    winding along the ladder is the numerical witness that no zero of V crossed the contour.
    """
    survey = []
    for s in rungs:
        rung_spec = spec.with_log_rho(spec.L_rho + s)
        entry: dict = {"log_rho_shift": s}
        try:
            sol = solve_Y(delta, rung_spec, contour, cfg)
            entry.update(winding=winding_number(np.exp(sol.logV.values)),
                         contraction=sol.contraction_estimate)
        except ContourPinchError as e:
            entry.update(winding=None, error=str(e))
        survey.append(entry)
    return survey


def solution_for(delta_roots: Sequence[complex], spec: ModelSpec, dual: bool, x0: float = 0.0,
                 n_nodes: int = 256, cfg: SolverConfig = SolverConfig(),
                 contour: Optional[Contour] = None) -> NlieSolution:
    """
    Solves the direct or dual equation for a plain list of δ roots.
    """
    family = RootFamily.DELTA_DUAL if dual else RootFamily.DELTA
    delta = RootSet(delta_roots, family)
    if contour is None:
        contour = admissible_contour(delta, spec.mp, x0, n_nodes, dual)
    return solve_Y(delta, spec, contour, cfg)
