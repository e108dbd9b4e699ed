from __future__ import annotations

from typing import Optional

import numpy as np

from baxtertq import baxter, bethe, hill, nlie, probes, spectrum
from baxtertq.model import ModelKind, constraint_residual
from baxtertq.specfun import double_sine, double_sine_alt, modular_B, quantum_dilog, theta, theta_dual
from checks._base import CheckContext, CheckOutcome, invariant, within

PROBE_COUNT = 20
PROBE_SEED = 7
ORACLE_NODES = 8
REAL_ROOT_TOL = 1e-12
REAL_PROBES = (0.05, 0.37, -0.6)


def _relative(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


def _cell_probes(ctx: CheckContext) -> list[complex]:
    mp = ctx.spec.mp
    return [probes.from_offsets(x, y, mp) for x, y in probes.random_offsets(PROBE_COUNT, PROBE_SEED)]


def _conjugate_periods(mp) -> bool:
    return abs(mp.omega1 - mp.omega2.conjugate()) <= 1e-14 * mp.min_abs


def _reality_skip(spec) -> Optional[str]:
    """
    Why the ω₁ = ω̄₂, real κ identities do not apply to ``spec``, or None when they do.
    """
    if not _conjugate_periods(spec.mp):
        return "periods are not complex conjugates"
    if spec.rho_zero:
        return "the identities are trivial in the rho = 0 limit"
    if spec.kappa.imag != 0 or spec.p0.imag != 0:
        return "kappa and p0 must be real"
    return None


def _is_real(roots) -> bool:
    return all(abs(r.imag) <= REAL_ROOT_TOL * max(1.0, abs(r)) for r in roots)


def _oracle_nodes(sol, roots) -> list[int]:
    """
    Indices of evenly spaced contour nodes that keep clear of the root lattices.
    """
    contour = sol.contour
    step = max(1, contour.n_nodes // ORACLE_NODES)
    mp = sol.spec.mp
    return [j for j in range(0, contour.n_nodes, step) if probes.is_clear(contour.nodes[j], roots, mp)]


###########
# SPECFUN #
###########

@invariant("theta_difference", "specfun", requires=("spec",))
def theta_difference(ctx: CheckContext) -> CheckOutcome:
    mp, cfg = ctx.spec.mp, ctx.theta_cfg
    worst = 0.0
    for lam in _cell_probes(ctx):
        value = theta(lam, mp, cfg)
        shifted = theta(lam - 1j * mp.omega1, mp, cfg)
        worst = max(worst, abs(shifted + np.exp(2 * np.pi * lam / mp.omega2) * value) / (1 + abs(value)))
    return within(worst, 1e-10)


@invariant("theta_reflection", "specfun", requires=("spec",))
def theta_reflection(ctx: CheckContext) -> CheckOutcome:
    mp, cfg = ctx.spec.mp, ctx.theta_cfg
    worst = max(_relative(theta(-lam - 1j * mp.omega1, mp, cfg), theta(lam, mp, cfg))
                for lam in _cell_probes(ctx))
    return within(worst, 1e-9)


@invariant("theta_modular", "specfun", requires=("spec",))
def theta_modular(ctx: CheckContext) -> CheckOutcome:
    mp, cfg = ctx.spec.mp, ctx.theta_cfg
    worst = max(_relative(theta(lam, mp, cfg), theta_dual(lam, mp, cfg) * np.exp(1j * modular_B(lam, mp)))
                for lam in _cell_probes(ctx))
    return within(worst, 1e-9)


@invariant("double_sine_products", "specfun", requires=("spec",))
def double_sine_products(ctx: CheckContext) -> CheckOutcome:
    mp, cfg = ctx.spec.mp, ctx.theta_cfg
    worst = max(_relative(double_sine(lam, mp, cfg), double_sine_alt(lam, mp, cfg))
                for lam in _cell_probes(ctx))
    return within(worst, 1e-9)


@invariant("double_sine_reflection", "specfun", requires=("spec",))
def double_sine_reflection(ctx: CheckContext) -> CheckOutcome:
    mp, cfg = ctx.spec.mp, ctx.theta_cfg
    worst = 0.0
    for lam in _cell_probes(ctx):
        product = double_sine(lam, mp, cfg) * double_sine(-lam - 1j * mp.Omega, mp, cfg)
        worst = max(worst, _relative(product, np.exp(1j * modular_B(lam, mp))))
    return within(worst, 1e-9)


@invariant("dilog_reflection", "specfun", requires=("spec",))
def dilog_reflection(ctx: CheckContext) -> CheckOutcome:
    mp, cfg = ctx.spec.mp, ctx.theta_cfg
    worst = max(abs(quantum_dilog(z, mp, cfg) * quantum_dilog(-z, mp, cfg) - 1) for z in _cell_probes(ctx))
    return within(worst, 1e-9)


@invariant("dilog_conjugation", "specfun", requires=("spec",))
def dilog_conjugation(ctx: CheckContext) -> CheckOutcome:
    mp, cfg = ctx.spec.mp, ctx.theta_cfg
    if not _conjugate_periods(mp):
        return CheckOutcome.skip("periods are not complex conjugates")

    worst = max(_relative(np.conj(quantum_dilog(z, mp, cfg)), quantum_dilog(-np.conj(z), mp, cfg))
                for z in _cell_probes(ctx))
    return within(worst, 1e-8)


########
# HILL #
########

@invariant("hill_factorization", "hill", requires=("fact", "fact_dual"))
def hill_factorization(ctx: CheckContext) -> CheckOutcome:
    return within(max(ctx.fact.residual, ctx.fact_dual.residual), 1e-8)


@invariant("delta_sum", "hill", requires=("fact", "fact_dual"))
def delta_sum(ctx: CheckContext) -> CheckOutcome:
    return within(max(ctx.fact.constraint_residual, ctx.fact_dual.constraint_residual), 1e-10)


@invariant("determinant_slope", "hill", requires=("tau",))
def determinant_slope(ctx: CheckContext) -> CheckOutcome:
    spec = ctx.spec
    if spec.rho_zero or spec.kind is not ModelKind.QTODA:
        return CheckOutcome.skip("the slope bound is only sharp for q-Toda at nonzero coupling")

    origin = complex(np.mean(ctx.tau.roots))
    lam = probes.place(0.25, 0.25, [r - origin for r in ctx.tau.roots], spec.mp) + origin
    measured = hill.convergence_slope(lam, ctx.tau, spec)
    expected = hill.expected_slope(spec)
    return within(abs(measured / expected - 1), 0.2, f"measured {measured:.4f}, bound {expected:.4f}")


@invariant("hill_conjugation", "hill", requires=("tau", "tau_dual"))
def hill_conjugation(ctx: CheckContext) -> CheckOutcome:
    """
    With ω₁ = ω̄₂, real κ and τ̃ = τ̄: conj K±(λ) = K̃∓(λ̄) and conj ℋ(λ) = ℋ̃(λ̄ − iω₂).
    """
    spec, tau, tau_dual = ctx.spec, ctx.tau, ctx.tau_dual
    reason = _reality_skip(spec)
    if reason is None and np.max(np.abs(np.conj(tau.as_array()) - tau_dual.as_array())) > REAL_ROOT_TOL:
        reason = "the dual seed is not the conjugate of tau"
    if reason is not None:
        return CheckOutcome.skip(reason)

    mp, pol = spec.mp, ctx.pol
    worst = 0.0
    for lam in _cell_probes(ctx):
        if not probes.is_clear(lam, tau.roots, mp, shifts=(0, 1j * mp.omega1)):
            continue
        bar = complex(np.conj(lam))
        worst = max(worst,
                    _relative(np.conj(hill.k_plus(lam, tau, spec, pol).value),
                              hill.k_minus_dual(bar, tau_dual, spec, pol).value),
                    _relative(np.conj(hill.k_minus(lam, tau, spec, pol).value),
                              hill.k_plus_dual(bar, tau_dual, spec, pol).value),
                    _relative(np.conj(hill.hill_det(lam, tau, spec, pol)),
                              hill.hill_det_dual(bar - 1j * mp.omega2, tau_dual, spec, pol)))
    return within(worst, 1e-8)


########
# NLIE #
########

@invariant("nlie_converged", "nlie", requires=("sol", "sol_dual"))
def nlie_converged(ctx: CheckContext) -> CheckOutcome:
    passed = ctx.sol.converged and ctx.sol_dual.converged
    iterations = max(ctx.sol.iterations, ctx.sol_dual.iterations)
    return CheckOutcome(passed, float(iterations), "iterations")


@invariant("nlie_contraction", "nlie", requires=("sol", "sol_dual"))
def nlie_contraction(ctx: CheckContext) -> CheckOutcome:
    return within(max(ctx.sol.contraction_estimate, ctx.sol_dual.contraction_estimate), 0.5)


@invariant("y_oracle", "nlie", requires=("sol", "sol_dual", "tau", "tau_dual"))
def y_oracle(ctx: CheckContext) -> CheckOutcome:
    """
    e^Y from the fixed point against e^Y rebuilt from the infinite determinants, on both contours.
    """
    worst = 0.0
    for sol, tau in ((ctx.sol, ctx.tau), (ctx.sol_dual, ctx.tau_dual)):
        roots = list(tau.roots) + list(sol.delta.roots)
        for j in _oracle_nodes(sol, roots):
            expected = nlie.y_from_determinants(sol.contour.nodes[j], tau, sol.delta, ctx.spec, ctx.pol)
            worst = max(worst, _relative(np.exp(sol.Y.values[j]), expected))
    return within(worst, 1e-7)


@invariant("k_factorization", "nlie", requires=("sol", "tau", "fact"))
def k_factorization(ctx: CheckContext) -> CheckOutcome:
    """
    K₊(λ) = u₊(λ)v↑(λ) and K₋(λ) = u₋(λ − iω₁)v↓(λ − iω₁) on the direct contour.
    """
    spec, sol, tau, fact = ctx.spec, ctx.sol, ctx.tau, ctx.fact
    shift = 1j * spec.mp.omega1
    roots = list(tau.roots) + list(fact.delta.roots)

    worst = 0.0
    for j in _oracle_nodes(sol, roots):
        lam = sol.contour.nodes[j]
        k_plus = hill.k_plus(lam, tau, spec, ctx.pol).value
        k_minus = hill.k_minus(lam, tau, spec, ctx.pol).value
        plus = hill.u_plus(lam, tau, fact, spec, ctx.theta_cfg) * nlie.v_up(lam, sol)
        minus = hill.u_minus(lam - shift, tau, fact, spec, ctx.theta_cfg) * nlie.v_down_shift(lam, sol)
        worst = max(worst, _relative(k_plus, plus), _relative(k_minus, minus))
    return within(worst, 1e-7)


@invariant("v_wronskian", "nlie", requires=("sol", "sol_dual"))
def v_wronskian(ctx: CheckContext) -> CheckOutcome:
    """
    v↑v↓ = 1 + ρ^{ω}v↑(λ + iω)v↓(λ − iω)/(t_δ(λ)t_δ(λ + iω)) on both sides of each contour.
    """
    worst = 0.0
    for sol in (ctx.sol, ctx.sol_dual):
        omega = sol.contour.omega_s
        for offset in (0.2, -0.3):
            for along in (0.1, 0.35, 0.6, 0.85):
                lam = sol.contour.point(offset, along)
                if not probes.is_clear(lam, sol.delta.roots, ctx.spec.mp, shifts=(0, 1j * omega)):
                    continue
                scale = max(1.0, abs(nlie.v_up(lam, sol) * nlie.v_down(lam, sol)))
                worst = max(worst, abs(nlie.v_wronskian(lam, sol)) / scale)
    return within(worst, 1e-9)


##########
# BAXTER #
##########

def _wronskian_report(ctx: CheckContext) -> baxter.WronskianReport:
    def compute() -> baxter.WronskianReport:
        probe = baxter.check_probes(ctx.qp.sol, ctx.qp.sol_dual)
        return baxter.wronskians(ctx.qp, ctx.qm, probe)
    return ctx.cached("wronskians", compute)


def _fits(ctx: CheckContext) -> tuple[baxter.RootFit, baxter.RootFit]:
    return ctx.cached("fits", lambda: (baxter.fit_from_q(ctx.qp, ctx.qm),
                                        baxter.fit_from_q(ctx.qp, ctx.qm, dual=True)))


@invariant("wronskian_closed_forms", "baxter", requires=("qp", "qm"))
def wronskian_closed_forms(ctx: CheckContext) -> CheckOutcome:
    report = _wronskian_report(ctx)
    worst = max(report.w1_residual, report.w2_residual, report.combination_residual)
    return within(worst, 1e-7)


@invariant("wronskian_periodicity", "baxter", requires=("qp", "qm"))
def wronskian_periodicity(ctx: CheckContext) -> CheckOutcome:
    return within(_wronskian_report(ctx).difference_residual, 1e-8)


@invariant("selfdual_wronskian", "baxter", requires=("qp", "qm"))
def selfdual_wronskian(ctx: CheckContext) -> CheckOutcome:
    return within(_wronskian_report(ctx).selfdual_residual, 1e-8)


@invariant("linear_independence", "baxter", requires=("qp", "qm"))
def linear_independence(ctx: CheckContext) -> CheckOutcome:
    min_w1 = _wronskian_report(ctx).min_w1
    return CheckOutcome(bool(min_w1 > 1e-10), float(min_w1), "smallest |W[q+, q-]| over the probes")


@invariant("fitted_constraints", "baxter", requires=("qp", "qm"))
def fitted_constraints(ctx: CheckContext) -> CheckOutcome:
    direct, dual = _fits(ctx)
    return within(max(direct.constraint_residual, dual.constraint_residual), 1e-8)


@invariant("baxter_residuals", "baxter", requires=("qp", "qm"))
def baxter_residuals(ctx: CheckContext) -> CheckOutcome:
    direct, dual = _fits(ctx)
    probe = baxter.check_probes(ctx.qp.sol, ctx.qp.sol_dual)
    return within(baxter.baxter_check(ctx.qp, ctx.qm, direct.roots, dual.roots, probe), 1e-6)


#########
# BETHE #
#########

def _bethe_pair(ctx: CheckContext) -> tuple[baxter.QSolution, baxter.QSolution]:
    state = ctx.bethe
    return ctx.cached("bethe_pair", lambda: baxter.fundamental_pair(state.sol, state.sol_dual, ctx.theta_cfg))


@invariant("bethe_converged", "bethe", requires=("bethe",))
def bethe_converged(ctx: CheckContext) -> CheckOutcome:
    return CheckOutcome(bool(ctx.bethe.converged), float(ctx.bethe.residual_norm), "residual norm")


@invariant("bethe_idempotence", "bethe", requires=("bethe", "pair_solver"))
def bethe_idempotence(ctx: CheckContext) -> CheckOutcome:
    return within(bethe.reevaluate(ctx.bethe, ctx.pair_solver), 2 * ctx.bethe_tol)


@invariant("bethe_modular", "bethe", requires=("bethe",))
def bethe_modular(ctx: CheckContext) -> CheckOutcome:
    """
    The residuals recomputed with the ω₁ ↔ ω₂ exchanged product form of the double sine. Swapping the
    periods themselves would give a pair with Im(ω₁/ω₂) < 0, where the nome leaves the unit disc and the
    q-products diverge, so the exchange is made inside the product representation instead.
    """
    state = ctx.bethe
    plain = bethe.bethe_residuals(state.sol, state.sol_dual, state.xi, cfg=ctx.theta_cfg)
    swapped = bethe.bethe_residuals(state.sol, state.sol_dual, state.xi, alt=True, cfg=ctx.theta_cfg)
    return within(float(np.max(np.abs(np.asarray(plain) - np.asarray(swapped)))), 1e-8)


@invariant("ratio_identity", "bethe", requires=("bethe",))
def ratio_identity(ctx: CheckContext) -> CheckOutcome:
    state = ctx.bethe
    qp, qm = _bethe_pair(ctx)
    worst = 0.0
    for lam in baxter.check_probes(state.sol, state.sol_dual, count=4):
        closed = bethe.ratio_closed_form(lam, state.sol, state.sol_dual, cfg=ctx.theta_cfg)
        worst = max(worst, _relative(qp(lam) / qm(lam), closed))
    return within(worst, 1e-6)


@invariant("entirety", "bethe", requires=("bethe",))
def entirety(ctx: CheckContext) -> CheckOutcome:
    qp, qm = _bethe_pair(ctx)
    report = bethe.entirety_check(ctx.bethe, qp, qm)
    return within(report.worst_ratio_error, 1e-5, f"worst residue {report.worst_residue:.3e}")


def _real_bethe_skip(ctx: CheckContext) -> Optional[str]:
    reason = _reality_skip(ctx.spec)
    if reason is None and not _is_real(ctx.bethe.delta.roots):
        reason = "the Bethe roots are not real"
    return reason


@invariant("i_sum_imaginary", "bethe", requires=("bethe",))
def i_sum_imaginary(ctx: CheckContext) -> CheckOutcome:
    """
    I_δ(λ) + Ĩ_δ(λ) is purely imaginary on the real axis when ω₁ = ω̄₂ and κ, p0 and δ are real.
    """
    reason = _real_bethe_skip(ctx)
    if reason is not None:
        return CheckOutcome.skip(reason)

    state, scale = ctx.bethe, abs(ctx.spec.mp.omega1)
    worst = 0.0
    for x in REAL_PROBES:
        total = bethe.i_delta(x * scale, state.sol) + bethe.i_delta_dual(x * scale, state.sol_dual)
        worst = max(worst, abs(total.real) / max(1.0, abs(total)))
    return within(worst, 1e-8)


@invariant("lhs_unimodular", "bethe", requires=("bethe",))
def lhs_unimodular(ctx: CheckContext) -> CheckOutcome:
    """
    |LHS_k e^{Ωp0/2}| = 1 for real δ under the same conditions.
    """
    reason = _real_bethe_skip(ctx)
    if reason is not None:
        return CheckOutcome.skip(reason)

    state, spec = ctx.bethe, ctx.spec
    factor = abs(np.exp(spec.mp.Omega * spec.p0 / 2))
    worst = max(abs(abs(bethe.bethe_lhs(state.sol, state.sol_dual, k, cfg=ctx.theta_cfg)) * factor - 1)
                for k in range(len(state.delta.roots)))
    return within(float(worst), 1e-8)


############
# SPECTRUM #
############

def _reconstructions(ctx: CheckContext) -> list[spectrum.SpectrumResult]:
    return [result for result in (ctx.spectrum, ctx.spectrum_bethe) if result is not None]


def _over_routes(ctx: CheckContext, measure, tol: float, detail: str = "") -> CheckOutcome:
    results = _reconstructions(ctx)
    if not results:
        return CheckOutcome.skip("no reconstruction was run")
    return within(max(measure(result) for result in results), tol, detail)


@invariant("spectrum_crosscheck", "spectrum")
def spectrum_crosscheck(ctx: CheckContext) -> CheckOutcome:
    return _over_routes(ctx, lambda result: result.crosscheck_residual, spectrum.CROSSCHECK_TOL)


@invariant("spectrum_constraints", "spectrum")
def spectrum_constraints(ctx: CheckContext) -> CheckOutcome:
    def residual(result: spectrum.SpectrumResult) -> float:
        return max(constraint_residual(result.tau, ctx.spec), constraint_residual(result.tau_dual, ctx.spec))
    return _over_routes(ctx, residual, 1e-8)


@invariant("root_extraction", "spectrum")
def root_extraction(ctx: CheckContext) -> CheckOutcome:
    return _over_routes(ctx, lambda result: max(result.direct.companion_distance, result.dual.companion_distance),
                        1e-8, "Durand-Kerner against companion eigenvalues")


@invariant("spectrum_round_trip", "spectrum", requires=("spectrum", "tau", "tau_dual"))
def spectrum_round_trip(ctx: CheckContext) -> CheckOutcome:
    distance = max(spectrum.exponential_distance(ctx.spectrum.tau, ctx.tau, ctx.spec),
                   spectrum.exponential_distance(ctx.spectrum.tau_dual, ctx.tau_dual, ctx.spec))
    return within(distance, 1e-6)
