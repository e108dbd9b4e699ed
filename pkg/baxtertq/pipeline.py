from __future__ import annotations

import logging
import os
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import pandas as pd
import trio

from baxtertq import baxter, bethe, hill, nlie, spectrum
from baxtertq.display import format_runtime, print_stage, results_table
from baxtertq.errors import BaxterError, ConfigError
from baxtertq.model import RootSet
from baxtertq.serialization import write_csv, write_json
from baxtertq.settings import RunConfig, thread_count
from checks import CheckContext, run_invariants

logger = logging.getLogger(__name__)


class Stage(Enum):
    SPECFUN = "specfun"
    HILL = "hill"
    NLIE = "nlie"
    BAXTER = "baxter"
    BETHE = "bethe"
    SPECTRUM = "spectrum"


# Which stages each command runs, and which invariant modules it reports
COMMANDS: dict[str, tuple[tuple[Stage, ...], Optional[tuple[str, ...]]]] = {
    "specfun-check": ((Stage.SPECFUN,), ("specfun",)),
    "hill": ((Stage.HILL,), ("hill",)),
    "nlie": ((Stage.HILL, Stage.NLIE), ("nlie",)),
    "bethe": ((Stage.BETHE,), ("bethe",)),
    "spectrum": ((Stage.HILL, Stage.NLIE, Stage.BETHE, Stage.SPECTRUM), ("spectrum",)),
    "verify": ((Stage.SPECFUN, Stage.HILL, Stage.NLIE, Stage.BAXTER, Stage.BETHE, Stage.SPECTRUM), None),
    "run": ((Stage.HILL, Stage.NLIE, Stage.BAXTER, Stage.BETHE, Stage.SPECTRUM), None),
}


@dataclass
class RunResult():
    """
    Everything a run produced: the serializable results, the invariant outcomes, stage timings and the
    warnings raised along the way.
    """

    command: str
    results: dict
    outcomes: dict
    timings: dict
    warnings: list = field(default_factory=list)

    @property
    def failures(self) -> list[str]:
        return [name for name, outcome in self.outcomes.items() if outcome.passed is False]

    def exit_code(self, strict: bool = False) -> int:
        if self.failures or (strict and self.warnings):
            return 2
        return 0

    def to_dict(self) -> dict:
        return {
            **self.results,
            "command": self.command,
            "invariants": {name: outcome.to_dict() for name, outcome in self.outcomes.items()},
            "warnings": list(self.warnings),
            "timings": dict(self.timings),
        }


class SpectralMachine():
    """
    Runs one command on one configuration, stage by stage: Hill zeros, the integral equations, the Baxter
    solutions, the Bethe equations and the spectrum, then the invariant battery.
    """

    config: RunConfig
    command: str
    threads: int
    out_dir: str
    ctx: CheckContext
    results: dict[str, Any]
    timings: dict[str, float]
    warnings: list[str]
    epoch_start_time: float

    def __init__(self, config: RunConfig, command: str = "run", threads: Optional[int] = None,
                 out_dir: Optional[str] = None, quiet: bool = False) -> None:
        self.config = config
        self.command = command
        self.threads = thread_count(threads)
        self.out_dir = out_dir if out_dir is not None else config.outputs["directory"]
        self.quiet = quiet

        self.validate_command()

        self.results = {}
        self.timings = {}
        self.warnings = []

    def validate_command(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}. Choose from {sorted(COMMANDS)}", "command")

    ###############
    # CONCURRENCY #
    ###############

    def run_parallel(self, jobs: dict[str, Callable[[], Any]]) -> dict[str, Any]:
        """
        Runs independent jobs on worker threads and returns their results by name. The first failure is
        re-raised as is once every job has finished.
        """
        output_dict: dict[str, Any] = {}
        trio.run(self._async_run_parallel, jobs, output_dict)

        for name in jobs:
            if isinstance(output_dict[name], Exception):
                raise output_dict[name]
        return output_dict

    async def _async_run_parallel(self, jobs: dict[str, Callable[[], Any]], output_dict: dict[str, Any]) -> None:
        limiter = trio.CapacityLimiter(self.threads)
        async with trio.open_nursery() as n:
            for name, job in jobs.items():
                n.start_soon(self._run_job, name, job, output_dict, limiter)

    async def _run_job(self, name: str, job: Callable[[], Any], output_dict: dict[str, Any],
                       limiter: trio.CapacityLimiter) -> None:
        try:
            output_dict[name] = await trio.to_thread.run_sync(job, limiter=limiter)
        except Exception as e:
            # Kept out of the nursery so that the other job still finishes
            if not isinstance(e, BaxterError):
                logger.error(f"Job {name} raised {type(e).__name__}: {e}")
            output_dict[name] = e

    ##########
    # STAGES #
    ##########

    def startup(self) -> None:
        """
        Pre-run startup behaviors.
        """
        self.epoch_start_time = time.time()
        config = self.config

        self.spec = config.model_spec()
        self.theta_cfg = config.theta_config()
        self.pol = config.truncation_policy()
        self.solver_cfg = config.solver_config()
        self.ctx = CheckContext(config.fingerprint(), self.spec, self.theta_cfg, self.pol,
                                tau=config.tau_seed(), tau_dual=config.tau_dual_seed(),
                                bethe_tol=config.bethe_config().tol)

        self.results["config"] = config.to_dict()
        self.results["model"] = self.spec.to_dict()
        self.results["skipped"] = {}

        logger.info(f"Starting {self.command} for {config.source} with {self.threads} threads")

    def run(self) -> RunResult:
        """
        Runs the command, start to finish.
        """
        self.startup()

        stages, modules = COMMANDS[self.command]
        for stage in stages:
            start = time.time()
            detail = getattr(self, f"_stage_{stage.value}")()
            self.timings[stage.value] = time.time() - start
            if not self.quiet:
                print_stage(stage.value, self.timings[stage.value], detail or "")

        start = time.time()
        outcomes = run_invariants(self.ctx, modules)
        self.timings["invariants"] = time.time() - start

        result = RunResult(self.command, self.results, outcomes, self.timings, self.warnings)
        self.cleanup(result)
        return result

    def _skip(self, stage: Stage, reason: str) -> str:
        logger.info(f"Skipping {stage.value}: {reason}")
        self.results["skipped"][stage.value] = reason
        return f"skipped ({reason})"

    def _stage_specfun(self) -> str:
        self.results["specfun"] = {"q": self.spec.mp.q, "q_dual": self.spec.mp.q_dual, "Omega": self.spec.mp.Omega}
        return f"|q| = {abs(self.spec.mp.q):.4f}"

    def _stage_hill(self) -> str:
        ctx = self.ctx
        if ctx.tau is None:
            if self.command == "hill":
                raise ConfigError("The hill command needs seeds.tau", "$.seeds.tau")
            return self._skip(Stage.HILL, "no tau seed")

        out = self.run_parallel({
            "direct": lambda: hill.find_delta(ctx.tau, self.spec, self.pol, self.theta_cfg),
            "dual": lambda: hill.find_delta_dual(ctx.tau_dual, self.spec, self.pol, self.theta_cfg),
        })
        ctx.fact, ctx.fact_dual = out["direct"], out["dual"]
        self.results["hill"] = {"direct": ctx.fact.to_dict(), "dual": ctx.fact_dual.to_dict()}
        return f"residual {max(ctx.fact.residual, ctx.fact_dual.residual):.2e}"

    def _stage_nlie(self) -> str:
        ctx = self.ctx
        if ctx.fact is None:
            return self._skip(Stage.NLIE, "no Hill zeros")

        contour = self.config.contour
        out = self.run_parallel({
            "direct": lambda: nlie.solve_from_factorization(
                ctx.tau, ctx.fact, self.spec, contour["x0"], contour["n_nodes"], self.solver_cfg),
            "dual": lambda: nlie.solve_from_factorization(
                ctx.tau_dual, ctx.fact_dual, self.spec, contour["x0_dual"], contour["n_nodes_dual"],
                self.solver_cfg),
        })
        ctx.sol, ctx.sol_dual = out["direct"], out["dual"]
        self.results["nlie"] = {"direct": ctx.sol.diagnostics(), "dual": ctx.sol_dual.diagnostics()}

        if self.command == "nlie":
            refinement = self.run_parallel({
                "direct": lambda: nlie.refinement_change(ctx.sol, self.solver_cfg),
                "dual": lambda: nlie.refinement_change(ctx.sol_dual, self.solver_cfg),
            })
            self.results["nlie"]["refinement_change"] = refinement

        return f"contraction {max(ctx.sol.contraction_estimate, ctx.sol_dual.contraction_estimate):.3f}"

    def _stage_baxter(self) -> str:
        ctx = self.ctx
        if ctx.sol is None:
            return self._skip(Stage.BAXTER, "no integral-equation solutions")
        if self.spec.rho_zero:
            return self._skip(Stage.BAXTER, "q± are not defined in the rho = 0 limit")

        ctx.qp, ctx.qm = baxter.fundamental_pair(ctx.sol, ctx.sol_dual, self.theta_cfg)
        probe = baxter.check_probes(ctx.sol, ctx.sol_dual)
        report = ctx.cached("wronskians", lambda: baxter.wronskians(ctx.qp, ctx.qm, probe))
        fits = ctx.cached("fits", lambda: (baxter.fit_from_q(ctx.qp, ctx.qm),
                                            baxter.fit_from_q(ctx.qp, ctx.qm, dual=True)))

        self.results["baxter"] = {
            "wronskians": report.to_dict(),
            "fit": fits[0].to_dict(),
            "fit_dual": fits[1].to_dict(),
            "probes": probe,
            "q_plus": [ctx.qp(lam) for lam in probe],
            "q_minus": [ctx.qm(lam) for lam in probe],
        }
        return f"W residual {max(report.w1_residual, report.w2_residual):.2e}"

    def _stage_bethe(self) -> str:
        ctx = self.ctx
        seed = self.config.delta_seed()
        if seed is None:
            if self.command == "bethe":
                raise ConfigError("The bethe command needs seeds.delta", "$.seeds.delta")
            return self._skip(Stage.BETHE, "no delta seed")
        if self.spec.rho_zero:
            return self._skip(Stage.BETHE, "the Bethe equations degenerate in the rho = 0 limit")

        ctx.pair_solver = bethe.default_pair_solver(
            self.spec, self.config.contour_for(), self.config.contour_for(dual=True), self.solver_cfg)
        state = bethe.solve_bethe(seed, self.spec, ctx.pair_solver, self.config.bethe_config())
        ctx.bethe = bethe.require_converged(state)
        self.results["bethe"] = state.to_dict()
        return f"residual {state.residual_norm:.2e} after {state.iterations} iterations"

    def _stage_spectrum(self) -> str:
        """
        Rebuilds τ, τ̃ from the Bethe state when one was solved, and from the Hill-route solutions when they
        exist. Only the Hill route is compared with the τ seeds.
        """
        ctx = self.ctx
        if ctx.sol is None and ctx.bethe is None:
            return self._skip(Stage.SPECTRUM, "no integral-equation solutions")

        self.results["spectrum"] = {}
        details = []

        if ctx.sol is not None:
            qp, qm = ctx.qp, ctx.qm
            if qp is None and not self.spec.rho_zero:
                qp, qm = baxter.fundamental_pair(ctx.sol, ctx.sol_dual, self.theta_cfg)
            ctx.spectrum = self._reconstruct(ctx.sol, ctx.sol_dual, qp, qm, ctx.tau, ctx.tau_dual)
            self.results["spectrum"]["hill"] = ctx.spectrum.to_dict()
            details.append(f"hill route {ctx.spectrum.crosscheck_residual:.2e}")

        if ctx.bethe is not None:
            state = ctx.bethe
            qp, qm = ctx.cached("bethe_pair",
                                lambda: baxter.fundamental_pair(state.sol, state.sol_dual, self.theta_cfg))
            ctx.spectrum_bethe = self._reconstruct(state.sol, state.sol_dual, qp, qm)
            self.results["spectrum"]["bethe"] = ctx.spectrum_bethe.to_dict()
            details.append(f"bethe route {ctx.spectrum_bethe.crosscheck_residual:.2e}")

        return "cross-check " + ", ".join(details)

    def _reconstruct(self, sol: nlie.NlieSolution, sol_dual: nlie.NlieSolution, qp: Optional[baxter.QSolution],
                     qm: Optional[baxter.QSolution], reference: Optional[RootSet] = None,
                     reference_dual: Optional[RootSet] = None) -> spectrum.SpectrumResult:
        tfun = tfun_dual = None
        if qp is not None:
            def tfun(lam: complex) -> complex:
                return baxter.t_from_q(qp, qm, lam)

            def tfun_dual(lam: complex) -> complex:
                return baxter.t_from_q(qp, qm, lam, dual=True)

        out = self.run_parallel({
            "direct": lambda: spectrum.reconstruct_side(sol, sol_dual, reference, tfun),
            "dual": lambda: spectrum.reconstruct_side(sol_dual, sol, reference_dual, tfun_dual),
        })
        result = spectrum.combine_sides(out["direct"], out["dual"])
        self.warnings.extend(result.warnings)
        return result

    ###########
    # CLEANUP #
    ###########

    def cleanup(self, result: RunResult) -> None:
        """
        Post-run cleanup behaviors: write the results and print the summary.
        """
        end_time = time.time()
        outputs = self.config.outputs
        name = "results" if self.command == "run" else self.command.replace("-", "_")

        write_json(result.to_dict(), os.path.join(self.out_dir, f"{name}.json"))

        if outputs["emit_csv"]:
            rows = [{"invariant": k, **v.to_dict()} for k, v in result.outcomes.items()]
            write_csv(pd.DataFrame(rows, columns=["invariant", "status", "value", "detail"]),
                      os.path.join(self.out_dir, f"{name}_invariants.csv"))

            if outputs["emit_grid"] and self.ctx.sol is not None:
                write_csv(self.ctx.sol.to_frame(), os.path.join(self.out_dir, "nlie_grid.csv"))
                write_csv(self.ctx.sol_dual.to_frame(), os.path.join(self.out_dir, "nlie_grid_dual.csv"))

        if self.quiet:
            return

        print("\n\n -- RESULTS -- \n")
        print(results_table(result.outcomes))
        print("\n")

        for warning in result.warnings:
            print(f"WARNING: {warning}")

        print(f"Total runtime was {format_runtime(end_time - self.epoch_start_time)}")
        print("\n\n")
