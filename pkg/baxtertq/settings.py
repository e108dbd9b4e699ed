from __future__ import annotations

import hashlib
import json
import os
from typing import Any, Optional, Union

from baxtertq.bethe import BetheConfig
from baxtertq.errors import BaxterError, ConfigError
from baxtertq.hill import TruncationPolicy
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet, constraint_residual
from baxtertq.nlie import Contour, SolverConfig
from baxtertq.specfun import ModularPair, ThetaProductConfig

#############
# CONSTANTS #
#############

THREADS_ENV_VAR = "BAXTER_NLIE_THREADS"
DEFAULT_THREADS = 2
DUAL_SEED_TOL = 1e-8

BLOCK_DEFAULTS: dict[str, dict[str, Any]] = {
    "contour": {"x0": 0.0, "n_nodes": 256, "x0_dual": 0.0, "n_nodes_dual": 256},
    "truncation": {"tol": 1e-15, "n_min": 2, "n_max": 2000},
    "specfun": {"tol": 1e-12, "max_terms": 512},
    "solver": {"tol": 1e-13, "max_iter": 200, "damping": 1.0, "anderson": False, "bethe_tol": 1e-10,
               "bethe_max_iter": 30},
    "seeds": {"tau": None, "tau_dual": None, "delta": None},
    "outputs": {"directory": "results", "emit_csv": True, "emit_grid": True},
}
REQUIRED_BLOCKS: dict[str, tuple[str, ...]] = {
    "model": ("kind", "N", "kappa", "p0"),
    "periods": ("omega1", "omega2"),
}
TOP_LEVEL_KEYS = set(REQUIRED_BLOCKS) | set(BLOCK_DEFAULTS) | {"rho_override"}


def parse_complex(value: Any, path: str) -> complex:
    """
    Reads a complex number written as [re, im]. Plain real numbers are accepted too.
    """
    if isinstance(value, bool):
        raise ConfigError(f"Expected [re, im], got {value!r}", path)

    if isinstance(value, (int, float)):
        return complex(value)

    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"Expected [re, im], got {value!r}", path)

    return complex(value[0], value[1])


def parse_roots(value: Any, path: str) -> Optional[list[complex]]:
    if value is None:
        return None

    if not isinstance(value, list) or not value:
        raise ConfigError(f"Expected a non-empty list of [re, im] pairs, got {value!r}", path)

    return [parse_complex(v, f"{path}[{k}]") for k, v in enumerate(value)]


def thread_count(flag: Optional[int] = None) -> int:
    """
    The number of worker threads: the ``--threads`` flag, else ``BAXTER_NLIE_THREADS``, else 2.
    """
    if flag is not None:
        count = flag
    elif os.environ.get(THREADS_ENV_VAR):
        try:
            count = int(os.environ[THREADS_ENV_VAR])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {os.environ[THREADS_ENV_VAR]!r}",
                              THREADS_ENV_VAR)
    else:
        count = DEFAULT_THREADS

    if count < 1:
        raise ConfigError(f"The thread count must be at least 1. The current value is {count}", "threads")
    return count


class RunConfig():
    """
    A declarative run: the model, the periods, numerical settings and the seeds to start from. Every block
    except ``model`` and ``periods`` falls back to defaults, and unknown keys are rejected with the JSON path
    of the offender.
    """

    model: dict
    periods: dict
    rho_override: Optional[Union[int, list]]
    contour: dict
    truncation: dict
    specfun: dict
    solver: dict
    seeds: dict
    outputs: dict
    source: str

    def __init__(self, data: dict, source: str = "<memory>") -> None:
        self.source = source
        self.raw = data

        self.validate_blocks()

        self.model = dict(data["model"])
        self.periods = dict(data["periods"])
        self.rho_override = data.get("rho_override")
        for block, defaults in BLOCK_DEFAULTS.items():
            setattr(self, block, {**defaults, **data.get(block, {})})

        self.validate_model()
        self.validate_tolerances()
        self.validate_contours()
        self.validate_seeds()
        self.validate_outputs()

    @classmethod
    def from_json(cls, path: str) -> RunConfig:
        try:
            with open(path, "r", encoding="utf-8") as config_file:
                try:
                    data = json.load(config_file)
                except json.JSONDecodeError as e:
                    raise ConfigError(f"Failed to parse {path}: {e}", "$")
        except OSError as e:
            raise ConfigError(f"Failed to read {path}: {e}", "$")

        if not isinstance(data, dict):
            raise ConfigError(f"The top level of {path} must be an object", "$")
        return cls(data, source=path)

    ##############
    # VALIDATION #
    ##############

    def validate_blocks(self) -> None:
        """
        Checks that the required blocks are present and that no block carries keys it does not know.
        """
        if not isinstance(self.raw, dict):
            raise ConfigError("The configuration must be an object", "$")

        for key in self.raw:
            if key not in TOP_LEVEL_KEYS:
                raise ConfigError(f"Unknown key {key!r}", f"$.{key}")

        for block, keys in REQUIRED_BLOCKS.items():
            if block not in self.raw:
                raise ConfigError(f"Missing required block {block!r}", f"$.{block}")
            if not isinstance(self.raw[block], dict):
                raise ConfigError(f"Block {block!r} must be an object", f"$.{block}")
            for key in self.raw[block]:
                if key not in keys:
                    raise ConfigError(f"Unknown key {key!r}", f"$.{block}.{key}")
            for key in keys:
                if key not in self.raw[block]:
                    raise ConfigError(f"Missing required key {key!r}", f"$.{block}.{key}")

        for block, defaults in BLOCK_DEFAULTS.items():
            if block not in self.raw:
                continue
            if not isinstance(self.raw[block], dict):
                raise ConfigError(f"Block {block!r} must be an object", f"$.{block}")
            for key in self.raw[block]:
                if key not in defaults:
                    raise ConfigError(f"Unknown key {key!r}", f"$.{block}.{key}")

    def validate_model(self) -> None:
        """
        Checks the model block and the periods, and that they make a valid ``ModelSpec``.
        """
        try:
            ModelKind(self.model["kind"])
        except ValueError:
            raise ConfigError(f"kind must be 'qtoda' or 'toda2'. The current value is {self.model['kind']!r}",
                              "$.model.kind")

        N = self.model["N"]
        if not isinstance(N, int) or isinstance(N, bool) or N < 1:
            raise ConfigError(f"N must be a positive integer. The current value is {N!r}", "$.model.N")

        parse_complex(self.model["kappa"], "$.model.kappa")
        parse_complex(self.model["p0"], "$.model.p0")
        parse_complex(self.periods["omega1"], "$.periods.omega1")
        parse_complex(self.periods["omega2"], "$.periods.omega2")

        if self.rho_override is not None and self.rho_override != 0:
            parse_complex(self.rho_override, "$.rho_override")

        try:
            self.model_spec()
        except BaxterError as e:
            raise ConfigError(f"Invalid model: {e}", "$.model")

    def validate_tolerances(self) -> None:
        """
        Every tolerance must be positive and every iteration cap at least one.
        """
        for block, keys in (("truncation", ("tol",)), ("specfun", ("tol",)), ("solver", ("tol", "bethe_tol"))):
            for key in keys:
                value = getattr(self, block)[key]
                if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                    raise ConfigError(f"Tolerances must be positive. The current value is {value!r}",
                                      f"$.{block}.{key}")

        for block, key in (("truncation", "n_min"), ("truncation", "n_max"), ("specfun", "max_terms"),
                           ("solver", "max_iter"), ("solver", "bethe_max_iter")):
            value = getattr(self, block)[key]
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"Must be a positive integer. The current value is {value!r}", f"$.{block}.{key}")

        try:
            self.truncation_policy()
            self.theta_config()
            self.solver_config()
            self.bethe_config()
        except BaxterError as e:
            raise ConfigError(str(e), "$.solver")

    def validate_contours(self) -> None:
        for key in ("n_nodes", "n_nodes_dual"):
            value = self.contour[key]
            if not isinstance(value, int) or isinstance(value, bool) or value < 4:
                raise ConfigError(f"A contour needs at least 4 nodes. The current value is {value!r}",
                                  f"$.contour.{key}")

        for key in ("x0", "x0_dual"):
            value = self.contour[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"Contour offsets must be real numbers. The current value is {value!r}",
                                  f"$.contour.{key}")

    def validate_seeds(self) -> None:
        """
        At least one of ``tau`` and ``delta`` is needed. A missing ``tau_dual`` defaults to ``tau`` when that
        set also obeys the dual constraint.
        """
        N = self.model["N"]
        tau = parse_roots(self.seeds["tau"], "$.seeds.tau")
        tau_dual = parse_roots(self.seeds["tau_dual"], "$.seeds.tau_dual")
        delta = parse_roots(self.seeds["delta"], "$.seeds.delta")

        if tau is None and delta is None:
            raise ConfigError("Either seeds.tau or seeds.delta must be given", "$.seeds")

        for name, roots in (("tau", tau), ("tau_dual", tau_dual), ("delta", delta)):
            if roots is not None and len(roots) != N:
                raise ConfigError(f"Expected {N} roots, got {len(roots)}", f"$.seeds.{name}")

        if tau_dual is not None and tau is None:
            raise ConfigError("seeds.tau_dual needs seeds.tau", "$.seeds.tau_dual")

        if tau is not None and tau_dual is None:
            spec = self.model_spec()
            candidate = RootSet(tau, RootFamily.TAU_DUAL)
            residual = constraint_residual(candidate, spec)
            if residual > DUAL_SEED_TOL:
                raise ConfigError(
                    f"seeds.tau does not satisfy the dual constraint (residual {residual:.3e}); "
                    f"give seeds.tau_dual explicitly", "$.seeds.tau_dual")

    def validate_outputs(self) -> None:
        if not isinstance(self.outputs["directory"], str) or not self.outputs["directory"]:
            raise ConfigError("outputs.directory must be a non-empty string", "$.outputs.directory")

        for key in ("emit_csv", "emit_grid"):
            if not isinstance(self.outputs[key], bool):
                raise ConfigError(f"{key} must be true or false", f"$.outputs.{key}")

    ############
    # BUILDERS #
    ############

    def modular_pair(self) -> ModularPair:
        return ModularPair(parse_complex(self.periods["omega1"], "$.periods.omega1"),
                           parse_complex(self.periods["omega2"], "$.periods.omega2"))

    def model_spec(self) -> ModelSpec:
        override: Optional[Union[int, complex]] = None
        if self.rho_override is not None:
            override = 0 if self.rho_override == 0 else parse_complex(self.rho_override, "$.rho_override")

        return ModelSpec(ModelKind(self.model["kind"]), self.model["N"],
                         parse_complex(self.model["kappa"], "$.model.kappa"),
                         parse_complex(self.model["p0"], "$.model.p0"),
                         self.modular_pair(), rho_override=override)

    def truncation_policy(self) -> TruncationPolicy:
        return TruncationPolicy(float(self.truncation["tol"]), self.truncation["n_min"], self.truncation["n_max"])

    def theta_config(self) -> ThetaProductConfig:
        return ThetaProductConfig(float(self.specfun["tol"]), self.specfun["max_terms"])

    def solver_config(self) -> SolverConfig:
        return SolverConfig(float(self.solver["tol"]), self.solver["max_iter"], float(self.solver["damping"]),
                            bool(self.solver["anderson"]))

    def bethe_config(self) -> BetheConfig:
        return BetheConfig(float(self.solver["bethe_tol"]), self.solver["bethe_max_iter"])

    def contour_for(self, dual: bool = False) -> Contour:
        if dual:
            return Contour(self.modular_pair(), self.contour["x0_dual"], self.contour["n_nodes_dual"], dual=True)
        return Contour(self.modular_pair(), self.contour["x0"], self.contour["n_nodes"])

    def tau_seed(self) -> Optional[RootSet]:
        roots = parse_roots(self.seeds["tau"], "$.seeds.tau")
        return None if roots is None else RootSet(roots, RootFamily.TAU_DIRECT)

    def tau_dual_seed(self) -> Optional[RootSet]:
        roots = parse_roots(self.seeds["tau_dual"], "$.seeds.tau_dual")
        if roots is None:
            roots = parse_roots(self.seeds["tau"], "$.seeds.tau")
        return None if roots is None else RootSet(roots, RootFamily.TAU_DUAL)

    def delta_seed(self) -> Optional[RootSet]:
        roots = parse_roots(self.seeds["delta"], "$.seeds.delta")
        return None if roots is None else RootSet(roots, RootFamily.DELTA)

    ##########
    # OUTPUT #
    ##########

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "periods": self.periods,
            "rho_override": self.rho_override,
            **{block: getattr(self, block) for block in BLOCK_DEFAULTS},
        }

    def fingerprint(self) -> str:
        """
        SHA-256 of the canonical JSON form of the resolved configuration.
        """
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
