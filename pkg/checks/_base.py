from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import wraps
from typing import Any, Optional

from baxtertq.errors import BaxterError
from baxtertq.hill import TruncationPolicy
from baxtertq.specfun import DEFAULT_CONFIG

logger = logging.getLogger(__name__)


# Using eq=True and frozen=True makes the dataclass automatically hashable
@dataclass(eq=True, frozen=True)
class CheckIdentifier():
    """
    Hashable Dataclass that identifies one invariant evaluated on one resolved configuration
    """
    fingerprint: str
    name: str


@dataclass
class CheckOutcome():
    """
    The result of an invariant. ``passed`` is None when the invariant does not apply to the run.
    """
    passed: Optional[bool]
    value: Optional[float] = None
    detail: str = ""

    @classmethod
    def skip(cls, detail: str) -> CheckOutcome:
        return cls(None, None, detail)

    @property
    def status(self) -> str:
        if self.passed is None:
            return "skip"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {"status": self.status, "value": self.value, "detail": self.detail}


def within(value: float, tol: float, detail: str = "") -> CheckOutcome:
    return CheckOutcome(bool(value < tol), float(value), detail or f"tolerance {tol:.0e}")


@dataclass
class CheckContext():
    """
    Everything a run has produced so far. Stages that were not run leave their fields as None, and the
    invariants that need them are skipped.
    """
    fingerprint: str
    spec: Any
    theta_cfg: Any = DEFAULT_CONFIG
    pol: Any = field(default_factory=TruncationPolicy)
    tau: Any = None
    tau_dual: Any = None
    fact: Any = None
    fact_dual: Any = None
    sol: Any = None
    sol_dual: Any = None
    qp: Any = None
    qm: Any = None
    bethe: Any = None
    pair_solver: Any = None
    bethe_tol: float = 1e-10
    spectrum: Any = None
    spectrum_bethe: Any = None
    scratch: dict = field(default_factory=dict)

    def cached(self, key: str, compute: Callable[[], Any]) -> Any:
        """
        Intermediate values shared by several invariants are computed once per context.
        """
        if key not in self.scratch:
            self.scratch[key] = compute()
        return self.scratch[key]


class Invariant():
    """
    A named property of one module, checked on a ``CheckContext``.
    """

    func: Callable[[CheckContext], CheckOutcome]
    name: str
    module: str
    requires: tuple[str, ...]

    def __init__(self, func: Callable, name: str, module: str, requires: tuple[str, ...] = ()) -> None:
        self.func = func
        self.name = name
        self.module = module
        self.requires = requires

    def __call__(self, ctx: CheckContext) -> CheckOutcome:
        missing = [r for r in self.requires if getattr(ctx, r) is None]
        if missing:
            return CheckOutcome.skip(f"needs {', '.join(missing)}")

        try:
            return self.func(ctx)
        except BaxterError as e:
            logger.warning(f"Invariant {self.name} raised {type(e).__name__}: {e}")
            return CheckOutcome(False, None, f"{type(e).__name__}: {e}")

    def __repr__(self) -> str:
        return f"Invariant({self.module}.{self.name})"


REGISTRY: dict[str, Invariant] = {}


def invariant(name: str, module: str, requires: tuple[str, ...] = ()):
    """
    Registers an invariant and caches its outcome per (configuration fingerprint, name).
    """

    def invariant_inner(func: Callable) -> Callable:
        func.cache_ = {}

        @wraps(func)
        def inner(ctx: CheckContext) -> CheckOutcome:
            identifier = CheckIdentifier(ctx.fingerprint, name)
            if identifier not in func.cache_:
                func.cache_[identifier] = func(ctx)
            return func.cache_[identifier]

        if name in REGISTRY:
            raise ValueError(f"An invariant called {name!r} is already registered")
        REGISTRY[name] = Invariant(inner, name, module, requires)
        return inner

    return invariant_inner


def run_invariants(ctx: CheckContext, modules: Optional[tuple[str, ...]] = None) -> dict[str, CheckOutcome]:
    """
    Evaluates every registered invariant of ``modules`` (all of them by default), in registration order.
    """
    results = {}
    for name, inv in REGISTRY.items():
        if modules is not None and inv.module not in modules:
            continue
        outcome = inv(ctx)
        results[name] = outcome
        logger.info(f"{inv.module}.{name}: {outcome.status} ({outcome.value})")
    return results


def clear_caches() -> None:
    for inv in REGISTRY.values():
        inv.func.__wrapped__.cache_ = {}
