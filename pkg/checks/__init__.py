from checks._base import CheckContext, CheckOutcome, REGISTRY, clear_caches, invariant, run_invariants
from checks import definitions
