from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from baxtertq.specfun import ModularPair

#############
# CONSTANTS #
#############

MIN_DIST_FACTOR = 0.05
NUDGE_STEP = 0.02
MAX_NUDGES = 24


def lattice_distance(z: complex, roots: Iterable[complex], mp: ModularPair) -> float:
    """
    Distance from ``z`` to the union of the lattices root + iω₁ℤ + iω₂ℤ.
    """
    return min((mp.nearest_lattice_point(z - r)[0] for r in roots), default=np.inf)


def is_clear(z: complex, roots: Sequence[complex], mp: ModularPair, shifts: Sequence[complex] = (0,),
             min_dist: float | None = None) -> bool:
    """
    True when ``z`` and every ``z + shift`` keep at least ``min_dist`` from the root lattices.
    """
    min_dist = MIN_DIST_FACTOR * mp.min_abs if min_dist is None else min_dist
    return all(lattice_distance(z + s, roots, mp) >= min_dist for s in shifts)


def from_offsets(x: float, y: float, mp: ModularPair) -> complex:
    """
    The point i(xω₁ + yω₂).
    """
    return 1j * (x * mp.omega1 + y * mp.omega2)


def place(x: float, y: float, roots: Sequence[complex], mp: ModularPair, shifts: Sequence[complex] = (0,),
          min_dist: float | None = None) -> complex:
    """
    Returns the point at lattice offsets (x, y), nudged along ω₂ until it clears the root lattices.
    """
    for k in range(MAX_NUDGES):
        point = from_offsets(x, y + k * NUDGE_STEP, mp)
        if is_clear(point, roots, mp, shifts, min_dist):
            return point

    # The root lattices are dense near this offset, fall back to the un-nudged point
    return from_offsets(x, y, mp)


def cell_grid(x_offsets: Sequence[float], y_offsets: Sequence[float], roots: Sequence[complex],
              mp: ModularPair, origin: complex = 0j, shifts: Sequence[complex] = (0,)) -> list[complex]:
    """
    A rectangular grid of points origin + i(xω₁ + yω₂), each nudged clear of the root lattices.
    """
    shifted = [r - origin for r in roots]
    return [origin + place(x, y, shifted, mp, shifts) for x, y in itertools.product(x_offsets, y_offsets)]


def random_offsets(count: int, seed: int, low: float = 0.1, high: float = 0.4) -> np.ndarray:
    """
    ``count`` pairs of offsets with magnitudes in [low, high] and random signs, drawn from a seeded
    generator so that probe sets are reproducible.
    """
    rng = np.random.default_rng(seed)
    magnitudes = rng.uniform(low, high, size=(count, 2))
    signs = rng.choice((-1.0, 1.0), size=(count, 2))
    return magnitudes * signs
