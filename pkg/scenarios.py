"""Built-in poc-sets and worlds.

The compass world discretizes the circle into atoms of equal width; atom
``i`` covers the directions around its midpoint ``(i + 0.5) * 360 / atoms``
degrees, measured counterclockwise from north. Each sensor answers "yes"
within ``epsilon`` degrees of its cardinal direction.
"""

from __future__ import annotations

import itertools
import logging
import string
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import ConfigManager
from pocset_core import Element, Nesting, PocSet, PocSetError, classify_pair, close_order
from realization import Realization, RealizationError, World

__all__ = [
    "CARDINALS",
    "SCENARIOS",
    "build_scenario",
    "chain",
    "compass",
    "compass_pocset",
    "cube",
    "enumerate_pocsets",
    "grid",
    "grid_pocset",
    "path3",
    "pompom",
    "random_pocset",
    "square",
]

logger = logging.getLogger(__name__)

# Tag -> direction in degrees, counterclockwise from north.
CARDINALS: Dict[str, int] = {"n": 0, "w": 90, "s": 180, "e": 270}


def _tags(n: int) -> Tuple[str, ...]:
    if n < 0:
        raise PocSetError(f"Tag count must be non-negative, got {n}")
    if n <= len(string.ascii_lowercase):
        return tuple(string.ascii_lowercase[:n])
    return tuple(f"t{i}" for i in range(1, n + 1))


def cube(n: int) -> PocSet:
    """n pairwise transverse tags; the dual graph is the n-cube."""
    return close_order(_tags(n), ())


def square() -> PocSet:
    return cube(2)


def path3() -> PocSet:
    """``a < b``; the dual graph is a path on three vertices."""
    return close_order(("a", "b"), [("a", "b")])


def chain(n: int) -> PocSet:
    """A nested chain of n tags; the dual graph is a path on n + 1 vertices."""
    tags = _tags(n)
    return close_order(tags, list(zip(tags, tags[1:])))


def pompom(n: int) -> PocSet:
    """n pairwise disjoint tags; the dual graph is a star with n leaves."""
    tags = _tags(n)
    return close_order(
        tags, [(x, f"{y}*") for x, y in itertools.combinations(tags, 2)]
    )


def compass_pocset() -> PocSet:
    """North/south and east/west are disjoint; the dual graph is a 3x3 grid."""
    return close_order(("n", "e", "s", "w"), [("n", "s*"), ("e", "w*")])


def _circular_distance(x: float, y: float) -> float:
    return abs((x - y + 180.0) % 360.0 - 180.0)


def compass(epsilon_degrees: float = 60.0, atoms: Optional[int] = None) -> Realization:
    """The compass realization on a uniform circle of ``atoms`` cells.

    Raises:
        RealizationError: If ``epsilon_degrees`` is outside (0, 90)
    """
    if atoms is None:
        world_config = ConfigManager.load_config().world
        assert world_config is not None
        atoms = world_config.compass_atoms
    if not 0 < epsilon_degrees < 90:
        raise RealizationError(
            f"Compass sensors need 0 < epsilon < 90 degrees, got {epsilon_degrees}"
        )
    width = 360.0 / atoms
    sensors = {
        tag: [
            i
            for i in range(atoms)
            if _circular_distance((i + 0.5) * width, direction) < epsilon_degrees
        ]
        for tag, direction in CARDINALS.items()
    }
    return Realization.from_sensors(compass_pocset(), World.uniform(atoms), sensors)


def grid_pocset(m: int, n: int) -> PocSet:
    """m nested vertical walls and n nested horizontal walls."""
    vertical = tuple(f"v{t}" for t in range(1, m + 1))
    horizontal = tuple(f"h{s}" for s in range(1, n + 1))
    relations = list(zip(vertical, vertical[1:])) + list(zip(horizontal, horizontal[1:]))
    return close_order(vertical + horizontal, relations)


def grid(m: int, n: int) -> Realization:
    """A room divided by walls into (m + 1)(n + 1) cells of equal weight.

    Cell ``(i, j)`` is atom ``i * (n + 1) + j``; wall ``v_t`` answers "yes"
    on columns ``i < t`` and ``h_s`` on rows ``j < s``.
    """
    if m < 0 or n < 0:
        raise RealizationError("Grid dimensions must be non-negative")
    cells = [(i, j) for i in range(m + 1) for j in range(n + 1)]
    sensors: Dict[str, List[int]] = {}
    for t in range(1, m + 1):
        sensors[f"v{t}"] = [k for k, (i, _) in enumerate(cells) if i < t]
    for s in range(1, n + 1):
        sensors[f"h{s}"] = [k for k, (_, j) in enumerate(cells) if j < s]
    return Realization.from_sensors(grid_pocset(m, n), World.uniform(len(cells)), sensors)


# ============================================================================
# Generated poc-sets
# ============================================================================

_PAIR_CHOICES: Tuple[Optional[Nesting], ...] = (None,) + tuple(Nesting)


def _witness(x: str, y: str, nesting: Nesting) -> Tuple[Element, Element]:
    a, b = Element(x), Element(y)
    if nesting is Nesting.A_LE_B:
        return (a, b)
    if nesting is Nesting.A_LE_B_STAR:
        return (a, b.star)
    if nesting is Nesting.A_STAR_LE_B:
        return (a.star, b)
    return (a.star, b.star)


def enumerate_pocsets(n: int) -> Iterator[PocSet]:
    """Every labeled poc-set on ``n`` tags.

    Each tag pair is transverse or carries one of four nestings; a choice is
    kept when its closure is consistent and adds no further relations.
    """
    tags = _tags(n)
    pairs = list(itertools.combinations(tags, 2))
    for choice in itertools.product(_PAIR_CHOICES, repeat=len(pairs)):
        relations = [
            _witness(x, y, nesting)
            for (x, y), nesting in zip(pairs, choice)
            if nesting is not None
        ]
        try:
            p = close_order(tags, relations)
        except PocSetError:
            continue
        if all(
            classify_pair(p, x, y).nesting is nesting
            for (x, y), nesting in zip(pairs, choice)
        ):
            yield p


def random_pocset(
    n: int, rng: np.random.Generator, density: float = 0.5
) -> PocSet:
    """A random closed poc-set; each tag pair is nested with probability ``density``."""
    tags = _tags(n)
    pairs = list(itertools.combinations(tags, 2))
    relations: List[Tuple[Element, Element]] = []
    for index in rng.permutation(len(pairs)):
        if rng.random() >= density:
            continue
        x, y = pairs[int(index)]
        nesting = tuple(Nesting)[int(rng.integers(len(Nesting)))]
        candidate = relations + [_witness(x, y, nesting)]
        try:
            close_order(tags, candidate)
        except PocSetError:
            continue
        relations = candidate
    return close_order(tags, relations)


# ============================================================================
# Registry
# ============================================================================

Built = Union[PocSet, Realization]

SCENARIOS: Dict[str, Callable[..., Built]] = {
    "compass": compass,
    "compass-pocset": compass_pocset,
    "grid": grid,
    "cube": cube,
    "square": square,
    "path3": path3,
    "chain": chain,
    "pompom": pompom,
}


def build_scenario(name: str, params: Sequence[float] = (), seed: int = 0) -> Built:
    """Build a registered scenario, or ``random`` from a seeded generator.

    Raises:
        KeyError: If the name is not registered
    """
    if name == "random":
        size = int(params[0]) if params else 3
        density = float(params[1]) if len(params) > 1 else 0.5
        return random_pocset(size, np.random.default_rng(seed), density)
    builder = SCENARIOS[name]
    if name == "compass":
        args: List[Union[int, float]] = [float(params[0])] if params else []
        args += [int(x) for x in params[1:2]]
        return builder(*args)
    logger.debug("Building scenario %s%s", name, tuple(params))
    return builder(*(int(x) for x in params))
