"""Finite worlds, sensor realizations and the visible-states graph.

The observed state space is a finite list of atoms carrying a probability
weight. A realization attaches to every positive tag the set of atoms on
which the sensor answers "yes"; complements are derived, so the sensor map
is ∗-equivariant by construction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

import networkx as nx

from config import ConfigManager
from median_dual import MedianGraph, build_dual
from pocset_core import Element, ElementLike, PocSet, PocSetError, Vertex

__all__ = [
    "Realization",
    "RealizationError",
    "VisibleGraph",
    "VisibleState",
    "Weight",
    "World",
    "consistent_vertices",
    "encode_weight",
    "is_consistent",
    "objective_excitation",
    "pi_x",
    "visible_entropy",
    "visible_graph",
]

logger = logging.getLogger(__name__)

Weight = Union[Fraction, float]


def encode_weight(weight: Weight) -> Union[int, float, str]:
    """Write a fraction as an integer or a ``"p/q"`` string; floats are kept."""
    if isinstance(weight, Fraction):
        return weight.numerator if weight.denominator == 1 else str(weight)
    return weight


class RealizationError(ValueError):
    """Raised for malformed worlds, sensors or atom references."""


def _measure_tolerance() -> float:
    world = ConfigManager.load_config().world
    assert world is not None
    return world.measure_tolerance


@dataclass(frozen=True)
class World:
    """A finite atomized probability space."""

    mu: Tuple[Weight, ...]

    def __post_init__(self) -> None:
        if not self.mu:
            raise RealizationError("A world needs at least one atom")
        for i, weight in enumerate(self.mu):
            if weight < 0:
                raise RealizationError(f"Atom {i} has negative weight {weight}")
        total = sum(self.mu)
        exact = all(isinstance(w, (int, Fraction)) for w in self.mu)
        if exact and total != 1:
            raise RealizationError(f"Atom weights sum to {total}, not 1")
        if not exact and abs(float(total) - 1.0) > _measure_tolerance():
            raise RealizationError(f"Atom weights sum to {float(total)}, not 1")

    @classmethod
    def uniform(cls, atoms: int) -> World:
        if atoms <= 0:
            raise RealizationError("A world needs at least one atom")
        return cls(tuple(Fraction(1, atoms) for _ in range(atoms)))

    @property
    def size(self) -> int:
        return len(self.mu)

    def mass(self, atoms: Iterable[int]) -> Weight:
        return sum((self.mu[i] for i in atoms), Fraction(0))


@dataclass(frozen=True)
class Realization:
    """A poc-set realized in a world by sensor sets on its positive tags."""

    pocset: PocSet
    world: World
    sensors: Tuple[Tuple[str, FrozenSet[int]], ...]
    measure_positive: bool = False

    def __post_init__(self) -> None:
        known = dict(self.sensors)
        missing = [tag for tag in self.pocset.alphabet if tag not in known]
        if missing:
            raise RealizationError(f"No sensor for tags: {', '.join(missing)}")
        extra = sorted(set(known) - set(self.pocset.alphabet))
        if extra:
            raise RealizationError(f"Sensors for unknown tags: {', '.join(extra)}")
        for tag, atoms in self.sensors:
            bad = [i for i in atoms if not 0 <= i < self.world.size]
            if bad:
                raise RealizationError(f"Sensor {tag} names unknown atoms {bad[:5]}")
        for x, y in sorted(self.pocset.order):
            if not self.sensor_set(x) <= self.sensor_set(y):
                raise RealizationError(
                    f"Sensors are not order-preserving: {x} < {y} "
                    f"but f({x}) ⊄ f({y})"
                )

    @classmethod
    def from_sensors(
        cls,
        pocset: PocSet,
        world: World,
        sensors: Mapping[str, Iterable[int]],
        measure_positive: Optional[bool] = None,
    ) -> Realization:
        if measure_positive is None:
            world_config = ConfigManager.load_config().world
            assert world_config is not None
            measure_positive = world_config.measure_positive
        ordered = tuple(
            (tag, frozenset(sensors[tag])) for tag in pocset.alphabet if tag in sensors
        ) + tuple(
            (tag, frozenset(sensors[tag]))
            for tag in sorted(sensors)
            if tag not in pocset.alphabet
        )
        return cls(pocset, world, ordered, measure_positive)

    @cached_property
    def _positive_sets(self) -> Dict[str, FrozenSet[int]]:
        return dict(self.sensors)

    @cached_property
    def all_atoms(self) -> FrozenSet[int]:
        return frozenset(range(self.world.size))

    @cached_property
    def support(self) -> FrozenSet[int]:
        """Atoms that count as witnesses of consistency."""
        if self.measure_positive:
            return frozenset(i for i in self.all_atoms if self.world.mu[i] > 0)
        return self.all_atoms

    def sensor_set(self, element: Element) -> FrozenSet[int]:
        if element.is_trivial:
            return self.all_atoms if element.negated else frozenset()
        positive = self._positive_sets[element.tag]
        return self.all_atoms - positive if element.negated else positive

    def restrict(self, pocset: PocSet) -> Optional[Realization]:
        """The same sensors read against ``pocset``, or None if they no
        longer form a realization of it."""
        try:
            return Realization(
                pocset,
                self.world,
                tuple(
                    (tag, atoms) for tag, atoms in self.sensors if tag in pocset.alphabet
                ),
                self.measure_positive,
            )
        except RealizationError as exc:
            logger.debug("Realization does not survive restructuring: %s", exc)
            return None


def pi_x(r: Realization, x: int) -> Vertex:
    """π(x) = {a ∈ P : x ∈ f(a)}, always a vertex of Γ(P).

    Raises:
        RealizationError: If ``x`` is not an atom
    """
    if not isinstance(x, int) or not 0 <= x < r.world.size:
        raise RealizationError(f"Unknown atom {x!r}")
    return frozenset(
        element for element in r.pocset.proper_elements if x in r.sensor_set(element)
    )


def _witnesses(r: Realization, family: Iterable[Element]) -> FrozenSet[int]:
    atoms = r.support
    for element in family:
        atoms = atoms & r.sensor_set(element)
        if not atoms:
            break
    return atoms


def is_consistent(r: Realization, family: Iterable[ElementLike]) -> bool:
    """Whether some atom answers every element of ``family`` positively."""
    try:
        elements = [r.pocset.element(e) for e in family]
    except PocSetError as exc:
        raise RealizationError(str(exc)) from exc
    return bool(_witnesses(r, elements))


def consistent_vertices(r: Realization, g: MedianGraph) -> FrozenSet[Vertex]:
    return frozenset(v for v in g.vertices if _witnesses(r, v))


@dataclass(frozen=True)
class VisibleState:
    """A class of atoms with identical sensor answers."""

    vertex: Vertex
    atoms: FrozenSet[int]
    mass: Weight


@dataclass(frozen=True, eq=False)
class VisibleGraph:
    """Γ(P, f) together with its embedding into Γ(P)."""

    states: Tuple[VisibleState, ...]
    edges: Tuple[Tuple[int, int], ...]
    dual: MedianGraph

    @property
    def embedding(self) -> Tuple[Vertex, ...]:
        return tuple(state.vertex for state in self.states)

    @cached_property
    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.states)))
        graph.add_edges_from(self.edges)
        return graph


def visible_graph(r: Realization, g: Optional[MedianGraph] = None) -> VisibleGraph:
    """The graph of visible states and its vertex embedding into Γ(P)."""
    g = g or build_dual(r.pocset)
    classes: Dict[Vertex, List[int]] = {}
    for atom in sorted(r.support):
        classes.setdefault(pi_x(r, atom), []).append(atom)
    ordered = sorted(classes, key=lambda v: g.index[v])
    states = tuple(
        VisibleState(v, frozenset(classes[v]), r.world.mass(classes[v])) for v in ordered
    )
    edges = tuple(
        (i, j)
        for i in range(len(states))
        for j in range(i + 1, len(states))
        if len(states[i].vertex - states[j].vertex) == 1
    )
    logger.debug("Visible graph: %d states, %d edges", len(states), len(edges))
    return VisibleGraph(states, edges, g)


def objective_excitation(
    r: Realization, g: Optional[MedianGraph] = None
) -> Tuple[Weight, ...]:
    """p(u) = μ(⋂_{a∈u} f(a)), aligned with ``g.vertices``."""
    g = g or build_dual(r.pocset)
    masses: Dict[Vertex, Weight] = {}
    for atom in r.support:
        vertex = pi_x(r, atom)
        masses[vertex] = masses.get(vertex, Fraction(0)) + r.world.mu[atom]
    return tuple(masses.get(v, Fraction(0)) for v in g.vertices)


def visible_entropy(r: Realization) -> float:
    """Shannon entropy (bits) of the visible-state partition under μ."""
    entropy = 0.0
    for state in visible_graph(r).states:
        mass = float(state.mass)
        if mass > 0:
            entropy -= mass * math.log2(mass)
    return entropy
