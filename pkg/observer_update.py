"""Observers and the excitation-propagation update.

An observer holds a poc-set of questions, optional sensors, an excitation
weight on every vertex of the dual graph and a conjectured current state
``epsilon``. Observing a proper element ``a`` excites the elements above
``a`` along covering relations; any excited ``b`` whose complement is
conjectured raises a flag and is repaired by turning ``b*`` off and ``b``
on. The dissipative variant bounds how far the excitation travels.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from config import ConfigManager
from median_dual import MedianGraph, VertexLike, build_dual
from pocset_core import (
    Element,
    ElementLike,
    PocSet,
    PocSetError,
    Vertex,
    incoherent_pairs,
    is_coherent,
)
from realization import (
    Realization,
    Weight,
    consistent_vertices,
    objective_excitation,
    pi_x,
)

__all__ = [
    "MisperceptionReport",
    "Observer",
    "ObserverError",
    "Perception",
    "PropagationBudget",
    "UpdateReport",
    "coherence_check",
    "conjecture_probability",
    "misperception_report",
    "prob",
    "update_dissipative",
    "update_idealized",
]

logger = logging.getLogger(__name__)


class ObserverError(ValueError):
    """Raised for malformed observers, budgets and observations."""


# ============================================================================
# Observer
# ============================================================================


@dataclass(frozen=True, eq=False)
class Observer:
    """The quadruple (P, f, p, ε); ``excitation`` is aligned with ``graph.vertices``."""

    pocset: PocSet
    graph: MedianGraph
    excitation: Tuple[Weight, ...]
    epsilon: FrozenSet[Element] = frozenset()
    realization: Optional[Realization] = None

    def __post_init__(self) -> None:
        if self.graph.source != self.pocset:
            raise ObserverError("Dual graph does not belong to the observer's poc-set")
        if len(self.excitation) != len(self.graph):
            raise ObserverError(
                f"Excitation has {len(self.excitation)} values for "
                f"{len(self.graph)} vertices"
            )
        if any(value < 0 for value in self.excitation):
            raise ObserverError("Excitation must be non-negative")
        if not any(value > 0 for value in self.excitation):
            raise ObserverError("Excitation is identically zero")
        for element in self.epsilon:
            if element.is_trivial or element not in self.pocset:
                raise ObserverError(f"Conjectured state holds foreign element {element}")
        if self.realization is not None and self.realization.pocset != self.pocset:
            raise ObserverError("Realization does not belong to the observer's poc-set")

    @classmethod
    def create(
        cls,
        pocset: PocSet,
        excitation: Optional[Sequence[Weight]] = None,
        epsilon: Iterable[ElementLike] = (),
        realization: Optional[Realization] = None,
        graph: Optional[MedianGraph] = None,
    ) -> Observer:
        """Build an observer; excitation defaults to uniform weights."""
        graph = graph or build_dual(pocset)
        if excitation is None:
            excitation = [Fraction(1, len(graph))] * len(graph)
        try:
            conjecture = frozenset(pocset.proper(e) for e in epsilon)
        except PocSetError as exc:
            raise ObserverError(str(exc)) from exc
        return cls(pocset, graph, tuple(excitation), conjecture, realization)

    @classmethod
    def objective(
        cls,
        realization: Realization,
        x: Optional[int] = None,
        graph: Optional[MedianGraph] = None,
    ) -> Observer:
        """The objective observer: p is the objective excitation and ε = π(x)."""
        graph = graph or build_dual(realization.pocset)
        epsilon = pi_x(realization, x) if x is not None else frozenset()
        return cls(
            realization.pocset,
            graph,
            objective_excitation(realization, graph),
            epsilon,
            realization,
        )

    def with_excitation(self, excitation: Sequence[Weight]) -> Observer:
        return replace(self, excitation=tuple(excitation))

    def with_epsilon(self, epsilon: Iterable[ElementLike]) -> Observer:
        try:
            conjecture = frozenset(self.pocset.proper(e) for e in epsilon)
        except PocSetError as exc:
            raise ObserverError(str(exc)) from exc
        return replace(self, epsilon=conjecture)

    @cached_property
    def total(self) -> Weight:
        return sum(self.excitation, Fraction(0))

    def weight(self, vertex: VertexLike) -> Weight:
        return self.excitation[self.graph.index[self.graph.vertex(vertex)]]


def prob(o: Observer, vertices: Iterable[VertexLike]) -> Weight:
    """Pr_O[F] = p(F) / p(VΓ(P)).

    Raises:
        ObserverError: If the total excitation is zero
    """
    if not o.total:
        raise ObserverError("Excitation is identically zero")
    members = {o.graph.vertex(v) for v in vertices}
    mass = sum((o.excitation[o.graph.index[v]] for v in members), Fraction(0))
    return mass / o.total


def conjecture_probability(o: Observer) -> Weight:
    """Pr_O of the vertices agreeing with every conjectured answer."""
    return prob(o, (v for v in o.graph.vertices if o.epsilon <= v))


def coherence_check(o: Observer) -> List[Tuple[Element, Element]]:
    """Pairs of the conjectured state with ``a <= b*``."""
    return incoherent_pairs(o.pocset, o.epsilon)


# ============================================================================
# Misperception
# ============================================================================


class Perception(Enum):
    EXACT = "exact"
    INCOMPLETE = "incomplete"
    CONTRADICTED = "contradicted"


@dataclass(frozen=True)
class MisperceptionReport:
    """The observer's conjecture compared with the true state of an atom."""

    status: Perception
    truth: Vertex
    consistent_zero: Tuple[Vertex, ...]
    inconsistent_positive: Tuple[Vertex, ...]

    def to_dict(self) -> Dict[str, object]:
        return {
            "status": self.status.value,
            "truth": sorted(str(e) for e in self.truth),
            "consistent_zero": [sorted(str(e) for e in v) for v in self.consistent_zero],
            "inconsistent_positive": [
                sorted(str(e) for e in v) for v in self.inconsistent_positive
            ],
        }


def misperception_report(o: Observer, x: int) -> MisperceptionReport:
    """Classify ``epsilon`` against the sensor answers at atom ``x``.

    Raises:
        ObserverError: If the observer has no realization
    """
    if o.realization is None:
        raise ObserverError("Observer has no realization to compare against")
    truth = pi_x(o.realization, x)
    if o.epsilon == truth:
        status = Perception.EXACT
    elif o.epsilon < truth:
        status = Perception.INCOMPLETE
    else:
        status = Perception.CONTRADICTED
    consistent = consistent_vertices(o.realization, o.graph)
    zero, positive = [], []
    for vertex, weight in zip(o.graph.vertices, o.excitation):
        if vertex in consistent and weight == 0:
            zero.append(vertex)
        elif vertex not in consistent and weight > 0:
            positive.append(vertex)
    return MisperceptionReport(status, truth, tuple(zero), tuple(positive))


# ============================================================================
# Propagation
# ============================================================================


@dataclass(frozen=True)
class PropagationBudget:
    """How far excitation travels above the observed element.

    With ``hops`` set, an element more than ``hops`` covering steps above
    the observation stays dark. With ``decay`` set, charge starts at
    ``start``, is multiplied by ``decay`` per step (and divided among the
    covering successors when ``split``) and fires while it is at least
    ``threshold``. With neither, propagation is unbounded. Elements already
    conjectured relay their charge undiminished.
    """

    hops: Optional[int] = None
    decay: Optional[float] = None
    threshold: float = 0.0
    start: float = 1.0
    split: bool = False

    def __post_init__(self) -> None:
        if self.hops is not None and self.decay is not None:
            raise ObserverError("A budget uses either hops or charge, not both")
        if self.hops is not None and self.hops < 0:
            raise ObserverError(f"Hop budget must be non-negative, got {self.hops}")
        if self.decay is not None and not 0 < self.decay <= 1:
            raise ObserverError(f"Charge decay must lie in (0, 1], got {self.decay}")
        if self.threshold < 0:
            raise ObserverError("Charge threshold must be non-negative")

    @classmethod
    def unbounded(cls) -> PropagationBudget:
        return cls()

    @classmethod
    def parse(cls, text: str) -> PropagationBudget:
        """Parse ``inf``, a hop count ``k`` or ``charge:λ,θ[,split]``.

        Raises:
            ObserverError: If the text is not a budget
        """
        raw = text.strip().lower()
        if raw in ("", "inf", "∞", "infinity"):
            return cls.unbounded()
        if raw.startswith("charge:"):
            parts = [part.strip() for part in raw[len("charge:") :].split(",")]
            split = parts[-1] == "split"
            if split:
                parts = parts[:-1]
            if len(parts) != 2:
                raise ObserverError(f"Charge budget needs λ and θ, got {text!r}")
            try:
                decay, threshold = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise ObserverError(f"Invalid charge budget {text!r}") from exc
            update = ConfigManager.load_config().update
            assert update is not None
            return cls(
                decay=decay, threshold=threshold, start=update.charge_start, split=split
            )
        try:
            return cls(hops=int(raw))
        except ValueError as exc:
            raise ObserverError(f"Invalid budget {text!r}") from exc

    @property
    def is_unbounded(self) -> bool:
        return self.hops is None and self.decay is None

    def initial(self) -> float:
        if self.hops is not None:
            return float(self.hops)
        if self.decay is not None:
            return self.start
        return math.inf

    def transmit(self, level: float, fanout: int) -> float:
        if self.hops is not None:
            return level - 1
        if self.decay is not None:
            charge = level * self.decay
            return charge / fanout if self.split and fanout else charge
        return level

    def fires(self, level: float) -> bool:
        if self.hops is not None:
            return level >= 0
        if self.decay is not None:
            return level >= self.threshold
        return True

    def __str__(self) -> str:
        if self.hops is not None:
            return str(self.hops)
        if self.decay is not None:
            suffix = ",split" if self.split else ""
            return f"charge:{self.decay:g},{self.threshold:g}{suffix}"
        return "inf"


@dataclass(frozen=True)
class UpdateReport:
    """What one observation changed in the conjectured state."""

    observed: Element
    flags: Tuple[Element, ...]
    removed: Tuple[Element, ...]
    added: Tuple[Element, ...]
    reached_all: bool
    visits: int
    coherent: bool
    budget: str = "inf"

    def to_dict(self) -> Dict[str, object]:
        return {
            "observed": str(self.observed),
            "flags": [str(e) for e in self.flags],
            "removed": [str(e) for e in self.removed],
            "added": [str(e) for e in self.added],
            "reached_all": self.reached_all,
            "visits": self.visits,
            "coherent": self.coherent,
            "budget": self.budget,
        }


def _excite(
    p: PocSet, a: Element, conjecture: FrozenSet[Element], budget: PropagationBudget
) -> List[Element]:
    # Best-first over covering relations; levels never increase along an
    # edge, so the first pop of a node carries its best level.
    rank = {element: i for i, element in enumerate(p.proper_elements)}
    best: Dict[Element, float] = {a: budget.initial()}
    heap = [(-best[a], rank[a], a)]
    done = set()
    reached = []
    while heap:
        negative, _, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        level = -negative
        reached.append(node)
        successors = p.cover_successors[node]
        for child in successors:
            if node in conjecture:
                child_level = level
            else:
                child_level = budget.transmit(level, len(successors))
            if budget.fires(child_level) and child_level > best.get(child, -math.inf):
                best[child] = child_level
                heapq.heappush(heap, (-child_level, rank[child], child))
    return reached


def update_dissipative(
    o: Observer, a: ElementLike, budget: PropagationBudget
) -> Tuple[Observer, UpdateReport]:
    """Observe ``a`` with bounded propagation.

    Only excited elements are checked against the conjecture, so the result
    may be incoherent; the report records whether it is.

    Raises:
        ObserverError: If ``a`` is unknown or trivial
    """
    try:
        observed = o.pocset.proper(a)
    except PocSetError as exc:
        raise ObserverError(str(exc)) from exc

    reached = _excite(o.pocset, observed, o.epsilon, budget)
    flags = tuple(sorted(b for b in reached if b.star in o.epsilon))
    removed = frozenset(b.star for b in flags)
    epsilon = (o.epsilon - removed) | {observed} | set(flags)
    report = UpdateReport(
        observed=observed,
        flags=flags,
        removed=tuple(sorted(removed)),
        added=tuple(sorted(epsilon - o.epsilon)),
        reached_all=set(reached) == set(o.pocset.upset(observed)),
        visits=len(reached),
        coherent=is_coherent(o.pocset, epsilon),
        budget=str(budget),
    )
    logger.debug(
        "Observed %s: %d visits, %d flags, reached_all=%s",
        observed,
        report.visits,
        len(flags),
        report.reached_all,
    )
    return replace(o, epsilon=frozenset(epsilon)), report


def update_idealized(o: Observer, a: ElementLike) -> Tuple[Observer, UpdateReport]:
    """Observe ``a`` and excite its whole up-set.

    When ``epsilon`` is a vertex the result is the vertex of V(a) nearest
    to it.
    """
    return update_dissipative(o, a, PropagationBudget.unbounded())
