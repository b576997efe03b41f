"""Structural updating of observers.

A degeneration collapses a corner V(a, b) of the dual graph by adding the
relation ``a < b*`` and closing; an expansion adds a fresh tag or relaxes a
covering relation. Both are witnessed by a retraction ``r: Q -> P`` that is
the identity on the tags of the smaller poc-set ``P``. Excitation moves
between the two dual graphs along the injective dual map r°.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from config import ConfigManager
from median_dual import Corner, DualMap, MedianGraph, build_dual, corner, dual_morphism
from observer_update import Observer, prob
from pocset_core import (
    Element,
    ElementLike,
    ONE,
    PocMorphism,
    PocSet,
    PocSetError,
    check_tag,
    close_order,
    closure_digraph,
)
from realization import Realization, RealizationError, Weight

__all__ = [
    "AuditReport",
    "CornerCandidate",
    "DeformationError",
    "DeformationMove",
    "MoveKind",
    "MoveLog",
    "MoveLogError",
    "Retraction",
    "apply_degeneration",
    "apply_expansion",
    "audit_postulate",
    "degenerate",
    "degeneration_candidates",
    "expand",
    "pullback_weights",
    "transport_weights",
]

logger = logging.getLogger(__name__)


class DeformationError(ValueError):
    """Raised when a degeneration or expansion cannot be carried out."""


class MoveLogError(ValueError):
    """Raised for logs that cannot be audited."""


def _weight_tolerance() -> float:
    deformation = ConfigManager.load_config().deformation
    assert deformation is not None
    return deformation.weight_tolerance


def _is_exact(weights: Iterable[Weight]) -> bool:
    return all(isinstance(w, (int, Fraction)) for w in weights)


def _same_weight(x: Weight, y: Weight) -> bool:
    if _is_exact((x, y)):
        return x == y
    return abs(float(x) - float(y)) <= _weight_tolerance()


def _normalized(weights: Sequence[Weight], what: str) -> Tuple[Weight, ...]:
    total = sum(weights, Fraction(0))
    if total <= 0:
        raise DeformationError(f"{what} carries no mass")
    if _is_exact(weights):
        if total == 1:
            return tuple(weights)
    elif abs(float(total) - 1.0) <= _weight_tolerance():
        return tuple(weights)
    logger.warning("%s sums to %s; normalizing", what, total)
    return tuple(w / total for w in weights)


# ============================================================================
# Retractions
# ============================================================================


@dataclass(frozen=True)
class Retraction:
    """r: Q -> P, the identity on the tags of P.

    ``merges`` lists the tags of Q that were identified with an element of P.
    """

    source: PocSet
    target: PocSet
    morphism: PocMorphism
    merges: Tuple[Tuple[str, Element], ...] = ()

    def __post_init__(self) -> None:
        if self.morphism.source != self.source or self.morphism.target != self.target:
            raise DeformationError("Retraction morphism has the wrong endpoints")
        missing = set(self.target.alphabet) - set(self.source.alphabet)
        if missing:
            raise DeformationError(
                f"Retraction target has tags outside the source: {sorted(missing)}"
            )
        for tag in self.target.alphabet:
            if self.morphism(Element(tag)) != Element(tag):
                raise DeformationError(f"Retraction moves surviving tag {tag!r}")
        try:
            self.morphism.check()
        except PocSetError as exc:
            raise DeformationError(str(exc)) from exc

    @classmethod
    def identity(cls, p: PocSet) -> Retraction:
        return cls(p, p, PocMorphism.identity(p))

    @property
    def is_identity(self) -> bool:
        return self.source == self.target

    def dual(
        self,
        source_graph: Optional[MedianGraph] = None,
        target_graph: Optional[MedianGraph] = None,
    ) -> DualMap:
        """r°: Γ(P) -> Γ(Q)."""
        return dual_morphism(self.morphism, source_graph, target_graph)

    def to_dict(self) -> Dict[str, object]:
        return {
            "from": list(self.source.alphabet),
            "to": list(self.target.alphabet),
            "map": {tag: str(image) for tag, image in self.morphism.mapping},
            "merges": {tag: str(image) for tag, image in self.merges},
        }


def transport_weights(
    r: Retraction,
    p: Sequence[Weight],
    source_graph: Optional[MedianGraph] = None,
    target_graph: Optional[MedianGraph] = None,
) -> Tuple[Weight, ...]:
    """δ_r(p): weights on Γ(P) pushed into Γ(Q), zero off the image of r°.

    Raises:
        DeformationError: If ``p`` does not match Γ(P) or carries no mass
    """
    graph_q = source_graph or build_dual(r.source)
    graph_p = target_graph or build_dual(r.target)
    if len(p) != len(graph_p):
        raise DeformationError(
            f"Expected {len(graph_p)} weights for the smaller poc-set, got {len(p)}"
        )
    weights = _normalized(p, "Transported excitation")
    dual = r.dual(graph_q, graph_p)
    zero: Weight = Fraction(0) if _is_exact(weights) else 0.0
    pushed: List[Weight] = [zero] * len(graph_q)
    for vertex, weight in zip(graph_p.vertices, weights):
        pushed[graph_q.index[dual(vertex)]] = weight
    return tuple(pushed)


def pullback_weights(
    r: Retraction,
    q: Sequence[Weight],
    source_graph: Optional[MedianGraph] = None,
    target_graph: Optional[MedianGraph] = None,
) -> Tuple[Weight, ...]:
    """Restriction of weights on Γ(Q) along r°; not renormalized."""
    graph_q = source_graph or build_dual(r.source)
    graph_p = target_graph or build_dual(r.target)
    if len(q) != len(graph_q):
        raise DeformationError(
            f"Expected {len(graph_q)} weights for the larger poc-set, got {len(q)}"
        )
    dual = r.dual(graph_q, graph_p)
    return tuple(q[graph_q.index[dual(vertex)]] for vertex in graph_p.vertices)


# ============================================================================
# Degeneration and expansion
# ============================================================================


def degenerate(q: PocSet, a: ElementLike, b: ElementLike) -> Tuple[PocSet, Retraction]:
    """Empty the corner V(a, b) by adding ``a < b*``.

    Elements the closure identifies are merged; the lexicographically
    smallest tag of each class survives.

    Raises:
        DeformationError: If the closure makes a proper element trivial
    """
    try:
        a, b = q.proper(a), q.proper(b)
    except PocSetError as exc:
        raise DeformationError(str(exc)) from exc
    if a.tag == b.tag:
        raise DeformationError(f"Corner needs two questions, got {a} and {b}")
    if q.le(a, b.star):
        logger.debug("Corner V(%s, %s) is already empty", a, b)
        return q, Retraction.identity(q)

    closure = closure_digraph(q.alphabet, q.declared_relations() + [(a, b.star)])
    forced = sorted(x for x in q.proper_elements if closure.has_edge(x, x.star))
    if forced:
        x = forced[0]
        raise DeformationError(
            f"Adding {a} < {b.star} forces {x} ≤ {x.star}, making {x} trivial"
        )

    representative: Dict[Element, Element] = {x: x for x in q.proper_elements}
    for x in q.proper_elements:
        equal = [
            y
            for y in q.proper_elements
            if closure.has_edge(x, y) and closure.has_edge(y, x)
        ]
        if equal:
            representative[x] = min(equal + [x], key=lambda e: e.tag)
    survivors = tuple(
        tag for tag in q.alphabet if representative[Element(tag)].tag == tag
    )
    relations = sorted(
        {
            (representative[x], representative[y])
            for x, y in closure.edges
            if x.is_proper and y.is_proper and representative[x] != representative[y]
        }
    )
    try:
        p = close_order(survivors, relations)
    except PocSetError as exc:
        raise DeformationError(str(exc)) from exc

    mapping = tuple((tag, representative[Element(tag)]) for tag in q.alphabet)
    merges = tuple((tag, image) for tag, image in mapping if image.tag != tag)
    retraction = Retraction(q, p, PocMorphism(q, p, mapping), merges)
    logger.debug(
        "Degenerated V(%s, %s): %d -> %d tags, merges %s",
        a,
        b,
        len(q.alphabet),
        len(p.alphabet),
        [f"{tag}->{image}" for tag, image in merges],
    )
    return p, retraction


def expand(
    p: PocSet,
    new_tag: Optional[str] = None,
    relax: Optional[Tuple[ElementLike, ElementLike]] = None,
    anchor: ElementLike = ONE,
) -> Tuple[PocSet, Retraction]:
    """Enlarge ``p`` by a fresh tag or by dropping a covering relation.

    A fresh tag is sent to ``anchor`` by the retraction. A relaxed order is
    the closure of the remaining covering relations, so relations implied
    only through the dropped cover go with it.

    Raises:
        DeformationError: If the tag exists or the relation is not a cover
    """
    if (new_tag is None) == (relax is None):
        raise DeformationError("Expansion needs exactly one of a new tag or a relation")

    if new_tag is not None:
        try:
            check_tag(new_tag)
            image = p.element(anchor)
        except PocSetError as exc:
            raise DeformationError(str(exc)) from exc
        if new_tag in p.alphabet:
            raise DeformationError(f"Tag {new_tag!r} already exists")
        q = p.with_alphabet([new_tag])
        mapping = tuple((tag, Element(tag)) for tag in p.alphabet) + ((new_tag, image),)
        return q, Retraction(q, p, PocMorphism(q, p, mapping))

    assert relax is not None
    try:
        x, y = p.proper(relax[0]), p.proper(relax[1])
    except PocSetError as exc:
        raise DeformationError(str(exc)) from exc
    if not p.lt(x, y):
        raise DeformationError(f"Relation {x} < {y} is absent")
    if (x, y) not in p.hasse_covers:
        raise DeformationError(f"Relation {x} < {y} is implied, not a covering relation")
    dropped = {(x, y), (y.star, x.star)}
    kept = [pair for pair in p.hasse_covers if pair not in dropped]
    try:
        q = close_order(p.alphabet, kept)
    except PocSetError as exc:
        raise DeformationError(str(exc)) from exc
    mapping = tuple((tag, Element(tag)) for tag in p.alphabet)
    return q, Retraction(q, p, PocMorphism(q, p, mapping))


# ============================================================================
# Candidates and observer-level moves
# ============================================================================


@dataclass(frozen=True)
class CornerCandidate:
    corner: Corner
    probability: Weight

    @property
    def a(self) -> Element:
        return self.corner.a

    @property
    def b(self) -> Element:
        return self.corner.b


def degeneration_candidates(
    o: Observer, threshold: Optional[float] = None
) -> List[CornerCandidate]:
    """Non-empty corners with Pr_O below ``threshold``, least likely first.

    Raises:
        DeformationError: If the threshold is outside (0, 1]
    """
    if threshold is None:
        deformation = ConfigManager.load_config().deformation
        assert deformation is not None
        threshold = deformation.default_threshold
    if not 0 < threshold <= 1:
        raise DeformationError(f"Threshold must lie in (0, 1], got {threshold}")
    elements = o.pocset.proper_elements
    found = []
    for i, x in enumerate(elements):
        for y in elements[i + 1 :]:
            if x.tag == y.tag:
                continue
            candidate = corner(o.graph, x, y)
            if candidate.is_empty:
                continue
            probability = prob(o, candidate.vertex_set)
            if probability < threshold:
                found.append(CornerCandidate(candidate, probability))
    return sorted(found, key=lambda c: (c.probability, c.a, c.b))


class MoveKind(Enum):
    DEGENERATION = "degeneration"
    EXPANSION = "expansion"


@dataclass(frozen=True)
class DeformationMove:
    """One structural step with the excitation it leaves behind."""

    kind: MoveKind
    retraction: Retraction
    weights: Tuple[Weight, ...]
    relation: Optional[Tuple[Element, Element]] = None
    new_tag: Optional[str] = None
    discarded_mass: Weight = Fraction(0)

    def to_dict(self) -> Dict[str, object]:
        record: Dict[str, object] = {
            "kind": self.kind.value,
            "retraction": self.retraction.to_dict(),
            "discarded_mass": str(self.discarded_mass),
            "support": sum(1 for w in self.weights if w > 0),
        }
        if self.relation is not None:
            key = "added" if self.kind is MoveKind.DEGENERATION else "relaxed"
            record[key] = [str(self.relation[0]), str(self.relation[1])]
        if self.new_tag is not None:
            record["new_tag"] = self.new_tag
        return record


def _map_epsilon(r: Retraction, epsilon: FrozenSet[Element]) -> FrozenSet[Element]:
    return frozenset(r.morphism(e) for e in epsilon)


def apply_degeneration(
    o: Observer, a: ElementLike, b: ElementLike
) -> Tuple[Observer, DeformationMove]:
    """Degenerate the observer's poc-set on V(a, b).

    Excitation is pulled back along r° and renormalized; the corner's mass
    is discarded. Sensors that contradict the new order are dropped.

    Raises:
        DeformationError: If the degeneration fails or removes all mass
    """
    p, r = degenerate(o.pocset, a, b)
    graph = o.graph if r.is_identity else build_dual(p)
    pulled = pullback_weights(r, o.excitation, o.graph, graph)
    kept = sum(pulled, Fraction(0))
    if kept <= 0:
        raise DeformationError("Degeneration would discard all excitation")
    weights = _normalized(pulled, "Pulled-back excitation")
    realization: Optional[Realization] = None
    if o.realization is not None:
        realization = o.realization if r.is_identity else o.realization.restrict(p)
        if realization is None:
            logger.warning("Sensors contradict the degenerated order; dropping them")
    observer = Observer(p, graph, weights, _map_epsilon(r, o.epsilon), realization)
    first, second = o.pocset.proper(a), o.pocset.proper(b)
    move = DeformationMove(
        MoveKind.DEGENERATION,
        r,
        weights,
        relation=(first, second.star),
        discarded_mass=1 - kept / o.total,
    )
    return observer, move


def apply_expansion(
    o: Observer,
    new_tag: Optional[str] = None,
    relax: Optional[Tuple[ElementLike, ElementLike]] = None,
    anchor: ElementLike = ONE,
    sensor: Optional[Iterable[int]] = None,
) -> Tuple[Observer, DeformationMove]:
    """Expand the observer's poc-set; new vertices start with zero excitation."""
    q, r = expand(o.pocset, new_tag=new_tag, relax=relax, anchor=anchor)
    graph = build_dual(q)
    weights = transport_weights(r, o.excitation, graph, o.graph)
    realization: Optional[Realization] = None
    if o.realization is not None:
        if new_tag is None:
            realization = o.realization.restrict(q)
        elif sensor is not None:
            sensors = dict(o.realization.sensors)
            sensors[new_tag] = frozenset(sensor)
            try:
                realization = Realization.from_sensors(
                    q, o.realization.world, sensors, o.realization.measure_positive
                )
            except RealizationError as exc:
                raise DeformationError(str(exc)) from exc
        else:
            logger.warning("No sensor for new tag %r; dropping sensors", new_tag)
    observer = Observer(q, graph, weights, o.epsilon, realization)
    relation = None
    if relax is not None:
        relation = (o.pocset.proper(relax[0]), o.pocset.proper(relax[1]))
    move = DeformationMove(MoveKind.EXPANSION, r, weights, relation, new_tag)
    return observer, move


# ============================================================================
# Move log and audit
# ============================================================================


@dataclass
class MoveLog:
    """Observer snapshots interleaved with the moves between them."""

    snapshots: List[Observer] = field(default_factory=list)
    moves: List[DeformationMove] = field(default_factory=list)

    @classmethod
    def start(cls, observer: Observer) -> MoveLog:
        return cls([observer], [])

    def append(self, move: DeformationMove, observer: Observer) -> None:
        self.moves.append(move)
        self.snapshots.append(observer)

    def __len__(self) -> int:
        return len(self.moves)


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    step: Optional[int] = None
    violation: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        return {"ok": self.ok, "step": self.step, "violation": self.violation}


def _replay(move: DeformationMove) -> Optional[str]:
    """Redo the recorded single change; its retraction must match the logged one."""
    r = move.retraction
    try:
        if move.kind is MoveKind.DEGENERATION:
            if move.relation is None:
                return "degeneration records no added relation"
            x, y = move.relation
            _, expected = degenerate(r.source, x, y.star)
        elif move.new_tag is not None and move.relation is None:
            anchor = r.morphism.as_dict().get(move.new_tag)
            if anchor is None:
                return f"retraction has no image for new tag {move.new_tag!r}"
            _, expected = expand(r.target, new_tag=move.new_tag, anchor=anchor)
        elif move.relation is not None and move.new_tag is None:
            _, expected = expand(r.target, relax=move.relation)
        else:
            return "expansion must add one tag or relax one relation"
    except (DeformationError, PocSetError) as exc:
        return f"recorded change cannot be replayed: {exc}"
    if expected.source != r.source or expected.target != r.target:
        return f"{move.kind.value} is not a single change"
    if dict(expected.morphism.mapping) != dict(r.morphism.mapping):
        return f"{move.kind.value} retraction disagrees with the recorded change"
    return None


def _audit_step(before: Observer, after: Observer, move: DeformationMove) -> Optional[str]:
    r = move.retraction
    if move.kind is MoveKind.DEGENERATION:
        if r.source != before.pocset or r.target != after.pocset:
            return "degeneration retraction does not join the snapshots"
        problem = _replay(move)
        if problem is not None:
            return problem
        try:
            expected = _normalized(
                pullback_weights(r, before.excitation, before.graph, after.graph),
                "Pulled-back excitation",
            )
        except DeformationError as exc:
            return str(exc)
    else:
        if r.source != after.pocset or r.target != before.pocset:
            return "expansion retraction does not join the snapshots"
        problem = _replay(move)
        if problem is not None:
            return problem
        expected = transport_weights(r, before.excitation, after.graph, before.graph)
    if len(expected) != len(after.excitation):
        return "excitation does not fit the new dual graph"
    for vertex, want, got in zip(after.graph.vertices, expected, after.excitation):
        if not _same_weight(want, got):
            shown = ",".join(sorted(str(e) for e in vertex))
            return f"weight at {{{shown}}} is {got}, transport gives {want}"
    return None


def audit_postulate(log: MoveLog) -> AuditReport:
    """Check that consecutive snapshots are joined by their recorded move.

    Raises:
        MoveLogError: If the log has fewer than two snapshots or is misaligned
    """
    if len(log.snapshots) < 2:
        raise MoveLogError("An audit needs at least two snapshots")
    if len(log.moves) != len(log.snapshots) - 1:
        raise MoveLogError(
            f"{len(log.snapshots)} snapshots cannot be joined by {len(log.moves)} moves"
        )
    for step, move in enumerate(log.moves):
        problem = _audit_step(log.snapshots[step], log.snapshots[step + 1], move)
        if problem is not None:
            logger.debug("Audit failed at step %d: %s", step, problem)
            return AuditReport(False, step, problem)
    return AuditReport(True)
