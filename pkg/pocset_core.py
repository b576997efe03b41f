"""Finite poc-sets: elements, order closure, validation, pair classification
and poc-morphisms.

A poc-set is stored over a finite alphabet of opaque tags. Each tag ``t``
contributes the proper elements ``t`` and ``t*``; the trivial elements
``0`` and ``1 = 0*`` are always present. The strict order is materialized
as a closed relation over all ``2n + 2`` elements so that every axiom can
be checked pairwise.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import networkx as nx

__all__ = [
    "Element",
    "ElementLike",
    "Nesting",
    "ONE",
    "PairRelation",
    "PocMorphism",
    "PocSet",
    "PocSetError",
    "TWO",
    "ValidationReport",
    "Vertex",
    "Violation",
    "ZERO",
    "classify_pair",
    "close_order",
    "closure_digraph",
    "compose",
    "enumerate_morphisms",
    "hom_to_two",
    "incoherent_pairs",
    "is_coherent",
    "validate",
]

logger = logging.getLogger(__name__)

ZERO_TAG = "0"
STAR_CHARS = ("*", "∗")


class PocSetError(ValueError):
    """Raised for malformed elements, failed closures and invalid morphisms."""


@dataclass(frozen=True, order=True)
class Element:
    """One element of a poc-set: a tag, possibly complemented."""

    tag: str
    negated: bool = False

    @property
    def star(self) -> Element:
        """The complement ``a*``."""
        return Element(self.tag, not self.negated)

    @property
    def is_trivial(self) -> bool:
        return self.tag == ZERO_TAG

    @property
    def is_proper(self) -> bool:
        return self.tag != ZERO_TAG

    def __str__(self) -> str:
        if self.is_trivial:
            return "1" if self.negated else "0"
        return f"{self.tag}*" if self.negated else self.tag

    @classmethod
    def parse(cls, text: Union[str, Element]) -> Element:
        """Parse ``"a"``, ``"a*"`` / ``"a∗"``, ``"0"`` or ``"1"``.

        Raises:
            PocSetError: If the text does not name an element
        """
        if isinstance(text, Element):
            return text
        if not isinstance(text, str):
            raise PocSetError(f"Element must be a string, got {type(text)!r}")
        raw = text.strip()
        if raw == "0":
            return ZERO
        if raw == "1":
            return ONE
        negated = False
        while raw and raw[-1] in STAR_CHARS:
            raw = raw[:-1]
            negated = not negated
        check_tag(raw)
        return cls(raw, negated)


ZERO = Element(ZERO_TAG)
ONE = ZERO.star

ElementLike = Union[str, Element]
Vertex = FrozenSet[Element]


def check_tag(tag: str) -> str:
    """Validate a user alphabet tag.

    Raises:
        PocSetError: If the tag is empty, trivial or carries a star
    """
    if not isinstance(tag, str) or not tag.strip():
        raise PocSetError("Tag must be a non-empty string")
    if tag != tag.strip():
        raise PocSetError(f"Tag has surrounding whitespace: {tag!r}")
    if tag in ("0", "1"):
        raise PocSetError(f"Tag {tag!r} is reserved for a trivial element")
    if any(char in tag for char in STAR_CHARS):
        raise PocSetError(f"Tag {tag!r} must not contain a complement marker")
    return tag


@dataclass(frozen=True)
class PocSet:
    """A finite poc-set over an ordered alphabet.

    ``order`` holds the strict relation ``x < y`` over all elements,
    trivial ones included. Instances built by :func:`close_order` satisfy
    every axiom; raw instances may be checked with :func:`validate`.
    """

    alphabet: Tuple[str, ...]
    order: FrozenSet[Tuple[Element, Element]]

    @cached_property
    def elements(self) -> Tuple[Element, ...]:
        return (ZERO, ONE) + self.proper_elements

    @cached_property
    def proper_elements(self) -> Tuple[Element, ...]:
        return tuple(
            element
            for tag in self.alphabet
            for element in (Element(tag), Element(tag, True))
        )

    @cached_property
    def _tag_set(self) -> FrozenSet[str]:
        return frozenset(self.alphabet)

    def __contains__(self, element: object) -> bool:
        if not isinstance(element, Element):
            return False
        return element.is_trivial or element.tag in self._tag_set

    def element(self, value: ElementLike) -> Element:
        """Resolve ``value`` to an element of this poc-set.

        Raises:
            PocSetError: If the element is unknown
        """
        element = Element.parse(value)
        if element not in self:
            raise PocSetError(f"Unknown element {element}")
        return element

    def proper(self, value: ElementLike) -> Element:
        """Resolve ``value`` to a proper element of this poc-set."""
        element = self.element(value)
        if element.is_trivial:
            raise PocSetError(f"Element {element} is trivial")
        return element

    def le(self, a: Element, b: Element) -> bool:
        return a == b or (a, b) in self.order

    def lt(self, a: Element, b: Element) -> bool:
        return (a, b) in self.order

    def upset(self, a: Element) -> Tuple[Element, ...]:
        """Proper elements ``b`` with ``a <= b`` (``a`` included)."""
        return tuple(b for b in self.proper_elements if self.le(a, b))

    def downset(self, a: Element) -> Tuple[Element, ...]:
        return tuple(b for b in self.proper_elements if self.le(b, a))

    @cached_property
    def proper_relations(self) -> Tuple[Tuple[Element, Element], ...]:
        """Strict relations among proper elements, in canonical order."""
        return tuple(
            sorted(
                (x, y) for (x, y) in self.order if x.is_proper and y.is_proper
            )
        )

    @cached_property
    def hasse_covers(self) -> Tuple[Tuple[Element, Element], ...]:
        """Covering pairs ``x < y`` among proper elements."""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.proper_elements)
        graph.add_edges_from(self.proper_relations)
        reduced = nx.transitive_reduction(graph)
        return tuple(sorted(reduced.edges()))

    @cached_property
    def cover_successors(self) -> Dict[Element, Tuple[Element, ...]]:
        successors: Dict[Element, List[Element]] = {
            element: [] for element in self.proper_elements
        }
        for lower, upper in self.hasse_covers:
            successors[lower].append(upper)
        return {key: tuple(value) for key, value in successors.items()}

    def is_nested(self, a: Element, b: Element) -> bool:
        return not classify_pair(self, a, b).is_transverse

    def transverse_pairs(self) -> List[Tuple[str, str]]:
        """Unordered tag pairs whose elements are transverse."""
        return [
            (s, t)
            for s, t in itertools.combinations(self.alphabet, 2)
            if classify_pair(self, Element(s), Element(t)).is_transverse
        ]

    @property
    def is_nested_pocset(self) -> bool:
        return not self.transverse_pairs()

    def declared_relations(self) -> List[Tuple[Element, Element]]:
        """One representative per ``{x<y, y*<x*}`` pair, for serialization."""
        seen = set()
        relations = []
        for x, y in self.proper_relations:
            key = min((x, y), (y.star, x.star))
            if key not in seen:
                seen.add(key)
                relations.append(key)
        return sorted(relations)

    def with_alphabet(self, extra: Sequence[str]) -> PocSet:
        """Add fresh tags with no relations."""
        return close_order(
            tuple(self.alphabet) + tuple(extra), self.declared_relations()
        )


# ============================================================================
# Validation
# ============================================================================


@dataclass(frozen=True)
class Violation:
    """One violated axiom with its witnessing elements."""

    axiom: str
    witness: Tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.axiom}: {', '.join(self.witness)}"


@dataclass(frozen=True)
class ValidationReport:
    """Result of :func:`validate`."""

    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


def validate(p: PocSet) -> ValidationReport:
    """Check every poc-set axiom; violations are reported, never raised."""
    violations: List[Violation] = []

    seen_tags = set()
    for tag in p.alphabet:
        try:
            check_tag(tag)
        except PocSetError as exc:
            violations.append(Violation(str(exc), (repr(tag),)))
        if tag in seen_tags:
            violations.append(Violation("duplicate tag", (tag,)))
        seen_tags.add(tag)

    for x, y in sorted(p.order):
        if x not in p or y not in p:
            violations.append(Violation("relation on unknown element", (str(x), str(y))))

    for x in p.proper_elements + (ONE,):
        if not p.lt(ZERO, x):
            violations.append(Violation("0 is not below", (str(x),)))
        if x != ONE and not p.lt(x, ONE):
            violations.append(Violation("1 is not above", (str(x),)))

    for x in p.elements:
        if (x, x) in p.order:
            violations.append(Violation("order is reflexive at", (str(x),)))

    for x, y in sorted(p.order):
        if x == y:
            continue
        if (y, x) in p.order:
            if x < y:
                violations.append(Violation("antisymmetry fails", (str(x), str(y))))
        if (y.star, x.star) not in p.order:
            violations.append(
                Violation("involution is not order-reversing", (f"{x} < {y}",))
            )
        if x.is_proper and y == x.star:
            violations.append(Violation(f"{x} ≤ {y} with {x} proper", (str(x),)))

    by_lower: Dict[Element, List[Element]] = {}
    for x, y in p.order:
        by_lower.setdefault(x, []).append(y)
    for x, y in sorted(p.order):
        for z in by_lower.get(y, ()):
            if z != x and (x, z) not in p.order:
                violations.append(
                    Violation("transitivity fails", (str(x), str(y), str(z)))
                )

    return ValidationReport(tuple(violations))


# ============================================================================
# Closure
# ============================================================================


def _parse_relations(
    alphabet: Sequence[str], relations: Iterable[Tuple[ElementLike, ElementLike]]
) -> List[Tuple[Element, Element]]:
    tags = set(alphabet)
    parsed = []
    for raw_left, raw_right in relations:
        left, right = Element.parse(raw_left), Element.parse(raw_right)
        for element in (left, right):
            if element.is_trivial:
                raise PocSetError(f"Relations may not mention trivial element {element}")
            if element.tag not in tags:
                raise PocSetError(f"Relation mentions unknown tag {element.tag!r}")
        if left == right:
            raise PocSetError(f"Relation {left} < {right} is reflexive")
        parsed.append((left, right))
    return parsed


def closure_digraph(
    alphabet: Sequence[str], relations: Iterable[Tuple[ElementLike, ElementLike]]
) -> nx.DiGraph:
    """Transitive closure of the declared relations, their involutive
    duals and the trivial bounds. Forced equalities appear as self-loops.
    """
    alphabet = tuple(alphabet)
    for tag in alphabet:
        check_tag(tag)
    if len(set(alphabet)) != len(alphabet):
        raise PocSetError("Alphabet contains duplicate tags")

    graph = nx.DiGraph()
    proper = [e for t in alphabet for e in (Element(t), Element(t, True))]
    graph.add_nodes_from([ZERO, ONE] + proper)
    graph.add_edge(ZERO, ONE)
    for element in proper:
        graph.add_edge(ZERO, element)
        graph.add_edge(element, ONE)
    for left, right in _parse_relations(alphabet, relations):
        graph.add_edge(left, right)
        graph.add_edge(right.star, left.star)
    return nx.transitive_closure(graph, reflexive=False)


def close_order(
    alphabet: Sequence[str], relations: Iterable[Tuple[ElementLike, ElementLike]]
) -> PocSet:
    """Smallest poc-set order containing the declared ``left < right`` relations.

    Raises:
        PocSetError: If the closure forces ``a <= a*`` for a proper ``a`` or
            identifies two distinct elements
    """
    closure = closure_digraph(alphabet, relations)

    forced_trivial = sorted(
        x for x in closure.nodes if x.is_proper and closure.has_edge(x, x.star)
    )
    if forced_trivial:
        x = forced_trivial[0]
        raise PocSetError(f"Closure forces {x} ≤ {x.star} with {x} proper")

    for component in nx.strongly_connected_components(closure):
        if len(component) > 1:
            names = " = ".join(str(e) for e in sorted(component))
            raise PocSetError(f"Closure forces {names}")

    order = frozenset((x, y) for x, y in closure.edges if x != y)
    logger.debug(
        "Closed order on %d tags: %d strict relations", len(alphabet), len(order)
    )
    return PocSet(tuple(alphabet), order)


TWO = close_order((), ())


# ============================================================================
# Pair classification and coherence
# ============================================================================


class Nesting(Enum):
    """The four nesting relations a pair ``(a, b)`` may satisfy."""

    A_LE_B = "a<b"
    A_LE_B_STAR = "a<b*"
    A_STAR_LE_B = "a*<b"
    A_STAR_LE_B_STAR = "a*<b*"


@dataclass(frozen=True)
class PairRelation:
    """Nested (with the applicable relation) or transverse."""

    a: Element
    b: Element
    nesting: Optional[Nesting] = None

    @property
    def is_transverse(self) -> bool:
        return self.nesting is None

    @property
    def witness(self) -> Optional[Tuple[Element, Element]]:
        if self.nesting is Nesting.A_LE_B:
            return (self.a, self.b)
        if self.nesting is Nesting.A_LE_B_STAR:
            return (self.a, self.b.star)
        if self.nesting is Nesting.A_STAR_LE_B:
            return (self.a.star, self.b)
        if self.nesting is Nesting.A_STAR_LE_B_STAR:
            return (self.a.star, self.b.star)
        return None

    def __str__(self) -> str:
        witness = self.witness
        if witness is None:
            return f"{self.a} ⋔ {self.b}"
        return f"{witness[0]} < {witness[1]}"


def classify_pair(p: PocSet, a: ElementLike, b: ElementLike) -> PairRelation:
    """Classify a pair of proper elements as nested or transverse.

    Raises:
        PocSetError: If an element is trivial, unknown, or ``a in {b, b*}``
    """
    a, b = p.proper(a), p.proper(b)
    if a.tag == b.tag:
        raise PocSetError(f"Cannot classify {a} against {b}: same question")
    for nesting, (x, y) in (
        (Nesting.A_LE_B, (a, b)),
        (Nesting.A_LE_B_STAR, (a, b.star)),
        (Nesting.A_STAR_LE_B, (a.star, b)),
        (Nesting.A_STAR_LE_B_STAR, (a.star, b.star)),
    ):
        if p.lt(x, y):
            return PairRelation(a, b, nesting)
    return PairRelation(a, b)


def incoherent_pairs(p: PocSet, family: Iterable[Element]) -> List[Tuple[Element, Element]]:
    """Pairs ``(a, b)`` of the family with ``a <= b*``, each reported once."""
    members = sorted(set(family))
    pairs = []
    for i, a in enumerate(members):
        for b in members[i:]:
            if p.le(a, b.star):
                pairs.append((a, b))
    return pairs


def is_coherent(p: PocSet, family: Iterable[Element]) -> bool:
    return not incoherent_pairs(p, family)


# ============================================================================
# Morphisms
# ============================================================================


@dataclass(frozen=True)
class PocMorphism:
    """A poc-morphism given by its values on the positive tags of ``source``.

    The map extends by ``f(0) = 0`` and ``f(a*) = f(a)*``, so
    ∗-equivariance holds by construction.
    """

    source: PocSet
    target: PocSet
    mapping: Tuple[Tuple[str, Element], ...]

    @classmethod
    def from_mapping(
        cls, source: PocSet, target: PocSet, mapping: Mapping[str, ElementLike]
    ) -> PocMorphism:
        known = [tag for tag in source.alphabet if tag in mapping]
        extra = sorted(tag for tag in mapping if tag not in source.alphabet)
        resolved = tuple((tag, Element.parse(mapping[tag])) for tag in known + extra)
        return cls(source, target, resolved)

    @classmethod
    def identity(cls, p: PocSet) -> PocMorphism:
        return cls(p, p, tuple((tag, Element(tag)) for tag in p.alphabet))

    @cached_property
    def _table(self) -> Dict[str, Element]:
        return dict(self.mapping)

    def as_dict(self) -> Dict[str, Element]:
        return dict(self._table)

    def __call__(self, element: Element) -> Element:
        if element.is_trivial:
            return element
        image = self._table[element.tag]
        return image.star if element.negated else image

    def violations(self) -> List[str]:
        problems = []
        for tag in self.source.alphabet:
            if tag not in self._table:
                problems.append(f"no image for tag {tag!r}")
        extra = set(self._table) - set(self.source.alphabet)
        for tag in sorted(extra):
            problems.append(f"image given for unknown tag {tag!r}")
        for tag, image in self.mapping:
            if image not in self.target:
                problems.append(f"image {image} of {tag} is not in the target")
        if problems:
            return problems
        for x, y in sorted(self.source.order):
            fx, fy = self(x), self(y)
            if not self.target.le(fx, fy):
                problems.append(f"{x} < {y} but f({x}) = {fx} ≰ f({y}) = {fy}")
        return problems

    @property
    def is_valid(self) -> bool:
        return not self.violations()

    def check(self) -> PocMorphism:
        """Return self, or raise if the map is not a poc-morphism.

        Raises:
            PocSetError: Listing the first violations
        """
        problems = self.violations()
        if problems:
            raise PocSetError("Invalid poc-morphism: " + "; ".join(problems[:3]))
        return self

    def image(self) -> FrozenSet[Element]:
        return frozenset(self(x) for x in self.source.elements)

    @property
    def is_injective(self) -> bool:
        return len(self.image()) == len(self.source.elements)

    @property
    def is_surjective(self) -> bool:
        return self.image() == frozenset(self.target.elements)

    @property
    def is_embedding(self) -> bool:
        """Isomorphism onto the image: injective and order-reflecting."""
        if not self.is_injective:
            return False
        return all(
            self.source.le(x, y) == self.target.le(self(x), self(y))
            for x in self.source.elements
            for y in self.source.elements
        )


def compose(f: PocMorphism, g: PocMorphism) -> PocMorphism:
    """The composite ``g ∘ f`` (first ``f``, then ``g``).

    Raises:
        PocSetError: If the target of ``f`` is not the source of ``g``
    """
    if f.target != g.source:
        raise PocSetError("Cannot compose: intermediate poc-sets differ")
    return PocMorphism(
        f.source,
        g.target,
        tuple((tag, g(f(Element(tag)))) for tag in f.source.alphabet),
    )


def enumerate_morphisms(p: PocSet, q: PocSet) -> Iterator[PocMorphism]:
    """Every poc-morphism ``p -> q`` (exponential; small poc-sets only)."""
    for images in itertools.product(q.elements, repeat=len(p.alphabet)):
        morphism = PocMorphism(p, q, tuple(zip(p.alphabet, images)))
        if morphism.is_valid:
            yield morphism


def hom_to_two(p: PocSet) -> List[PocMorphism]:
    """All morphisms into the trivial poc-set ``{0 < 1}``."""
    return list(enumerate_morphisms(p, TWO))
