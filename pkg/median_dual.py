"""The dual median graph Γ(P) of a finite poc-set.

Vertices are the maximal coherent ∗-selections of ``P``; two vertices are
adjacent when they disagree on exactly one question. Everything the
duality offers (median, intervals, convex hulls, halfspaces, corners and
dual morphisms) is computed on vertex selections directly, with networkx
used for the graph-theoretic oracles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx

from config import max_tags_bound
from pocset_core import (
    Element,
    ElementLike,
    ONE,
    PocMorphism,
    PocSet,
    PocSetError,
    Vertex,
    validate,
)

__all__ = [
    "Corner",
    "DualGraphError",
    "DualMap",
    "MedianGraph",
    "SizeGuardError",
    "bfs_distance",
    "build_dual",
    "convex_hull",
    "corner",
    "distance",
    "dual_morphism",
    "edge_label",
    "gate",
    "halfspace",
    "halfspace_pocset_order",
    "has_unique_cut_edge",
    "interval",
    "interval_by_metric",
    "is_convex",
    "is_cut_edge_element",
    "is_duality_isomorphic",
    "is_nested_with_all",
    "is_tree",
    "median",
    "nearest_vertices",
    "positive_tags",
    "pull_back_vertex",
]

logger = logging.getLogger(__name__)

VertexLike = Union[Vertex, Iterable[ElementLike]]


class SizeGuardError(ValueError):
    """Raised when an alphabet exceeds the configured dual-graph bound."""


class DualGraphError(ValueError):
    """Raised for vertices or elements foreign to a dual graph."""


def positive_tags(vertex: Vertex) -> Tuple[str, ...]:
    """The tags a vertex answers positively, sorted."""
    return tuple(sorted(e.tag for e in vertex if not e.negated))


@dataclass(frozen=True, eq=False)
class MedianGraph:
    """Γ(P): canonical vertex order, edges as index pairs."""

    source: PocSet
    vertices: Tuple[Vertex, ...]
    edges: Tuple[Tuple[int, int], ...]

    @cached_property
    def index(self) -> Dict[Vertex, int]:
        return {vertex: i for i, vertex in enumerate(self.vertices)}

    @cached_property
    def vertex_set(self) -> FrozenSet[Vertex]:
        return frozenset(self.vertices)

    @cached_property
    def halfspaces(self) -> Dict[Element, FrozenSet[Vertex]]:
        spaces: Dict[Element, set] = {e: set() for e in self.source.proper_elements}
        for vertex in self.vertices:
            for element in vertex:
                spaces[element].add(vertex)
        return {element: frozenset(members) for element, members in spaces.items()}

    @cached_property
    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.vertices)))
        graph.add_edges_from(self.edges)
        return graph

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, vertex: object) -> bool:
        return vertex in self.index

    def vertex(self, value: VertexLike) -> Vertex:
        """Resolve ``value`` to a vertex of this graph.

        Raises:
            DualGraphError: If the selection is not a vertex
        """
        if isinstance(value, frozenset) and value in self.index:
            return value
        try:
            candidate = frozenset(Element.parse(e) for e in value)
        except PocSetError as exc:
            raise DualGraphError(str(exc)) from exc
        if candidate not in self.index:
            shown = ", ".join(sorted(str(e) for e in candidate))
            raise DualGraphError(f"Not a vertex of Γ(P): {{{shown}}}")
        return candidate

    def halfspace(self, a: ElementLike) -> FrozenSet[Vertex]:
        """V(a): the vertices containing ``a``."""
        try:
            element = self.source.proper(a)
        except PocSetError as exc:
            raise DualGraphError(str(exc)) from exc
        return self.halfspaces[element]

    def neighbors(self, vertex: VertexLike) -> List[Vertex]:
        i = self.index[self.vertex(vertex)]
        return [self.vertices[j] for j in sorted(self.graph.neighbors(i))]


def _vertex_key(p: PocSet, vertex: Vertex) -> Tuple[bool, ...]:
    negated = {e.tag: e.negated for e in vertex}
    return tuple(negated[tag] for tag in p.alphabet)


def _enumerate_vertices(p: PocSet) -> List[Vertex]:
    # Backtracking over tags; a branch dies as soon as it holds a <= b*.
    alphabet = p.alphabet
    chosen: List[Element] = []
    found: List[Vertex] = []

    def extend(position: int) -> None:
        if position == len(alphabet):
            found.append(frozenset(chosen))
            return
        tag = alphabet[position]
        for element in (Element(tag), Element(tag, True)):
            if all(not p.le(element, other.star) for other in chosen):
                chosen.append(element)
                extend(position + 1)
                chosen.pop()

    extend(0)
    return found


def build_dual(p: PocSet, max_tags: Optional[int] = None) -> MedianGraph:
    """Construct Γ(P).

    Raises:
        PocSetError: If ``p`` fails validation
        SizeGuardError: If the alphabet exceeds the size guard
    """
    bound = max_tags_bound(max_tags)
    if len(p.alphabet) > bound:
        raise SizeGuardError(
            f"Alphabet has {len(p.alphabet)} tags; the dual graph guard is {bound}"
        )
    report = validate(p)
    if not report.ok:
        raise PocSetError(f"Invalid poc-set: {report}")

    vertices = sorted(_enumerate_vertices(p), key=lambda v: _vertex_key(p, v))
    by_key = {_vertex_key(p, v): i for i, v in enumerate(vertices)}
    edges = []
    for i, vertex in enumerate(vertices):
        key = _vertex_key(p, vertex)
        for position in range(len(key)):
            flipped = key[:position] + (not key[position],) + key[position + 1 :]
            j = by_key.get(flipped)
            if j is not None and i < j:
                edges.append((i, j))
    edges.sort()
    logger.debug(
        "Γ(P) on %d tags: %d vertices, %d edges", len(p.alphabet), len(vertices), len(edges)
    )
    return MedianGraph(p, tuple(vertices), tuple(edges))


# ============================================================================
# Metric, median, intervals, convexity
# ============================================================================


def distance(g: MedianGraph, u: VertexLike, v: VertexLike) -> int:
    """Δ(u, v): the number of questions separating ``u`` from ``v``."""
    u, v = g.vertex(u), g.vertex(v)
    return len(u - v)


def bfs_distance(g: MedianGraph, u: VertexLike, v: VertexLike) -> int:
    """Path distance in the graph (oracle for :func:`distance`)."""
    u, v = g.vertex(u), g.vertex(v)
    return nx.shortest_path_length(g.graph, g.index[u], g.index[v])


def median(g: MedianGraph, u: VertexLike, v: VertexLike, w: VertexLike) -> Vertex:
    """med(u, v, w) = (u ∩ v) ∪ (v ∩ w) ∪ (u ∩ w)."""
    u, v, w = g.vertex(u), g.vertex(v), g.vertex(w)
    return g.vertex((u & v) | (v & w) | (u & w))


def interval(g: MedianGraph, u: VertexLike, v: VertexLike) -> FrozenSet[Vertex]:
    """I(u, v): vertices on geodesics from ``u`` to ``v``."""
    u, v = g.vertex(u), g.vertex(v)
    common = u & v
    return frozenset(w for w in g.vertices if common <= w)


def interval_by_metric(g: MedianGraph, u: VertexLike, v: VertexLike) -> FrozenSet[Vertex]:
    """I(u, v) from BFS distances (oracle for :func:`interval`)."""
    u, v = g.vertex(u), g.vertex(v)
    from_u = nx.single_source_shortest_path_length(g.graph, g.index[u])
    from_v = nx.single_source_shortest_path_length(g.graph, g.index[v])
    total = from_u[g.index[v]]
    return frozenset(
        g.vertices[i] for i in g.graph.nodes if from_u[i] + from_v[i] == total
    )


def is_convex(g: MedianGraph, members: Iterable[VertexLike]) -> bool:
    vertices = [g.vertex(m) for m in members]
    closed = frozenset(vertices)
    return all(interval(g, u, v) <= closed for u in vertices for v in vertices)


def convex_hull(g: MedianGraph, members: Iterable[VertexLike]) -> FrozenSet[Vertex]:
    """conv(W): the intersection of the halfspaces containing ``W``.

    Raises:
        DualGraphError: If ``W`` is empty
    """
    vertices = [g.vertex(m) for m in members]
    if not vertices:
        raise DualGraphError("Convex hull of an empty vertex set is undefined")
    common = frozenset.intersection(*vertices)
    hull = g.vertex_set
    for element in common:
        hull = hull & g.halfspaces[element]
    return hull


def nearest_vertices(
    g: MedianGraph, u: VertexLike, members: Iterable[VertexLike]
) -> List[Vertex]:
    """Every Δ-nearest member to ``u``, in canonical order."""
    u = g.vertex(u)
    candidates = sorted((g.vertex(m) for m in members), key=lambda v: g.index[v])
    if not candidates:
        return []
    best = min(len(u - v) for v in candidates)
    return [v for v in candidates if len(u - v) == best]


def gate(g: MedianGraph, u: VertexLike, members: Iterable[VertexLike]) -> Vertex:
    """The Δ-nearest vertex of a convex set to ``u``.

    Raises:
        DualGraphError: If the set is empty or not convex
    """
    vertices = [g.vertex(m) for m in members]
    if not vertices:
        raise DualGraphError("Gate into an empty vertex set is undefined")
    if not is_convex(g, vertices):
        raise DualGraphError("Gates exist only for convex vertex sets")
    nearest = nearest_vertices(g, u, vertices)
    return nearest[0]


def is_tree(g: MedianGraph) -> bool:
    return nx.is_tree(g.graph)


def edge_label(g: MedianGraph, u: VertexLike, v: VertexLike) -> str:
    """The single tag on which adjacent vertices disagree."""
    u, v = g.vertex(u), g.vertex(v)
    differing = {e.tag for e in u - v}
    if len(differing) != 1:
        raise DualGraphError("Vertices are not adjacent")
    return differing.pop()


# ============================================================================
# Duality: halfspace poc-set, dual morphisms
# ============================================================================


def halfspace(g: MedianGraph, a: ElementLike) -> FrozenSet[Vertex]:
    return g.halfspace(a)


def halfspace_pocset_order(g: MedianGraph) -> FrozenSet[Tuple[Element, Element]]:
    """Strict inclusions ``V(a) ⊊ V(b)`` between halfspaces, keyed by element."""
    return frozenset(
        (a, b)
        for a, space_a in g.halfspaces.items()
        for b, space_b in g.halfspaces.items()
        if a != b and space_a < space_b
    )


def is_duality_isomorphic(p: PocSet, g: MedianGraph) -> bool:
    """Whether ``a -> V(a)`` is an isomorphism onto the halfspace poc-set."""
    if g.source.alphabet != p.alphabet:
        return False
    spaces = [g.halfspaces[a] for a in p.proper_elements]
    if len(set(spaces)) != len(spaces):
        return False
    everything = g.vertex_set
    for a in p.proper_elements:
        space = g.halfspaces[a]
        if not space or space == everything:
            return False
        if g.halfspaces[a.star] != everything - space:
            return False
    inclusions = halfspace_pocset_order(g)
    return all(
        p.lt(a, b) == ((a, b) in inclusions)
        for a in p.proper_elements
        for b in p.proper_elements
        if a != b
    )


@dataclass(frozen=True, eq=False)
class DualMap:
    """f°: Γ(Q) -> Γ(P) for a morphism ``f: P -> Q``."""

    morphism: PocMorphism
    domain: MedianGraph
    codomain: MedianGraph
    table: Tuple[Tuple[Vertex, Vertex], ...]

    @cached_property
    def _lookup(self) -> Dict[Vertex, Vertex]:
        return dict(self.table)

    def __call__(self, vertex: VertexLike) -> Vertex:
        return self._lookup[self.domain.vertex(vertex)]

    @property
    def is_injective(self) -> bool:
        return len(set(self._lookup.values())) == len(self._lookup)

    @property
    def is_surjective(self) -> bool:
        return set(self._lookup.values()) == set(self.codomain.vertices)

    def preserves_medians(self) -> bool:
        vertices = self.domain.vertices
        return all(
            median(self.codomain, self(u), self(v), self(w))
            == self(median(self.domain, u, v, w))
            for u in vertices
            for v in vertices
            for w in vertices
        )


def pull_back_vertex(f: PocMorphism, vertex: Vertex) -> Vertex:
    """f⁻¹(v) restricted to proper elements (``1`` always lies in ``v``)."""
    answers = set(vertex)
    return frozenset(
        a
        for a in f.source.proper_elements
        if f(a) in answers or f(a) == ONE
    )


def dual_morphism(
    f: PocMorphism,
    source_graph: Optional[MedianGraph] = None,
    target_graph: Optional[MedianGraph] = None,
) -> DualMap:
    """The dual vertex map f°(v) = f⁻¹(v) from Γ(Q) to Γ(P).

    Raises:
        PocSetError: If ``f`` is not a poc-morphism
    """
    f.check()
    graph_p = source_graph or build_dual(f.source)
    graph_q = target_graph or build_dual(f.target)
    table = []
    for vertex in graph_q.vertices:
        image = pull_back_vertex(f, vertex)
        if image not in graph_p:
            raise DualGraphError("Preimage of a vertex is not a vertex")
        table.append((vertex, image))
    return DualMap(f, graph_q, graph_p, tuple(table))


# ============================================================================
# Corners and cut edges
# ============================================================================


@dataclass(frozen=True)
class Corner:
    """V(a, b) = V(a) ∩ V(b) for proper ``a``, ``b`` on different questions."""

    a: Element
    b: Element
    vertex_set: FrozenSet[Vertex]
    subgraph: nx.Graph = field(compare=False, repr=False, hash=False)

    @property
    def is_empty(self) -> bool:
        return not self.vertex_set

    def __str__(self) -> str:
        return f"V({self.a}, {self.b})"


def corner(g: MedianGraph, a: ElementLike, b: ElementLike) -> Corner:
    """The corner V(a, b) with its induced subgraph.

    Raises:
        DualGraphError: If an element is trivial or ``a in {b, b*}``
    """
    try:
        a, b = g.source.proper(a), g.source.proper(b)
    except PocSetError as exc:
        raise DualGraphError(str(exc)) from exc
    if a.tag == b.tag:
        raise DualGraphError(f"Corner needs two questions, got {a} and {b}")
    members = g.halfspaces[a] & g.halfspaces[b]
    subgraph = g.graph.subgraph(sorted(g.index[v] for v in members))
    return Corner(a, b, members, subgraph)


def is_nested_with_all(p: PocSet, a: ElementLike) -> bool:
    a = p.proper(a)
    return all(p.is_nested(a, Element(tag)) for tag in p.alphabet if tag != a.tag)


def has_unique_cut_edge(g: MedianGraph, a: ElementLike) -> bool:
    """Γ(P) has exactly one edge flipping ``a`` and that edge is a bridge."""
    a = g.source.proper(a)
    labelled = [
        (i, j)
        for i, j in g.edges
        if edge_label(g, g.vertices[i], g.vertices[j]) == a.tag
    ]
    if len(labelled) != 1:
        return False
    bridges = {tuple(sorted(edge)) for edge in nx.bridges(g.graph)}
    return labelled[0] in bridges


def is_cut_edge_element(p: PocSet, a: ElementLike) -> bool:
    """Whether ``a`` is nested with every other element of ``p``.

    Raises:
        PocSetError: If ``a`` is trivial or unknown
    """
    return is_nested_with_all(p, a)
