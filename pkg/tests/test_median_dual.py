"""Test suite for median_dual.py: construction of Γ(P), the metric, medians,
intervals, convexity, dual morphisms, corners and cut edges."""

import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from median_dual import (
    DualGraphError,
    SizeGuardError,
    bfs_distance,
    build_dual,
    convex_hull,
    corner,
    distance,
    dual_morphism,
    edge_label,
    gate,
    has_unique_cut_edge,
    interval,
    interval_by_metric,
    is_convex,
    is_cut_edge_element,
    is_duality_isomorphic,
    is_tree,
    median,
    nearest_vertices,
    positive_tags,
)
from pocset_core import (
    PocMorphism,
    PocSet,
    PocSetError,
    close_order,
    compose,
    enumerate_morphisms,
    hom_to_two,
)
from scenarios import chain, cube, enumerate_pocsets, grid_pocset, pompom, random_pocset


def _check_median_graph(p):
    """Every structural law of Γ(P) checked on one poc-set."""
    g = build_dual(p)
    vertices = g.vertices
    assert is_duality_isomorphic(p, g)
    assert nx.is_connected(g.graph)
    assert nx.is_bipartite(g.graph)
    assert is_tree(g) == p.is_nested_pocset
    if len(p.alphabet) <= 3:
        assert len(hom_to_two(p)) == len(g)
    intervals = {}
    for u in vertices:
        assert len(u) == len(p.alphabet)
        for v in vertices:
            assert distance(g, u, v) == bfs_distance(g, u, v)
            intervals[u, v] = interval(g, u, v)
            assert intervals[u, v] == interval_by_metric(g, u, v)
    for u, v, w in itertools.product(vertices, repeat=3):
        m = median(g, u, v, w)
        assert intervals[u, v] & intervals[v, w] & intervals[u, w] == {m}
        assert median(g, v, w, u) == m
    for a in p.proper_elements:
        assert has_unique_cut_edge(g, a) == is_cut_edge_element(p, a)


# ============================================================================
# Construction
# ============================================================================


@pytest.mark.unit
class TestBuildDual:
    """Test suite for build_dual on the named poc-sets."""

    def test_square_is_four_cycle(self, square_pocset):
        g = build_dual(square_pocset)
        assert len(g) == 4
        assert len(g.edges) == 4
        assert all(g.graph.degree(i) == 2 for i in g.graph.nodes)

    def test_path3(self, path3_pocset, vertex):
        g = build_dual(path3_pocset)
        assert g.vertices == (vertex("a", "b"), vertex("a*", "b"), vertex("a*", "b*"))
        assert g.edges == ((0, 1), (1, 2))
        assert vertex("a", "b*") not in g

    def test_cube(self, cube3):
        g = build_dual(cube3)
        assert len(g) == 8
        assert len(g.edges) == 12

    def test_pompom_is_star(self, pompom3):
        g = build_dual(pompom3)
        assert len(g) == 4
        assert len(g.edges) == 3
        assert is_tree(g)
        assert max(dict(g.graph.degree()).values()) == 3

    def test_chain_is_path(self, chain3):
        g = build_dual(chain3)
        assert len(g) == 4
        assert is_tree(g)
        assert sorted(d for _, d in g.graph.degree()) == [1, 1, 2, 2]

    def test_compass_is_three_by_three_grid(self, compass_graph):
        assert len(compass_graph) == 9
        assert len(compass_graph.edges) == 12
        assert not is_tree(compass_graph)

    def test_grid_pocset_dual(self):
        """Two vertical and three horizontal nested walls: a 3x4 grid graph."""
        g = build_dual(grid_pocset(2, 3))
        assert len(g) == 12
        assert len(g.edges) == 17

    def test_trivial_pocset_has_single_vertex(self):
        g = build_dual(close_order((), ()))
        assert g.vertices == (frozenset(),)
        assert g.edges == ()

    def test_canonical_vertex_order(self, square_pocset):
        """All-positive selection first, negations counted in alphabet order."""
        g = build_dual(square_pocset)
        assert [positive_tags(v) for v in g.vertices] == [("a", "b"), ("a",), ("b",), ()]

    def test_size_guard(self, cube3):
        with pytest.raises(SizeGuardError, match="guard is 2"):
            build_dual(cube3, max_tags=2)

    @pytest.mark.config
    def test_size_guard_from_environment(self, monkeypatch, cube3):
        monkeypatch.setenv("POCMEM_MAX_TAGS", "2")
        with pytest.raises(SizeGuardError):
            build_dual(cube3)

    def test_invalid_pocset_rejected(self):
        broken = PocSet(("a",), frozenset())
        with pytest.raises(PocSetError, match="Invalid poc-set"):
            build_dual(broken)

    def test_vertex_lookup(self, compass_graph):
        assert compass_graph.vertex(["n", "e", "s*", "w*"]) in compass_graph
        with pytest.raises(DualGraphError, match="Not a vertex"):
            compass_graph.vertex(["n", "s", "e", "w*"])
        with pytest.raises(DualGraphError):
            compass_graph.vertex(["n*x"])


# ============================================================================
# Metric, medians and convexity
# ============================================================================


@pytest.mark.unit
class TestMetric:
    """Test suite for distance, median and intervals."""

    def test_distance_counts_separating_questions(self, compass_graph, vertex):
        u = vertex("n", "s*", "e", "w*")
        v = vertex("n*", "s", "e*", "w")
        assert distance(compass_graph, u, v) == 4
        assert bfs_distance(compass_graph, u, v) == 4

    def test_square_median(self, square_pocset, vertex):
        g = build_dual(square_pocset)
        u, v, w = vertex("a", "b"), vertex("a", "b*"), vertex("a*", "b*")
        assert median(g, u, v, w) == v

    def test_interval_of_opposite_corners_is_everything(self, square_pocset, vertex):
        g = build_dual(square_pocset)
        assert interval(g, vertex("a", "b"), vertex("a*", "b*")) == g.vertex_set

    def test_edge_label(self, path3_pocset, vertex):
        g = build_dual(path3_pocset)
        assert edge_label(g, vertex("a", "b"), vertex("a*", "b")) == "a"
        with pytest.raises(DualGraphError, match="not adjacent"):
            edge_label(g, vertex("a", "b"), vertex("a*", "b*"))

    def test_neighbors(self, path3_pocset, vertex):
        g = build_dual(path3_pocset)
        assert g.neighbors(vertex("a*", "b")) == [vertex("a", "b"), vertex("a*", "b*")]


@pytest.mark.unit
class TestConvexity:
    """Test suite for convexity, hulls and gates."""

    def test_halfspace_is_convex(self, compass_graph):
        assert is_convex(compass_graph, compass_graph.halfspace("n"))

    def test_diagonal_pair_is_not_convex(self, square_pocset, vertex):
        g = build_dual(square_pocset)
        assert not is_convex(g, [vertex("a", "b"), vertex("a*", "b*")])

    def test_convex_hull(self, square_pocset, vertex):
        g = build_dual(square_pocset)
        assert convex_hull(g, [vertex("a", "b"), vertex("a*", "b*")]) == g.vertex_set
        assert convex_hull(g, [vertex("a", "b"), vertex("a", "b*")]) == g.halfspace("a")

    def test_convex_hull_of_nothing(self, square_pocset):
        with pytest.raises(DualGraphError):
            convex_hull(build_dual(square_pocset), [])

    def test_gate_into_halfspace(self, compass_graph, vertex):
        u = vertex("n*", "s", "e", "w*")
        assert gate(compass_graph, u, compass_graph.halfspace("n")) == vertex(
            "n", "s*", "e", "w*"
        )

    def test_gate_requires_convex_set(self, square_pocset, vertex):
        g = build_dual(square_pocset)
        with pytest.raises(DualGraphError, match="convex"):
            gate(g, vertex("a", "b*"), [vertex("a", "b"), vertex("a*", "b*")])

    def test_nearest_vertices_ties(self, square_pocset, vertex):
        g = build_dual(square_pocset)
        nearest = nearest_vertices(
            g, vertex("a", "b"), [vertex("a", "b*"), vertex("a*", "b")]
        )
        assert nearest == [vertex("a", "b*"), vertex("a*", "b")]


# ============================================================================
# Dual morphisms, corners and cut edges
# ============================================================================


@pytest.mark.unit
class TestDualMorphism:
    """Test suite for dual_morphism."""

    def test_collapse_of_chain(self, chain3, path3_pocset, vertex):
        f = PocMorphism.from_mapping(chain3, path3_pocset, {"a": "a", "b": "b", "c": "b"})
        dual = dual_morphism(f)
        assert dual(vertex("a", "b")) == vertex("a", "b", "c")
        assert dual(vertex("a*", "b")) == vertex("a*", "b", "c")
        assert dual(vertex("a*", "b*")) == vertex("a*", "b*", "c*")
        assert dual.is_injective
        assert not dual.is_surjective
        assert dual.preserves_medians()

    def test_identity_is_bijective(self, compass_p):
        dual = dual_morphism(PocMorphism.identity(compass_p))
        assert dual.is_injective and dual.is_surjective

    def test_invalid_morphism_rejected(self, chain3, path3_pocset):
        f = PocMorphism.from_mapping(chain3, path3_pocset, {"a": "b", "b": "a", "c": "a"})
        with pytest.raises(PocSetError):
            dual_morphism(f)


@pytest.mark.unit
class TestCorners:
    """Test suite for corner and the cut-edge characterizations."""

    def test_nested_corner_is_empty(self, compass_graph):
        assert corner(compass_graph, "n", "s").is_empty

    def test_transverse_corner(self, compass_graph, vertex):
        c = corner(compass_graph, "n", "e")
        assert c.vertex_set == {vertex("n", "s*", "e", "w*")}
        assert str(c) == "V(n, e)"
        assert c.subgraph.number_of_nodes() == 1

    def test_corner_needs_two_questions(self, compass_graph):
        with pytest.raises(DualGraphError, match="two questions"):
            corner(compass_graph, "n", "n*")

    def test_chain_elements_are_cut_edges(self, chain3):
        g = build_dual(chain3)
        assert all(has_unique_cut_edge(g, a) for a in chain3.proper_elements)

    def test_square_has_no_cut_edges(self, square_pocset):
        g = build_dual(square_pocset)
        assert not any(has_unique_cut_edge(g, a) for a in square_pocset.proper_elements)


# ============================================================================
# Structural laws
# ============================================================================


@pytest.mark.property
class TestMedianGraphLaws:
    """Metric, interval, median and duality laws over many poc-sets."""

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_exhaustive_small_alphabets(self, n):
        for p in enumerate_pocsets(n):
            _check_median_graph(p)

    @pytest.mark.parametrize("p", [chain(4), pompom(4), cube(4)], ids=["chain", "pompom", "cube"])
    def test_named_families(self, p):
        _check_median_graph(p)

    @pytest.mark.slow
    @settings(
        max_examples=500,
        deadline=None,
        suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
    )
    @given(
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        size=st.integers(min_value=1, max_value=4),
        density=st.floats(min_value=0.0, max_value=1.0),
    )
    def test_random_pocsets(self, seed, size, density):
        _check_median_graph(random_pocset(size, np.random.default_rng(seed), density))


def _small_pocsets():
    return [p for n in (1, 2) for p in enumerate_pocsets(n)]


def _check_dual_laws(f):
    """f surjective ⇔ f° injective; f embedding ⇔ f° surjective; medians kept."""
    dual = dual_morphism(f)
    assert f.is_surjective == dual.is_injective
    assert f.is_embedding == dual.is_surjective
    assert dual.preserves_medians()


@pytest.mark.property
class TestDualMorphismLaws:
    """Functorial laws of f ↦ f° over every morphism between small poc-sets."""

    def test_laws_between_small_pocsets(self):
        checked = 0
        for p, q in itertools.product(_small_pocsets(), repeat=2):
            for f in enumerate_morphisms(p, q):
                _check_dual_laws(f)
                checked += 1
        assert checked > 0

    @pytest.mark.slow
    def test_laws_from_three_tags(self):
        targets = _small_pocsets()
        for p in enumerate_pocsets(3):
            for q in targets:
                for f in enumerate_morphisms(p, q):
                    _check_dual_laws(f)

    def test_laws_on_random_pocsets(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            p = random_pocset(3, rng, density=0.5)
            q = random_pocset(2, rng, density=0.5)
            for f in itertools.chain(enumerate_morphisms(p, q), enumerate_morphisms(q, p)):
                _check_dual_laws(f)

    def test_dual_of_composite(self):
        pocsets = _small_pocsets()
        for p, q, r in itertools.product(pocsets, repeat=3):
            for f in itertools.islice(enumerate_morphisms(p, q), 3):
                for g in itertools.islice(enumerate_morphisms(q, r), 3):
                    h = compose(f, g)
                    assert h.is_valid
                    f_dual, g_dual = dual_morphism(f), dual_morphism(g)
                    h_dual = dual_morphism(h)
                    for v in h_dual.domain.vertices:
                        assert h_dual(v) == f_dual(g_dual(v))

    def test_composition_is_associative(self):
        pocsets = _small_pocsets()
        for p, q, r, s in itertools.product(pocsets, repeat=4):
            for f in itertools.islice(enumerate_morphisms(p, q), 2):
                for g in itertools.islice(enumerate_morphisms(q, r), 2):
                    for h in itertools.islice(enumerate_morphisms(r, s), 2):
                        left = compose(compose(f, g), h)
                        right = compose(f, compose(g, h))
                        assert left.mapping == right.mapping
                        assert left.is_valid
