"""Three-phase forest construction, phase by phase and end to end."""

import pytest

from cliquesim.connectivity import (
    LevelGraph,
    build_component_graph,
    conn,
    handle_small_cuts,
    level_after,
    reduce_components,
    remove_large_cuts,
)
from cliquesim.generators import components as gen_components
from cliquesim.generators import gnp, path
from cliquesim.graphs import (
    Forest,
    GraphView,
    build_component_graph_reference,
    connected_components,
    kruskal_mst,
    make_edge,
)
from cliquesim.net import CliqueSimulator, SimConfig

from conftest import random_graph


def sim_for(g, seed=0, **kw):
    return CliqueSimulator(SimConfig(n=g.n, seed=seed, **kw), g)


class TestBuildComponentGraph:
    def test_spanning_subset_leaves_nothing(self):
        g = random_graph(12, 0.6, seed=1, weighted=True)
        sub = kruskal_mst(g).edges
        sim = sim_for(g)
        cg, views = build_component_graph(sim, g, sub)
        assert cg.inter_edges == {}
        assert views == {}

    def test_empty_subset_on_k4(self):
        g = GraphView(4, [make_edge(u, v, 1) for u in range(4) for v in range(u + 1, 4)])
        sim = sim_for(g)
        cg, views = build_component_graph(sim, g, [])
        assert cg.components == {0, 1, 2, 3}
        assert len(cg.inter_edges) == 6
        for leader in range(4):
            assert len(views[leader]) == 3  # edges toward the other three

    def test_matches_reference_on_random_forest(self):
        g = random_graph(64, 0.15, seed=7, weighted=True)
        rng_edges = sorted(g.edges(), key=lambda e: e.key)[: g.n // 2]
        sub = Forest(64, frozenset(
            e for i, e in enumerate(kruskal_mst(GraphView(64, rng_edges)).edges)
        )).edges
        sim = sim_for(g)
        cg, views = build_component_graph(sim, g, sub)
        ref = build_component_graph_reference(g, sub)
        assert cg.components == ref.components
        assert cg.inter_edges == ref.inter_edges
        # each leader's view is the restriction of the global collapse
        for leader, view in views.items():
            for pair, wit in view.items():
                assert leader in pair
                assert ref.inter_edges[pair] == wit


class TestReduceComponents:
    def test_connected_graph(self):
        g = gnp(64, 0.2, 3)
        sim = sim_for(g, seed=3)
        out = reduce_components(sim, g)
        assert out.forest.tree_count == connected_components(g).count
        assert out.component_graph.inter_edges == {}
        assert out.finished_leaders == out.component_graph.components

    def test_two_disjoint_cliques(self):
        edges = [make_edge(u, v) for u in range(5) for v in range(u + 1, 5)]
        edges += [make_edge(u, v) for u in range(5, 10) for v in range(u + 1, 10)]
        g = GraphView(10, edges)
        sim = sim_for(g)
        out = reduce_components(sim, g)
        assert out.forest.tree_count == 2
        assert out.finished_leaders == {0, 5}
        assert all(e.w == 1 for e in out.forest.edges)

    def test_empty_graph(self):
        g = GraphView(8, [])
        sim = sim_for(g)
        out = reduce_components(sim, g)
        assert out.forest.edges == frozenset()
        assert out.finished_leaders == frozenset(range(8))


def level_of(g, forest_edges, finished=frozenset()):
    """Test helper: build a phase-2/3 input straight from the oracle."""
    cg = build_component_graph_reference(g, forest_edges)
    labels = Forest(g.n, frozenset(forest_edges)).labeling.labels
    return level_after(cg, finished | cg.isolated(), labels, g.n)


class TestRemoveLargeCuts:
    def test_empty_level_is_noop(self):
        g = GraphView(16, [])
        sim = sim_for(g)
        lvl = LevelGraph(16, (), {}, tuple(range(16)))
        out = remove_large_cuts(sim, lvl)
        assert out.forest.edges == frozenset()
        assert out.component_graph.components == frozenset()

    def test_two_leader_level_connects(self):
        # n=128 admits two active clusters; drop one tree edge to make them
        g = random_graph(128, 0.3, seed=2, weighted=True)
        base = sorted(kruskal_mst(g).edges, key=lambda e: e.key)
        cut = base[:-1]
        lvl = level_of(g, cut)
        assert len(lvl.vertices) == 2
        sim = sim_for(g, seed=2)
        out = remove_large_cuts(sim, lvl)
        merged = connected_components(
            GraphView(g.n, list(cut) + sorted(out.forest.edges))
        )
        assert merged.count == connected_components(g).count

    def test_many_leaders_below_assertion_scale(self):
        # below 16 nodes the vertex bound is vacuous and skipped
        g = random_graph(12, 0.5, seed=4, weighted=True)
        lvl = level_of(g, [])
        sim = sim_for(g, seed=4)
        out = remove_large_cuts(sim, lvl)
        merged = connected_components(GraphView(g.n, sorted(out.forest.edges)))
        assert merged.count == connected_components(g).count

    def test_path_of_leaders(self):
        g = path(6)
        lvl = level_of(g, [])
        sim = sim_for(g)
        out = remove_large_cuts(sim, lvl)
        # default constant clamps every probability to one: all edges kept
        assert out.forest.tree_count == connected_components(g).count
        assert out.component_graph.inter_edges == {}


class TestHandleSmallCuts:
    def test_empty(self):
        g = GraphView(8, [])
        sim = sim_for(g)
        out = handle_small_cuts(sim, LevelGraph(8, (), {}, tuple(range(8))))
        assert out.forest.edges == frozenset()

    def test_perfect_matching(self):
        g = GraphView(8, [make_edge(2 * k, 2 * k + 1) for k in range(4)])
        lvl = level_of(g, [])
        sim = sim_for(g)
        out = handle_small_cuts(sim, lvl)
        assert out.forest.edges == g.edge_set()
        assert out.component_graph.inter_edges == {}

    def test_residual_instance_end_to_end(self):
        g = random_graph(32, 0.06, seed=9)
        lvl = level_of(g, [])
        assert len(lvl.edges) < 2 * g.n  # stays inside the phase contract
        sim = sim_for(g)
        out = handle_small_cuts(sim, lvl)
        total = connected_components(GraphView(g.n, sorted(out.forest.edges)))
        assert total.count == connected_components(g).count


class TestConn:
    def test_connected_random(self):
        g = gnp(128, 0.1, 17)
        assert connected_components(g).count == 1
        sim = sim_for(g, seed=17)
        forest = conn(sim, g)
        assert forest.tree_count == 1
        assert len(forest.edges) == g.n - 1

    def test_five_components(self):
        g = gen_components(50, 5, 23)
        sim = sim_for(g, seed=23)
        forest = conn(sim, g)
        assert forest.tree_count == 5

    def test_isolated_vertices(self):
        g = GraphView(16, [])
        sim = sim_for(g)
        forest = conn(sim, g)
        assert forest.edges == frozenset()
        assert forest.tree_count == 16

    def test_forest_edges_subset_of_graph(self):
        g = gnp(64, 0.05, 31)
        sim = sim_for(g, seed=31)
        forest = conn(sim, g)
        assert forest.edges <= g.edge_set()

    def test_phase_rounds_fixed_function_of_costs(self):
        profiles = {}
        for n in (32, 64, 128):
            g = gnp(n, 0.2, 5)
            sim = sim_for(g, seed=5)
            conn(sim, g)
            phases = sim.metrics().rounds_by_phase
            profiles[n] = (phases["phase2"], phases["phase3"])
        assert len(set(profiles.values())) == 1

    def test_route_cost_scaling_affine_messages_fixed(self):
        g = gnp(64, 0.2, 5)
        runs = {}
        for rc in (1, 2, 4):
            sim = CliqueSimulator(SimConfig(n=64, seed=5, route_cost=rc), g)
            conn(sim, g)
            m = sim.metrics()
            runs[rc] = (m.rounds_by_phase["phase2"], m.messages_total)
        assert runs[1][1] == runs[2][1] == runs[4][1]
        # phase-2 rounds are affine in the route cost: 3 routes + 2 fixed
        assert runs[2][0] - runs[1][0] == 3
        assert runs[4][0] - runs[2][0] == 6
