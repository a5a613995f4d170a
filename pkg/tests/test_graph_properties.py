"""Property-based checks of the structural invariants."""

from hypothesis import given, settings
from hypothesis import strategies as st

from cliquesim.graphs import (
    EdgeClass,
    GraphView,
    build_component_graph_reference,
    connected_components,
    f_light_classify,
    k_projection,
    kruskal_mst,
    make_edge,
    spanning_forest_local,
)


@st.composite
def graphs(draw, max_n=16, weighted=False):
    n = draw(st.integers(min_value=2, max_value=max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    picks = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    if weighted:
        weights = draw(
            st.lists(
                st.integers(min_value=1, max_value=40),
                min_size=len(picks),
                max_size=len(picks),
            )
        )
    else:
        weights = [1] * len(picks)
    return GraphView(n, (make_edge(u, v, w) for (u, v), w in zip(picks, weights)))


@st.composite
def graph_with_subset(draw):
    g = draw(graphs(weighted=True))
    edges = list(g.edges())
    sub = draw(st.lists(st.sampled_from(edges), unique=True)) if edges else []
    return g, sub


@given(graph_with_subset())
@settings(max_examples=150, deadline=None)
def test_collapse_labels_match_component_oracle(case):
    g, sub = case
    cg = build_component_graph_reference(g, sub)
    oracle = connected_components(GraphView(g.n, sub))
    assert cg.components == oracle.leaders


@given(graphs(weighted=True))
@settings(max_examples=100, deadline=None)
def test_mst_weight_never_beaten_by_local_forest(g):
    mst = kruskal_mst(g)
    other = spanning_forest_local(g.edges(), g.n)
    assert other.tree_count == mst.tree_count
    assert mst.total_weight <= other.total_weight


@given(graphs(weighted=True))
@settings(max_examples=100, deadline=None)
def test_mst_edges_light_heavy_edges_excluded(g):
    mst = kruskal_mst(g)
    for e in g.edges():
        cls = f_light_classify(mst, e)
        if e in mst.edges:
            assert cls is EdgeClass.LIGHT
        if cls is EdgeClass.HEAVY:
            assert e not in mst.edges


@given(graphs(max_n=12), st.integers(min_value=0, max_value=2 ** 11 - 1))
@settings(max_examples=150, deadline=None)
def test_k_projections_partition_arbitrary_cuts(g, side_bits):
    side = {v for v in range(g.n) if side_bits >> v & 1}
    cut = [e for e in g.edges() if (e.u in side) != (e.v in side)]
    pieces = [k_projection(cut, 1 << j, g) for j in range(g.n.bit_length())]
    assert sum(len(p) for p in pieces) == len(cut)
    seen = set()
    for p in pieces:
        assert not (p & seen)
        seen |= p
    assert seen == set(cut)
