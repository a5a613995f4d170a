"""Distributed maximal-spanning-forest construction in three phases.

Phase 1 shrinks the number of active clusters with the merging engine.
Phase 2 samples the surviving collapsed inter-cluster edges by degree
and lets the lowest-id node stitch them locally. Phase 3 ships the few
remaining inter-cluster edges to the same node, which finishes the job.
After each phase every node holds the forest so far and the labels it
induces.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from .ccmst import cc_mst, phase_budget, unfinished_budget
from .graphs import (
    ComponentGraph,
    Forest,
    GraphView,
    UnionFind,
    WeightedEdge,
    make_edge,
    spanning_forest_local,
)
from .net import CliqueSimulator, Message
from .sampling import charge_edge, edge_probability
from .graphs import rounded_degree
from .net import bernoulli

log = logging.getLogger("cliquesim")

#: gather target for the local phases: the lowest-id node
COORDINATOR = 0


@dataclass(frozen=True)
class PhaseOutput:
    forest: Forest
    component_graph: ComponentGraph
    finished_leaders: frozenset[int]
    rounds_used: int


@dataclass(frozen=True)
class LevelGraph:
    """Surviving cluster leaders plus collapsed witness edges between them.

    `labels` maps every host vertex to its current cluster leader, so
    any witness edge can be translated back to a leader pair locally.
    """

    n_host: int
    vertices: tuple[int, ...]
    edges: dict[tuple[int, int], WeightedEdge]
    labels: tuple[int, ...]

    def incident(self) -> dict[int, list[tuple[tuple[int, int], WeightedEdge]]]:
        out: dict[int, list[tuple[tuple[int, int], WeightedEdge]]] = {
            v: [] for v in self.vertices
        }
        for pair in sorted(self.edges):
            wit = self.edges[pair]
            out[pair[0]].append((pair, wit))
            out[pair[1]].append((pair, wit))
        return out

    def degrees(self) -> dict[int, int]:
        return {v: len(rows) for v, rows in self.incident().items()}


def _gather_at(
    sim: CliqueSimulator, dest: int, per_sender: Mapping[int, list[tuple]]
) -> list[tuple]:
    """Route all payloads to one node, splitting into n-sized batches.

    Runs at least one routing call even when empty so the round profile
    does not depend on the data.
    """
    flat = [
        (src, payload) for src in sorted(per_sender) for payload in per_sender[src]
    ]
    batches = max(1, math.ceil(len(flat) / sim.n))
    received: list[tuple] = []
    for b in range(batches):
        chunk = flat[b * sim.n : (b + 1) * sim.n]
        queues: list[list[Message]] = [[] for _ in range(sim.n)]
        for src, payload in chunk:
            queues[src].append(Message(src, dest, payload))
        delivery = sim.route_idt(queues)
        received.extend(m.payload for m in delivery[dest])
    return received


def _collapse_distributed(
    sim: CliqueSimulator,
    senders: Mapping[int, Iterable[tuple[int, WeightedEdge]]],
    pair_of: Callable[[WeightedEdge], tuple[int, int]],
) -> tuple[dict[tuple[int, int], WeightedEdge], dict[int, dict[tuple[int, int], WeightedEdge]]]:
    """One routed round of per-pair minima: each sender keeps its lightest
    witness per foreign cluster and notifies that cluster's leader.

    Returns the assembled collapsed edge map plus each leader's view.
    Both leaders of a pair must agree on the witness; that is asserted.
    """
    queues: list[list[Message]] = [[] for _ in range(sim.n)]
    for v in sorted(senders):
        best: dict[int, WeightedEdge] = {}
        for foreign, wit in senders[v]:
            cur = best.get(foreign)
            if cur is None or wit.key < cur.key:
                best[foreign] = wit
        for foreign in sorted(best):
            wit = best[foreign]
            queues[v].append(Message(v, foreign, (wit.u, wit.v, wit.w)))
    delivery = sim.route_idt(queues)
    views: dict[int, dict[tuple[int, int], WeightedEdge]] = {}
    for leader in range(sim.n):
        if not delivery[leader]:
            continue
        view: dict[tuple[int, int], WeightedEdge] = {}
        for msg in delivery[leader]:
            wit = WeightedEdge(*msg.payload)
            pair = pair_of(wit)
            cur = view.get(pair)
            if cur is None or wit.key < cur.key:
                view[pair] = wit
        views[leader] = view
    assembled: dict[tuple[int, int], WeightedEdge] = {}
    for leader, view in views.items():
        for pair, wit in view.items():
            cur = assembled.get(pair)
            if cur is None or wit.key < cur.key:
                assembled[pair] = wit
    for pair, wit in assembled.items():
        for side in pair:
            held = views.get(side, {}).get(pair)
            if held != wit:
                raise sim.violation(
                    "collapse_disagreement",
                    f"leaders of {pair} hold {held} vs {wit}",
                )
    return assembled, views


def build_component_graph(
    sim: CliqueSimulator, g: GraphView, sub: Iterable[WeightedEdge]
) -> tuple[ComponentGraph, dict[int, dict[tuple[int, int], WeightedEdge]]]:
    """Distributed collapse of g across the components induced by `sub`.

    Every node already knows `sub` (it was disseminated), computes the
    labels locally, and notifies foreign leaders about its lightest edge
    into their cluster; per-node dedup keeps each sender at one message
    per foreign cluster, so both routing bounds hold by construction.
    """
    uf = UnionFind(g.n)
    for e in sub:
        uf.union(e.u, e.v)
    labels = uf.min_labels(g.n)

    senders = {
        v: [
            (labels[u], make_edge(v, u, w))
            for u, w in g.adj[v]
            if labels[u] != labels[v]
        ]
        for v in range(g.n)
    }

    def pair_of(wit: WeightedEdge) -> tuple[int, int]:
        a, b = labels[wit.u], labels[wit.v]
        return (a, b) if a < b else (b, a)

    assembled, views = _collapse_distributed(sim, senders, pair_of)
    return ComponentGraph(frozenset(labels), assembled), views


def level_after(
    cg: ComponentGraph, finished: frozenset[int], labels: Iterable[int], n_host: int
) -> LevelGraph:
    """The next phase's input: active leaders and their collapsed edges."""
    return LevelGraph(
        n_host=n_host,
        vertices=tuple(sorted(cg.components - finished)),
        edges=dict(cg.inter_edges),
        labels=tuple(labels),
    )


def reduce_components(sim: CliqueSimulator, g: GraphView) -> PhaseOutput:
    """Phase 1: cluster merging on unit weights until few clusters stay active.

    Vertex pairs without an edge act as non-mergeable placeholders, so
    the resulting forest only ever contains real edges and clusters that
    span a whole component simply stop participating.
    """
    with sim.phase("phase1"):
        start = sim.rounds_elapsed
        unit = g.with_unit_weights()
        target = unfinished_budget(g.n)
        if g.n < 16:
            log.info("n=%d: reduction target clamps to %d", g.n, target)
        partition, t1 = cc_mst(
            sim,
            unit,
            max_phases=phase_budget(g.n),
            unfinished_target=target,
        )
        labels = list(partition.labeling.labels)
        flags = sim.broadcast_value(
            [
                (labels[v],)
                if any(labels[u] != labels[v] for u, _ in g.adj[v])
                else None
                for v in range(g.n)
            ]
        )
        unfinished = {f[0] for f in flags if f is not None}
        if len(unfinished) > target:
            raise sim.violation(
                "phase1_unfinished_bound",
                f"{len(unfinished)} active clusters exceed target {target}",
            )
        # phase 1 never emits placeholder edges, so weights are all real
        forest = Forest(g.n, frozenset(t1.edges))
        cg, _views = build_component_graph(sim, g, forest.edges)
        finished = frozenset(cg.components) - frozenset(unfinished)
        if cg.isolated() != finished:
            raise sim.violation(
                "phase1_finished_mismatch",
                "isolated clusters disagree with the active-flag broadcast",
            )
        return PhaseOutput(forest, cg, finished, sim.rounds_elapsed - start)


def remove_large_cuts(sim: CliqueSimulator, level: LevelGraph, c=None) -> PhaseOutput:
    """Phase 2: degree-based sampling of collapsed edges, stitched centrally.

    Each collapsed edge is kept by its charged side with probability
    c * log2(n)^2 / rd(e) (clamped), the sample is gathered at the
    lowest-id node, and the resulting forest is disseminated. The gather
    is guarded by a hard sample-size check so a broken bound fails
    loudly instead of silently overloading the routing layer.
    """
    c = c if c is not None else sim.config.c_sample
    n = sim.n
    with sim.phase("phase2"):
        start = sim.rounds_elapsed
        target = unfinished_budget(n)
        if len(level.vertices) > target:
            if n >= 16:
                raise sim.violation(
                    "phase2_vertex_bound",
                    f"{len(level.vertices)} active clusters exceed {target}",
                )
            log.info("n=%d: vertex bound vacuous, continuing", n)

        incident = level.incident()
        degrees = sim.broadcast_value(
            [
                (len(incident[v]),) if v in incident and incident[v] else None
                for v in range(n)
            ]
        )
        rd = {
            v: rounded_degree(degrees[v][0])
            for v in level.vertices
            if degrees[v] is not None
        }

        sampled: dict[int, list[tuple]] = {}
        sampled_pairs: list[tuple[tuple[int, int], WeightedEdge]] = []
        for v in level.vertices:
            mine = [
                (pair, wit)
                for pair, wit in incident[v]
                if charge_edge(pair[0], pair[1], rd[pair[0]], rd[pair[1]]) == v
            ]
            if not mine:
                continue
            mine.sort(key=lambda row: row[1].key)
            rng = sim.rng_for("phase2-sample", v)
            kept = []
            for pair, wit in mine:
                p = edge_probability(min(rd[pair[0]], rd[pair[1]]), n, c)
                if bernoulli(rng, p):
                    kept.append((wit.u, wit.v, wit.w))
                    sampled_pairs.append((pair, wit))
            if kept:
                sampled[v] = kept

        total = sum(len(rows) for rows in sampled.values())
        if total > 8 * n:
            raise sim.violation(
                "phase2_sample_bound", f"sampled {total} collapsed edges > 8n={8 * n}"
            )
        payloads = _gather_at(sim, COORDINATOR, sampled)

        # coordinator-side: translate witnesses to leader pairs, stitch
        labels = level.labels
        pair_to_wit: dict[tuple[int, int], WeightedEdge] = {}
        for u, v, w in payloads:
            a, b = labels[u], labels[v]
            pair = (a, b) if a < b else (b, a)
            pair_to_wit[pair] = WeightedEdge(u, v, w)
        leader_edges = [make_edge(a, b, wit.w) for (a, b), wit in pair_to_wit.items()]
        chosen = spanning_forest_local(leader_edges, n)
        t2_witnesses = sorted(
            (pair_to_wit[(e.u, e.v)] for e in chosen.edges), key=lambda e: e.key
        )

        queue = [[] for _ in range(n)]
        queue[COORDINATOR] = [(e.u, e.v, e.w) for e in t2_witnesses]
        known = sim.disseminate_all(queue)
        t2 = frozenset(WeightedEdge(u, v, w) for u, v, w in known)

        new_label = _merged_labels(level, t2)
        cg = _collapse_level(sim, level, new_label)
        finished = cg.isolated()
        return PhaseOutput(
            Forest(level.n_host, t2), cg, finished, sim.rounds_elapsed - start
        )


def handle_small_cuts(sim: CliqueSimulator, level: LevelGraph) -> PhaseOutput:
    """Phase 3: gather every surviving collapsed edge centrally and finish.

    The input bound (fewer than 2n collapsed edges) is the claim the
    sampling phase is supposed to deliver; it is checked, not assumed.
    """
    n = sim.n
    with sim.phase("phase3"):
        start = sim.rounds_elapsed
        if len(level.edges) >= 2 * n:
            raise sim.violation(
                "phase3_interedge_bound",
                f"{len(level.edges)} collapsed edges reach 2n={2 * n}",
            )
        senders: dict[int, list[tuple]] = {}
        for (a, b), wit in sorted(level.edges.items()):
            senders.setdefault(a, []).append((wit.u, wit.v, wit.w))
        payloads = _gather_at(sim, COORDINATOR, senders)

        labels = level.labels
        pair_to_wit: dict[tuple[int, int], WeightedEdge] = {}
        for u, v, w in payloads:
            a, b = labels[u], labels[v]
            pair = (a, b) if a < b else (b, a)
            pair_to_wit[pair] = WeightedEdge(u, v, w)
        leader_edges = [make_edge(a, b, wit.w) for (a, b), wit in pair_to_wit.items()]
        chosen = spanning_forest_local(leader_edges, n)
        t3_witnesses = sorted(
            (pair_to_wit[(e.u, e.v)] for e in chosen.edges), key=lambda e: e.key
        )

        queue = [[] for _ in range(n)]
        queue[COORDINATOR] = [(e.u, e.v, e.w) for e in t3_witnesses]
        known = sim.disseminate_all(queue)
        t3 = frozenset(WeightedEdge(u, v, w) for u, v, w in known)

        new_label = _merged_labels(level, t3)
        cg = _collapse_level(sim, level, new_label)
        if cg.edge_count:
            raise sim.violation(
                "phase3_residual_edges", f"{cg.edge_count} collapsed edges survive"
            )
        return PhaseOutput(
            Forest(level.n_host, t3), cg, cg.isolated(), sim.rounds_elapsed - start
        )


def _merged_labels(level: LevelGraph, new_edges: frozenset[WeightedEdge]) -> list[int]:
    """Host-level labels after also joining along the phase's new edges."""
    uf = UnionFind(level.n_host)
    labels = level.labels
    for e in new_edges:
        uf.union(labels[e.u], labels[e.v])
    mapped = uf.min_labels(level.n_host)
    return [mapped[labels[v]] for v in range(level.n_host)]


def _collapse_level(
    sim: CliqueSimulator, level: LevelGraph, new_label: list[int]
) -> ComponentGraph:
    """Distributed collapse of the level's edges across the new labels."""
    senders: dict[int, list[tuple[int, WeightedEdge]]] = {}
    for v in level.vertices:
        senders[v] = []
    for (a, b), wit in sorted(level.edges.items()):
        if new_label[a] != new_label[b]:
            senders[a].append((new_label[b], wit))
            senders[b].append((new_label[a], wit))

    def pair_of(wit: WeightedEdge) -> tuple[int, int]:
        x, y = new_label[level.labels[wit.u]], new_label[level.labels[wit.v]]
        return (x, y) if x < y else (y, x)

    assembled, _views = _collapse_distributed(sim, senders, pair_of)
    components = frozenset(new_label[v] for v in level.vertices)
    return ComponentGraph(components, assembled)


def conn(sim: CliqueSimulator, g: GraphView) -> Forest:
    """Full pipeline: every node ends up knowing a maximal spanning forest."""
    if g.n != sim.n:
        raise ValueError("graph size does not match the simulator")
    out1 = reduce_components(sim, g)
    labels1 = Forest(g.n, out1.forest.edges).labeling.labels
    level1 = level_after(out1.component_graph, out1.finished_leaders, labels1, g.n)

    out2 = remove_large_cuts(sim, level1)
    edges12 = out1.forest.edges | out2.forest.edges
    labels2 = Forest(g.n, edges12).labeling.labels
    level2 = level_after(out2.component_graph, out2.finished_leaders, labels2, g.n)

    out3 = handle_small_cuts(sim, level2)
    forest = Forest(g.n, edges12 | out3.forest.edges)
    for e in forest.edges:
        if e.w == math.inf:
            raise sim.violation("placeholder_edge_in_forest", str(e))
    return forest
