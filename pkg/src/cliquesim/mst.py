"""Exact minimum spanning tree over the simulated network.

Pipeline: shrink clusters with the merging engine, collapse the graph
to inter-cluster witness edges, thin them with one uniform sampling
pass (light-edge filtering), then finish with the rank-partitioned
stage below.

The rank-partitioned stage (`sq_mst`) sorts the surviving edges
globally, hands each block of n consecutive ranks to a guardian node,
and lets guardians replay the greedy acceptance test in rank order.
Each guardian learns the connectivity of all lighter blocks through a
sampled forest plus the label-crossing edges collected by supporter
nodes (`route_labels`), so its accept/reject decisions coincide with a
sequential greedy run over the full edge list.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Optional

from .ccmst import cc_mst, phase_budget, unfinished_budget
from .connectivity import LevelGraph, build_component_graph, level_after
from .graphs import (
    Forest,
    GraphView,
    UnionFind,
    WeightedEdge,
    forest_path_max_weight,
    make_edge,
    rounded_degree,
)
from .net import CliqueSimulator, Message, bernoulli
from .sampling import edge_probability

log = logging.getLogger("cliquesim")


@dataclass(frozen=True)
class LabelVector:
    """One node's component label under every guardian's partial forest."""

    owner: int
    labels: tuple[int, ...]


@dataclass
class PartitionAssignment:
    """Global bookkeeping for the rank-partitioned stage.

    ranks maps each collapsed edge (as a leader pair) to its global
    rank; part i covers ranks (i-1)*n+1 .. i*n and is guarded by the
    node whose id is i. Supporters are disjoint consecutive id blocks,
    sized by their owner's degree; supporter_of_edge is filled in when
    edge chunks are distributed.
    """

    ranks: dict[tuple[int, int], int]
    parts: int
    guardians: dict[int, int]
    supporters: dict[int, tuple[int, ...]]
    supporter_of_edge: dict[tuple[int, tuple[int, int]], int] = field(default_factory=dict)

    def part_of(self, rank: int, n: int) -> int:
        return (rank - 1) // n + 1


@dataclass
class SqMstAudit:
    """Optional introspection for tests: per-rank guardian decisions."""

    parts: int = 0
    rho: int = 0
    decisions: dict[int, tuple[tuple[int, int], bool]] = field(default_factory=dict)
    crossing_gathered: dict[int, int] = field(default_factory=dict)


def assign_guardians_and_supporters(
    degrees: dict[int, int], n: int, rho: int, parts: int
) -> PartitionAssignment:
    """Deterministic supporter blocks: every node derives the same plan.

    Owners are processed in increasing id order and receive
    max(1, floor(degree / (rho * sqrt(n)))) consecutive node ids each;
    the floor is computed exactly in integers.
    """
    supporters: dict[int, tuple[int, ...]] = {}
    cursor = 0
    for v in sorted(degrees):
        d = degrees[v]
        size = max(1, isqrt((d * d) // (rho * rho * n)))
        if cursor + size > n:
            raise ValueError(f"CAPACITY: supporter blocks exceed {n} nodes")
        supporters[v] = tuple(range(cursor, cursor + size))
        cursor += size
    return PartitionAssignment(
        ranks={},
        parts=parts,
        guardians={i: i for i in range(1, parts + 1)},
        supporters=supporters,
    )


def _supporter_rho(degrees: dict[int, int], n: int) -> int:
    """Smallest density constant whose blocks fit in n nodes."""
    total = sum(degrees.values())
    rho = max(1, math.ceil(total / (n * math.sqrt(n))))
    while True:
        need = sum(max(1, isqrt((d * d) // (rho * rho * n))) for d in degrees.values())
        if need <= n:
            return rho
        rho += 1


def route_labels(
    sim: CliqueSimulator,
    assignment: PartitionAssignment,
    vectors: dict[int, LabelVector],
    restrict_to_lighter_blocks: bool = True,
) -> dict[int, list[tuple[tuple[int, int], int]]]:
    """Collect, per part i, the edges whose endpoints disagree on label i.

    Seven routed steps: vectors out to supporters, edge chunks out,
    both supporter-identity notifications, the vector fetch round trip,
    and the final forward of label-crossing edges to guardians. Every
    step keeps per-node traffic within the routing bounds by the block
    sizing.

    By default supporters only report edges from blocks lighter than i
    (part i's guardian has no use for heavier ones, and with singleton
    labels an unfiltered part-1 forward would flood its guardian); pass
    restrict_to_lighter_blocks=False for the unfiltered variant when
    the label structure keeps crossing counts within the bounds.
    """
    n = sim.n
    p = assignment.parts
    vertices = sorted(vectors)
    incident: dict[int, list[tuple[int, tuple[int, int]]]] = {v: [] for v in vertices}
    for pair, rank in assignment.ranks.items():
        incident[pair[0]].append((rank, pair))
        incident[pair[1]].append((rank, pair))
    for v in vertices:
        incident[v].sort()

    # vectors to supporters
    queues: list[list[Message]] = [[] for _ in range(n)]
    for v in vertices:
        for s in assignment.supporters[v]:
            for i, label in enumerate(vectors[v].labels, start=1):
                queues[v].append(Message(v, s, (i, label)))
    sim.route_idt(queues)
    # supporters are disjoint blocks, so each serves exactly one owner
    owner_of: dict[int, int] = {}
    for v in vertices:
        for s in assignment.supporters[v]:
            owner_of[s] = v

    # edge chunks to supporters, split as evenly as the block allows
    queues = [[] for _ in range(n)]
    chunk_of: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    for v in vertices:
        mine = incident[v]
        sups = assignment.supporters[v]
        base, extra = divmod(len(mine), len(sups))
        at = 0
        for k, s in enumerate(sups):
            take = base + (1 if k < extra else 0)
            chunk = mine[at : at + take]
            at += take
            chunk_of.setdefault(s, []).extend(chunk)
            for rank, pair in chunk:
                other = pair[1] if pair[0] == v else pair[0]
                assignment.supporter_of_edge[(v, pair)] = s
                queues[v].append(Message(v, s, (other, rank)))
    sim.route_idt(queues)

    # each endpoint tells the other which supporter holds the edge
    queues = [[] for _ in range(n)]
    for (v, pair), s in sorted(assignment.supporter_of_edge.items()):
        other = pair[1] if pair[0] == v else pair[0]
        queues[v].append(Message(v, other, (s,)))
    sim.route_idt(queues)

    # then forwards that to its own supporter for the edge
    queues = [[] for _ in range(n)]
    partner_sup: dict[tuple[int, tuple[int, int]], int] = {}
    for pair in sorted(assignment.ranks):
        a, b = pair
        sa = assignment.supporter_of_edge[(a, pair)]
        sb = assignment.supporter_of_edge[(b, pair)]
        partner_sup[(a, pair)] = sb
        partner_sup[(b, pair)] = sa
        queues[a].append(Message(a, sa, (b, sb)))
        queues[b].append(Message(b, sb, (a, sa)))
    sim.route_idt(queues)

    # supporters fetch the partner vectors they are missing
    queues = [[] for _ in range(n)]
    for s in sorted(chunk_of):
        v = owner_of[s]
        for rank, pair in chunk_of[s]:
            other = pair[1] if pair[0] == v else pair[0]
            queues[s].append(Message(s, partner_sup[(v, pair)], (other, v)))
    sim.route_idt(queues)

    # responses: the queried supporter answers with its owner's vector
    queues = [[] for _ in range(n)]
    request_log: dict[int, list[tuple[int, int]]] = {}
    for s in sorted(chunk_of):
        v = owner_of[s]
        for rank, pair in chunk_of[s]:
            other = pair[1] if pair[0] == v else pair[0]
            request_log.setdefault(partner_sup[(v, pair)], []).append((other, s))
    for s in sorted(request_log):
        v = owner_of[s]
        for queried, requester in request_log[s]:
            if queried != v:
                raise sim.violation(
                    "routelabels_misrouted_request",
                    f"supporter {s} owns {v}, asked about {queried}",
                )
            for i, label in enumerate(vectors[v].labels, start=1):
                queues[s].append(Message(s, requester, (queried, i, label)))
    sim.route_idt(queues)

    # forward label-crossing edges; the lower endpoint's supporter reports
    queues = [[] for _ in range(n)]
    for s in sorted(chunk_of):
        v = owner_of[s]
        for rank, pair in chunk_of[s]:
            if pair[0] != v:
                continue
            other = pair[1]
            for i in range(1, p + 1):
                if restrict_to_lighter_blocks and rank > (i - 1) * n:
                    continue
                if vectors[v].labels[i - 1] == vectors[other].labels[i - 1]:
                    continue
                queues[s].append(
                    Message(s, assignment.guardians[i], (pair[0], pair[1], rank))
                )
    delivery = sim.route_idt(queues)

    out: dict[int, list[tuple[tuple[int, int], int]]] = {
        i: [] for i in range(1, p + 1)
    }
    for i in range(1, p + 1):
        g_node = assignment.guardians[i]
        for msg in delivery[g_node]:
            a, b, rank = msg.payload
            out[i].append(((a, b), rank))
    return out


def sq_mst(
    sim: CliqueSimulator,
    level: LevelGraph,
    stream_tag: str = "sq",
    c=None,
    enforce_input_bounds: bool = True,
    audit: Optional[SqMstAudit] = None,
) -> Forest:
    """Spanning forest of a collapsed level via rank partitioning.

    The primitive call sequence is fixed regardless of input size, so
    the round charge depends only on the configured costs. Correctness
    of the guardian replay never depends on sampling luck: the sampled
    forest plus the gathered crossing edges always reproduce the exact
    connectivity of all lighter rank blocks.
    """
    c = Fraction(c if c is not None else sim.config.c_sample)
    n = sim.n
    vertices = list(level.vertices)
    labels = level.labels
    if enforce_input_bounds:
        if len(vertices) > max(1, unfinished_budget(n)):
            raise sim.violation(
                "sqmst_vertex_bound",
                f"{len(vertices)} vertices exceed the n/log^2(n) contract",
            )

    # stage: global edge ranks (each edge submitted once, by its low end)
    owned: dict[int, list[tuple[int, int]]] = {v: [] for v in vertices}
    for pair in sorted(level.edges):
        owned[pair[0]].append(pair)
    keys = [
        [level.edges[pair].key for pair in owned.get(v, ())] if v in owned else []
        for v in range(n)
    ]
    rank_rows = sim.dist_sort(keys)
    rank_of: dict[tuple[int, int], int] = {}
    for v in vertices:
        for idx, pair in enumerate(owned[v]):
            rank_of[pair] = rank_rows[v][idx]

    counts = sim.broadcast_value(
        [(len(owned[v]),) if v in owned else None for v in range(n)]
    )
    m_edges = sum(cnt[0] for cnt in counts if cnt is not None)
    p = math.ceil(m_edges / n) if m_edges else 0
    if p >= n:
        raise sim.violation("sqmst_guardian_ids", f"{p} parts need ids below n={n}")
    if enforce_input_bounds and m_edges > 4 * n * math.sqrt(n):
        raise sim.violation(
            "sqmst_edge_bound", f"{m_edges} edges exceed the n^(3/2) contract"
        )

    # stage: tell the other endpoint each edge's rank
    queues: list[list[Message]] = [[] for _ in range(n)]
    for v in vertices:
        for pair in owned[v]:
            wit = level.edges[pair]
            queues[v].append(Message(v, pair[1], (wit.u, wit.v, rank_of[pair])))
    sim.route_idt(queues)

    # stage: gather each rank block at its guardian, as witness edges
    queues = [[] for _ in range(n)]
    for v in vertices:
        for pair in owned[v]:
            wit = level.edges[pair]
            i = (rank_of[pair] - 1) // n + 1
            queues[v].append(Message(v, i, (wit.u, wit.v, wit.w)))
    delivery = sim.route_idt(queues)
    block_rows: dict[int, list[tuple[int, tuple[int, int], WeightedEdge]]] = {}
    for i in range(1, p + 1):
        rows = []
        witnesses = sorted(
            (WeightedEdge(*m.payload) for m in delivery[i]), key=lambda e: e.key
        )
        for offset, wit in enumerate(witnesses):
            a, b = labels[wit.u], labels[wit.v]
            pair = (a, b) if a < b else (b, a)
            rows.append(((i - 1) * n + offset + 1, pair, wit))
        block_rows[i] = rows

    # stage: every node samples its lighter-block edges, per part
    incident_ranked: dict[int, list[tuple[int, tuple[int, int]]]] = {
        v: [] for v in vertices
    }
    for pair, rank in rank_of.items():
        incident_ranked[pair[0]].append((rank, pair))
        incident_ranked[pair[1]].append((rank, pair))
    for v in vertices:
        incident_ranked[v].sort()
    queues = [[] for _ in range(n)]
    for v in vertices:
        rng = sim.rng_for("sqmst-sample", stream_tag, v)
        for i in range(2, p + 1):
            limit = (i - 1) * n
            earlier = [row for row in incident_ranked[v] if row[0] <= limit]
            if not earlier:
                continue
            p_keep = edge_probability(rounded_degree(len(earlier)), n, c)
            for rank, pair in earlier:
                if bernoulli(rng, p_keep):
                    queues[v].append(Message(v, i, (i, pair[0], pair[1], rank)))
    delivery = sim.route_idt(queues)
    sampled_by_part: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    for i in range(1, p + 1):
        rows = {(m.payload[3], (m.payload[1], m.payload[2])) for m in delivery[i]}
        if len(rows) > 8 * n:
            raise sim.violation(
                "sqmst_sample_bound", f"part {i} gathered {len(rows)} > 8n edges"
            )
        sampled_by_part[i] = sorted(rows)

    # stage: guardians compute their partial forests and hand out labels
    part_labels: dict[int, list[int]] = {}
    queues = [[] for _ in range(n)]
    for i in range(1, p + 1):
        uf = UnionFind(n)
        for rank, pair in sampled_by_part[i]:
            uf.union(pair[0], pair[1])
        lab = uf.min_labels(n)
        part_labels[i] = lab
        for v in vertices:
            queues[i].append(Message(i, v, (i, lab[v])))
    sim.route_idt(queues)
    vectors = {
        v: LabelVector(v, tuple(part_labels[i][v] for i in range(1, p + 1)))
        for v in vertices
    }

    # stage: supporter plan from broadcast degrees, then the label relay
    degs = sim.broadcast_value(
        [(len(incident_ranked[v]),) if v in incident_ranked else None for v in range(n)]
    )
    degrees = {v: degs[v][0] for v in vertices}
    rho = _supporter_rho(degrees, n) if vertices else 1
    assignment = assign_guardians_and_supporters(degrees, n, rho, p)
    assignment.ranks = dict(rank_of)
    if audit is not None:
        audit.parts = p
        audit.rho = rho
    crossing = route_labels(sim, assignment, vectors)

    # stage: guardians replay greedy acceptance in rank order
    chosen: dict[int, list[WeightedEdge]] = {}
    for i in range(1, p + 1):
        limit = (i - 1) * n
        cross_rows = sorted(
            {(rank, pair) for pair, rank in crossing[i] if rank <= limit}
        )
        if len(cross_rows) > 2 * max(1, len(vertices)):
            raise sim.violation(
                "sqmst_interedge_bound",
                f"part {i}: {len(cross_rows)} crossing edges exceed 2|V'|",
            )
        if audit is not None:
            audit.crossing_gathered[i] = len(cross_rows)
        uf = UnionFind(n)
        for rank, pair in sampled_by_part[i]:
            uf.union(pair[0], pair[1])
        for rank, pair in cross_rows:
            uf.union(pair[0], pair[1])
        picked = []
        for rank, pair, wit in block_rows[i]:
            if uf.find(pair[0]) != uf.find(pair[1]):
                uf.union(pair[0], pair[1])
                picked.append(wit)
                if audit is not None:
                    audit.decisions[rank] = (pair, True)
            elif audit is not None:
                audit.decisions[rank] = (pair, False)
        chosen[i] = picked

    # stage: everyone learns the stitched forest
    queues = [[] for _ in range(n)]
    for i in range(1, p + 1):
        queues[i] = [(e.u, e.v, e.w) for e in chosen[i]]
    known = sim.disseminate_all(queues)
    return Forest(level.n_host, frozenset(WeightedEdge(u, v, w) for u, v, w in known))


def exact_mst(sim: CliqueSimulator, g: GraphView) -> Forest:
    """Exact MST of a weighted graph, known to every node at the end.

    Vertex pairs without an edge are treated as maximal-weight and never
    selected unless the graph is disconnected, in which case the result
    is the minimum spanning forest.
    """
    if g.n != sim.n:
        raise ValueError("graph size does not match the simulator")
    n = g.n
    with sim.phase("ccmst"):
        partition, t1 = cc_mst(
            sim,
            g,
            max_phases=phase_budget(n),
            unfinished_target=unfinished_budget(n),
        )
        cg, _views = build_component_graph(sim, g, t1.edges)
    labels = Forest(n, t1.edges).labeling.labels
    level = level_after(cg, cg.isolated(), labels, n)

    with sim.phase("kkt_sample"):
        keep = Fraction(1) / Fraction(math.sqrt(n))
        h_edges: dict[tuple[int, int], WeightedEdge] = {}
        owners: dict[int, list[tuple[int, int]]] = {}
        for pair in sorted(level.edges):
            owners.setdefault(pair[0], []).append(pair)
        queues: list[list[Message]] = [[] for _ in range(n)]
        for v in sorted(owners):
            rng = sim.rng_for("kkt", v)
            for pair in owners[v]:
                if bernoulli(rng, keep):
                    wit = level.edges[pair]
                    h_edges[pair] = wit
                    queues[v].append(Message(v, pair[1], (wit.u, wit.v)))
        sim.route_idt(queues)
        if len(h_edges) > 4 * n * math.sqrt(n):
            raise sim.violation(
                "kkt_sample_bound", f"{len(h_edges)} sampled edges exceed 4n^(3/2)"
            )
        h_level = LevelGraph(n, level.vertices, h_edges, level.labels)

    with sim.phase("sqmst_h"):
        sparse_forest = sq_mst(sim, h_level, stream_tag="h")

    with sim.phase("flight_filter"):
        leader_forest = Forest(
            n,
            frozenset(
                make_edge(labels[e.u], labels[e.v], e.w) for e in sparse_forest.edges
            ),
        )
        light: dict[tuple[int, int], WeightedEdge] = {}
        for pair, wit in sorted(level.edges.items()):
            if wit.w <= forest_path_max_weight(leader_forest, pair[0], pair[1]):
                light[pair] = wit
        if len(light) > 4 * n * math.sqrt(n):
            raise sim.violation(
                "kkt_flight_bound", f"{len(light)} light edges exceed 4n^(3/2)"
            )
        light_level = LevelGraph(n, level.vertices, light, level.labels)

    with sim.phase("sqmst_el"):
        finish = sq_mst(sim, light_level, stream_tag="el")

    return Forest(n, t1.edges | finish.edges)
