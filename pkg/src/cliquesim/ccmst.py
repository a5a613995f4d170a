"""Cluster merging over the simulated network.

The default strategy merges every cluster along its true minimum
outgoing edge each sub-iteration (leader aggregation + dissemination),
so all accepted edges are spanning-tree edges by the cut property and
the cluster count at least halves per sub-iteration.

Raw min-outgoing merging does not keep the weight-separation invariant
(a cluster may hold a heavy tree edge while a lighter edge still leaves
it), so reported partitions are settled first: accepted edges heavier
than the lightest edge still crossing the partition are trimmed, which
splits exactly back to the components of the light-edge prefix. The
trimmed partition provably satisfies weight separation, and the trim
also subsumes the removal of placeholder edges on padded inputs.

The experimental "squaring" strategy disseminates, per cluster, the s
lightest per-neighbor minima (s = current minimum cluster size) and
merges locally with clusters frozen once they reach size s*s. It is
faster per phase but can accept non-tree edges; divergence is detected
against the sequential oracle by the callers' verification layer.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from .graphs import (
    ComponentLabeling,
    Forest,
    GraphView,
    UnionFind,
    WeightedEdge,
)
from .net import (
    STRATEGY_SAFE_BORUVKA,
    STRATEGY_SQUARING,
    CliqueSimulator,
)

log = logging.getLogger("cliquesim")


@dataclass(frozen=True)
class ClusterPartition:
    """Clusters keyed by leader (minimum member id) with spanning trees."""

    clusters: dict[int, frozenset[int]]
    trees: dict[int, frozenset[WeightedEdge]]
    phase: int
    min_cluster_size: int

    @cached_property
    def labeling(self) -> ComponentLabeling:
        n = sum(len(members) for members in self.clusters.values())
        labels = [0] * n
        for leader, members in self.clusters.items():
            for v in members:
                labels[v] = leader
        return ComponentLabeling(tuple(labels))

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)


def weight_separation_violations(
    labels: list[int], kept: list[WeightedEdge], g: GraphView
) -> list[str]:
    """Clusters whose max tree weight exceeds some edge leaving them."""
    max_tree: dict[int, float] = {}
    for e in kept:
        leader = labels[e.u]
        if e.w > max_tree.get(leader, -1):
            max_tree[leader] = e.w
    min_cross: dict[int, float] = {}
    for e in g.edges():
        a, b = labels[e.u], labels[e.v]
        if a == b:
            continue
        for side in (a, b):
            if e.w < min_cross.get(side, math.inf):
                min_cross[side] = e.w
    out = []
    for leader, heavy in max_tree.items():
        light = min_cross.get(leader, math.inf)
        if light < heavy:
            out.append(f"cluster {leader}: tree weight {heavy} > outgoing {light}")
    return out


def phase_budget(n: int) -> int:
    """Merging-phase cap that comfortably covers the halving schedule."""
    if n < 6:
        return 3
    return math.ceil(max(1.0, math.log2(max(1.0, math.log2(math.log2(n)))))) + 3


def unfinished_budget(n: int) -> int:
    """Target count of still-active clusters after the reduction stage."""
    if n < 2:
        return 1
    return max(1, int(n // (math.log2(n) ** 2)))


class _MergeState:
    def __init__(self, sim: CliqueSimulator, gw: GraphView):
        self.sim = sim
        self.gw = gw
        self.n = gw.n
        self.labels = list(range(self.n))
        self.accepted: list[WeightedEdge] = []
        self._pointers = [0] * self.n

    def advance_pointers(self) -> None:
        # edges only ever become internal, so pointers move one way
        labels = self.labels
        for v in range(self.n):
            inc = self.gw.incident_by_key(v)
            i = self._pointers[v]
            while i < len(inc) and labels[inc[i].u] == labels[inc[i].v]:
                i += 1
            self._pointers[v] = i

    def min_outgoing_items(self) -> list[list[tuple[int, WeightedEdge]]]:
        """Per node: its lightest incident edge leaving its own cluster."""
        self.advance_pointers()
        items: list[list[tuple[int, WeightedEdge]]] = [[] for _ in range(self.n)]
        for v in range(self.n):
            inc = self.gw.incident_by_key(v)
            i = self._pointers[v]
            if i < len(inc):
                items[v].append((self.labels[v], inc[i]))
        return items

    def per_neighbor_min_items(self) -> list[list[tuple[int, WeightedEdge]]]:
        """Per node: the lightest incident edge toward each foreign cluster."""
        labels = self.labels
        items: list[list[tuple[int, WeightedEdge]]] = [[] for _ in range(self.n)]
        for v in range(self.n):
            best: dict[int, WeightedEdge] = {}
            for e in self.gw.incident_by_key(v):
                foreign = labels[e.u] if labels[e.u] != labels[v] else labels[e.v]
                if foreign == labels[v]:
                    continue
                if foreign not in best:
                    best[foreign] = e
            items[v] = [(labels[v], e) for _, e in sorted(best.items())]
        return items

    def cluster_sizes(self) -> dict[int, int]:
        sizes: dict[int, int] = {}
        for l in self.labels:
            sizes[l] = sizes.get(l, 0) + 1
        return sizes

    def merge_along(self, edges: list[WeightedEdge]) -> None:
        parent: dict[int, int] = {}

        def find(x: int) -> int:
            root = x
            while parent.get(root, root) != root:
                root = parent[root]
            while parent.get(x, x) != x:
                parent[x], x = root, parent[x]
            return root

        for e in edges:
            a, b = find(self.labels[e.u]), find(self.labels[e.v])
            if a != b:
                parent[max(a, b)] = min(a, b)
        self.labels = [find(l) for l in self.labels]
        self.accepted.extend(edges)

    def settle(self, w_keep) -> tuple[list[int], list[WeightedEdge]]:
        """Partition induced by accepted edges at or below the cutoff weight."""
        kept = [e for e in self.accepted if w_keep is None or e.w <= w_keep]
        uf = UnionFind(self.n)
        for e in kept:
            uf.union(e.u, e.v)
        return uf.min_labels(self.n), kept


def cc_mst(
    sim: CliqueSimulator,
    gw: GraphView,
    max_phases: Optional[int] = None,
    strategy: Optional[str] = None,
    unfinished_target: int = 0,
) -> tuple[ClusterPartition, Forest]:
    """Grow spanning-tree clusters until few enough remain active.

    Pairs of vertices with no edge in `gw` are treated as joined by a
    maximal-weight placeholder no cluster ever merges along; a cluster
    with no real outgoing edge simply stops (its tree is complete).

    Stops as soon as the settled count of still-active clusters is
    provably at most `unfinished_target`, or after `max_phases` phases
    (phase k runs 2^(k-1) merge sub-iterations), whichever comes first.
    Every node knows the full partition and all trees throughout.
    """
    strategy = strategy or sim.config.ccmst_strategy
    if max_phases is not None and max_phases < 1:
        raise ValueError("max_phases must be >= 1")
    state = _MergeState(sim, gw)
    n = gw.n
    squaring = strategy == STRATEGY_SQUARING

    hard_cap = 2 * math.ceil(math.log2(max(2, n))) + 6
    sub_iterations = 0
    completed_phases = 0
    boundary_pending = False
    next_boundary = 1
    counts_by_phase: list[int] = []

    def boundary_check(w_keep) -> None:
        labels, kept = state.settle(w_keep)
        counts_by_phase.append(len(set(labels)))
        problems = weight_separation_violations(labels, kept, gw)
        if problems:
            code = "SQUARING_DIVERGENCE" if squaring else "WEIGHT_SEPARATION"
            raise sim.violation(code, problems[0])

    while True:
        if squaring:
            sizes = state.cluster_sizes()
            s = min(sizes.values())
            agg = sim.converge_min(state.labels, state.per_neighbor_min_items())
            offers: list[list[tuple]] = [[] for _ in range(n)]
            for leader in sorted(agg):
                ranked = sorted(agg[leader].values(), key=lambda e: e.key)
                offers[leader] = [(e.u, e.v, e.w) for e in ranked[:s]]
            known = sim.disseminate_all(offers)
        else:
            agg = sim.converge_min(state.labels, state.min_outgoing_items())
            picks: list[list[tuple]] = [[] for _ in range(n)]
            for leader in sorted(agg):
                e = agg[leader].get(leader)
                if e is not None:
                    picks[leader] = [(e.u, e.v, e.w)]
            known = sim.disseminate_all(picks)

        candidates = sorted(
            {WeightedEdge(u, v, w) for u, v, w in known}, key=lambda e: e.key
        )
        w_keep = candidates[0].w if candidates else None

        if boundary_pending:
            completed_phases += 1
            boundary_check(w_keep)
            boundary_pending = False
            if max_phases is not None and completed_phases >= max_phases:
                break

        active = {state.labels[e.u] for e in candidates} | {
            state.labels[e.v] for e in candidates
        }
        dropped = sum(1 for e in state.accepted if w_keep is not None and e.w > w_keep)
        # len(active) counts clusters still holding an outgoing edge; each
        # trimmed edge can split one settled cluster into two active pieces
        done = not candidates or len(active) + 2 * dropped <= unfinished_target
        if done or sub_iterations >= hard_cap:
            if not done:
                log.warning("merge cap of %d sub-iterations reached", hard_cap)
            boundary_check(w_keep)
            break

        if squaring:
            _squaring_merge(state, candidates, max(2, s * s))
        else:
            state.merge_along(candidates)
        sub_iterations += 1
        if squaring or sub_iterations >= next_boundary:
            boundary_pending = True
            if not squaring:
                next_boundary += 1 << (completed_phases + 1)

    labels, kept = state.settle(w_keep)
    if not counts_by_phase or counts_by_phase[-1] != len(set(labels)):
        counts_by_phase.append(len(set(labels)))
    sim.extras["ccmst_phases"] = completed_phases + (1 if boundary_pending else 0)
    sim.extras["cluster_counts_by_phase"] = list(counts_by_phase)

    clusters: dict[int, set[int]] = {}
    for v, leader in enumerate(labels):
        clusters.setdefault(leader, set()).add(v)
    trees: dict[int, set[WeightedEdge]] = {leader: set() for leader in clusters}
    for e in kept:
        trees[labels[e.u]].add(e)
    partition = ClusterPartition(
        clusters={leader: frozenset(members) for leader, members in sorted(clusters.items())},
        trees={leader: frozenset(tree) for leader, tree in sorted(trees.items())},
        phase=completed_phases + (1 if boundary_pending else 0),
        min_cluster_size=min(len(m) for m in clusters.values()),
    )
    return partition, Forest(n, frozenset(kept))


def _squaring_merge(state: _MergeState, candidates: list[WeightedEdge], freeze_at: int) -> None:
    """Local deterministic merge over the offered edges with size freezing.

    The first pass joins pairs of sub-threshold clusters; the second
    lets leftover sub-threshold clusters be absorbed by frozen ones, so
    no cluster with an offer on the table stalls below the target size.
    """
    labels = state.labels
    parent: dict[int, int] = {}
    sizes = state.cluster_sizes()

    def find(x: int) -> int:
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(x, x) != x:
            parent[x], x = root, parent[x]
        return root

    taken = []
    for both_required in (True, False):
        for e in candidates:
            a, b = find(labels[e.u]), find(labels[e.v])
            if a == b:
                continue
            if both_required:
                mergeable = sizes[a] < freeze_at and sizes[b] < freeze_at
            else:
                mergeable = min(sizes[a], sizes[b]) < freeze_at
            if not mergeable:
                continue
            keep, drop = min(a, b), max(a, b)
            sizes[keep] = sizes[a] + sizes[b]
            parent[drop] = keep
            taken.append(e)
    state.labels = [find(l) for l in labels]
    state.accepted.extend(taken)
