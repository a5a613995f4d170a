"""Degree-based edge sampling, uniform edge sampling, and verifiers.

The keep probability for an edge is c * (log2 n)^2 / rd(e), clamped to
1, where rd(e) is the smaller endpoint's degree rounded down to a power
of two. Probabilities are kept as exact rationals and draws compare a
53-bit uniform against them, so runs reproduce bit-for-bit.

Note on regimes: with the default constant c = 50 every probability
clamps to 1 at bench scale (any degree up to 50 * log2(n)^2), so the
sampled set equals the input and the coverage claims hold vacuously.
Non-vacuous checks use c <= 1 on dense graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .graphs import (
    GraphView,
    WeightedEdge,
    build_component_graph_reference,
    connected_components,
    rounded_degree,
)
from .net import CliqueSimulator, bernoulli, derived_rng

MODE_EXHAUSTIVE = "EXHAUSTIVE"
MODE_RANDOMIZED = "RANDOMIZED"

#: exhaustive cut checking is 2^(n-1) bipartitions
EXHAUSTIVE_LIMIT = 20

DEFAULT_RANDOM_CUTS = 10_000


def log2_squared(n: int) -> Fraction:
    """(log2 n)^2 as an exact rational of the squared float log."""
    if n < 2:
        raise ValueError("need n >= 2")
    return Fraction(math.log2(n)) ** 2


def edge_probability(rd_e: int, n: int, c) -> Fraction:
    """min(1, c * (log2 n)^2 / rd_e)."""
    if rd_e < 1:
        raise ValueError("rounded degree must be >= 1")
    p = Fraction(c) * log2_squared(n) / rd_e
    return min(Fraction(1), p)


def charge_edge(u: int, v: int, rd_u: int, rd_v: int) -> int:
    """The unique endpoint an edge is charged to: lower rounded degree
    wins, ids break ties."""
    if rd_u < rd_v or (rd_u == rd_v and u < v):
        return u
    return v


@dataclass(frozen=True)
class SampleOutcome:
    sampled: frozenset[WeightedEdge]
    charged_count: dict[int, int]
    probabilities: dict[WeightedEdge, Fraction]


def _charged_edges(g: GraphView) -> dict[int, list[WeightedEdge]]:
    """Edges grouped by charged endpoint, in deterministic key order."""
    rd = [rounded_degree(g.degree(v)) if g.degree(v) else 0 for v in range(g.n)]
    out: dict[int, list[WeightedEdge]] = {v: [] for v in range(g.n)}
    for e in g.edges():
        out[charge_edge(e.u, e.v, rd[e.u], rd[e.v])].append(e)
    for v in out:
        out[v].sort(key=lambda e: e.key)
    return out


def central_sample_edges(g: GraphView, c, seed: int) -> SampleOutcome:
    """Sequential twin of the distributed sampler: same streams, no network."""
    c = Fraction(c)
    if c <= 0:
        raise ValueError("sampling constant must be positive")
    rd = [rounded_degree(g.degree(v)) if g.degree(v) else 0 for v in range(g.n)]
    charged = _charged_edges(g)
    kept = []
    probabilities: dict[WeightedEdge, Fraction] = {}
    for v in range(g.n):
        if not charged[v]:
            continue
        rng = derived_rng(seed, "edge-sample", v)
        for e in charged[v]:
            p = edge_probability(min(rd[e.u], rd[e.v]), g.n, c)
            probabilities[e] = p
            if bernoulli(rng, p):
                kept.append(e)
    counts = {v: len(edges) for v, edges in charged.items()}
    return SampleOutcome(frozenset(kept), counts, probabilities)


def sample_edges_distributed(sim: CliqueSimulator, g: GraphView, c=None) -> SampleOutcome:
    """Each charged endpoint keeps its edges independently.

    One broadcast makes all degrees known; afterwards every charging
    decision and draw is local to the charging node's stream. The
    outcome matches `central_sample_edges` with the same seed exactly.
    """
    c = Fraction(c if c is not None else sim.config.c_sample)
    if c <= 0:
        raise ValueError("sampling constant must be positive")
    if g.n != sim.n:
        raise ValueError("graph size does not match the simulator")
    degrees = sim.broadcast_value([g.degree(v) for v in range(g.n)])
    rd = [rounded_degree(d) if d else 0 for d in degrees]
    kept = []
    probabilities: dict[WeightedEdge, Fraction] = {}
    counts: dict[int, int] = {v: 0 for v in range(g.n)}
    for v in range(g.n):
        mine = [
            e
            for e in g.incident_by_key(v)
            if charge_edge(e.u, e.v, rd[e.u], rd[e.v]) == v
        ]
        counts[v] = len(mine)
        if not mine:
            continue
        rng = sim.rng_for("edge-sample", v)
        for e in mine:
            p = edge_probability(min(rd[e.u], rd[e.v]), g.n, c)
            probabilities[e] = p
            if bernoulli(rng, p):
                kept.append(e)
    return SampleOutcome(frozenset(kept), counts, probabilities)


def kkt_sample(g: GraphView, p, rng) -> GraphView:
    """Keep each edge independently with probability p."""
    p = Fraction(p)
    if not 0 < p <= 1:
        raise ValueError("keep probability must be in (0, 1]")
    kept = [e for e in sorted(g.edges(), key=lambda e: e.key) if bernoulli(rng, p)]
    return GraphView(g.n, kept)


@dataclass(frozen=True)
class CutCoverageReport:
    mode: str
    cuts_checked: int
    large_cuts_checked: int
    threshold: int
    misses: tuple[tuple[int, int], ...]  # (side size, cut size)

    @property
    def passed(self) -> bool:
        return not self.misses

    def json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "cuts_checked": self.cuts_checked,
            "threshold": self.threshold,
            "misses": [{"side_size": s, "cut_size": c} for s, c in self.misses],
            "pass": self.passed,
        }


def _adjacency_masks(g: GraphView) -> list[int]:
    masks = [0] * g.n
    for u in range(g.n):
        acc = 0
        for v, _ in g.adj[u]:
            acc |= 1 << v
        masks[u] = acc
    return masks


def _cut_size(masks: list[int], side_mask: int, n: int) -> int:
    rest = ((1 << n) - 1) & ~side_mask
    total = 0
    probe = side_mask
    while probe:
        low = probe & -probe
        total += (masks[low.bit_length() - 1] & rest).bit_count()
        probe ^= low
    return total


def _structured_sides(g: GraphView) -> Iterable[int]:
    """Near-threshold cut families: singletons, degree prefixes, BFS layers."""
    for v in range(g.n):
        yield 1 << v
    by_degree = sorted(range(g.n), key=lambda v: (g.degree(v), v))
    mask = 0
    for v in by_degree[:-1]:
        mask |= 1 << v
        yield mask
    order = [v for v in connected_components_order(g)]
    mask = 0
    for v in order[:-1]:
        mask |= 1 << v
        yield mask


def connected_components_order(g: GraphView) -> list[int]:
    """BFS visiting order from vertex 0, restarting at unseen vertices."""
    seen = [False] * g.n
    order = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        queue = [start]
        while queue:
            nxt = []
            for v in queue:
                order.append(v)
                for u, _ in g.adj[v]:
                    if not seen[u]:
                        seen[u] = True
                        nxt.append(u)
            queue = nxt
    return order


def verify_large_cut_coverage(
    g: GraphView,
    sampled: Iterable[WeightedEdge],
    threshold: int,
    seed: int = 0,
    random_cuts: int = DEFAULT_RANDOM_CUTS,
) -> CutCoverageReport:
    """Check that every examined cut of size >= threshold has a sampled edge.

    Up to 20 vertices every bipartition is enumerated; beyond that a
    randomized mode probes `random_cuts` uniform bipartitions plus the
    structured families, which hug the threshold far more closely than
    uniform cuts do.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    sampled_list = sorted(set(sampled), key=lambda e: e.key)
    masks = _adjacency_masks(g)

    def covered(side_mask: int) -> bool:
        for u, v, _ in sampled_list:
            if (side_mask >> u & 1) != (side_mask >> v & 1):
                return True
        return False

    if g.n <= EXHAUSTIVE_LIMIT:
        mode = MODE_EXHAUSTIVE
        sides: Iterable[int] = (bits << 1 for bits in range(1, 1 << (g.n - 1)))
    else:
        mode = MODE_RANDOMIZED
        rng = derived_rng(seed, "cut-verify", g.n, g.m)
        full = (1 << g.n) - 1
        collected = list(_structured_sides(g))
        collected.extend(rng.getrandbits(g.n) for _ in range(random_cuts))
        sides = (s for s in collected if s not in (0, full))

    cuts_checked = 0
    large = 0
    misses: list[tuple[int, int]] = []
    for side in sides:
        cuts_checked += 1
        size = _cut_size(masks, side, g.n)
        if size < threshold:
            continue
        large += 1
        if not covered(side):
            misses.append((side.bit_count(), size))
    return CutCoverageReport(mode, cuts_checked, large, threshold, tuple(misses))


def intercomponent_edge_count(g: GraphView, sampled: Iterable[WeightedEdge]) -> int:
    """Collapsed inter-component edge count induced by the sampled set."""
    return build_component_graph_reference(g, sampled).edge_count
