"""Sequential graph types and reference oracles.

Everything in this module is pure and deterministic: immutable graph
views, the component/MST oracles that distributed runs are checked
against, and small brute-force cut utilities (capped at 20 vertices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence, TextIO, Union

INFINITY = math.inf

#: brute-force cut enumeration is 2^(n-1); refuse anything bigger
BRUTE_FORCE_LIMIT = 20

Weight = Union[int, float]


class WeightedEdge(NamedTuple):
    u: int
    v: int
    w: Weight

    @property
    def key(self) -> tuple[Weight, int, int]:
        """Strict total order: weight ties broken by endpoint ids."""
        return (self.w, self.u, self.v)


def make_edge(u: int, v: int, w: Weight = 1) -> WeightedEdge:
    """Canonical edge with u < v. Self-loops are rejected."""
    if u == v:
        raise ValueError(f"self-loop at vertex {u}")
    if u > v:
        u, v = v, u
    return WeightedEdge(u, v, w)


class UnionFind:
    """Array-backed union-find with path halving and union by size."""

    __slots__ = ("parent", "size")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def min_labels(self, n: int) -> list[int]:
        """label[v] = minimum vertex id in v's group."""
        mins: dict[int, int] = {}
        for v in range(n):
            r = self.find(v)
            if r not in mins or v < mins[r]:
                mins[r] = v
        return [mins[self.find(v)] for v in range(n)]


@dataclass(frozen=True)
class ComponentLabeling:
    """Map v -> minimum id of v's component (the component leader)."""

    labels: tuple[int, ...]

    def of(self, v: int) -> int:
        return self.labels[v]

    @cached_property
    def leaders(self) -> frozenset[int]:
        return frozenset(self.labels)

    @property
    def count(self) -> int:
        return len(self.leaders)

    def members(self, leader: int) -> tuple[int, ...]:
        return tuple(v for v, l in enumerate(self.labels) if l == leader)


class GraphView:
    """Undirected simple graph over dense vertex ids 0..n-1.

    Adjacency is stored symmetrically, sorted by neighbor id. Instances
    are immutable after construction and safe to share across workers.
    """

    __slots__ = ("n", "m", "adj", "_by_key")

    def __init__(self, n: int, edges: Iterable[WeightedEdge]):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        adj: list[list[tuple[int, Weight]]] = [[] for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        m = 0
        for e in edges:
            if not (0 <= e.u < n and 0 <= e.v < n):
                raise ValueError(f"edge {e} out of range for n={n}")
            if e.u == e.v:
                raise ValueError(f"self-loop {e}")
            if e.w == INFINITY or e.w < 0:
                raise ValueError(f"illegal weight on {e}")
            pair = (e.u, e.v) if e.u < e.v else (e.v, e.u)
            if pair in seen:
                raise ValueError(f"parallel edge {pair}")
            seen.add(pair)
            adj[e.u].append((e.v, e.w))
            adj[e.v].append((e.u, e.w))
            m += 1
        self.n = n
        self.m = m
        self.adj = tuple(tuple(sorted(nbrs)) for nbrs in adj)
        self._by_key: dict[int, tuple[WeightedEdge, ...]] = {}

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Sequence]) -> "GraphView":
        return cls(n, (make_edge(*p) if len(p) == 3 else make_edge(p[0], p[1]) for p in pairs))

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def incident_edges(self, v: int) -> list[WeightedEdge]:
        return [make_edge(v, u, w) for u, w in self.adj[v]]

    def incident_by_key(self, v: int) -> tuple[WeightedEdge, ...]:
        """Incident edges sorted by the (w, u, v) total order; cached."""
        cached = self._by_key.get(v)
        if cached is None:
            cached = tuple(sorted(self.incident_edges(v), key=lambda e: e.key))
            self._by_key[v] = cached
        return cached

    def edges(self) -> Iterator[WeightedEdge]:
        for u in range(self.n):
            for v, w in self.adj[u]:
                if u < v:
                    yield WeightedEdge(u, v, w)

    def edge_set(self) -> frozenset[WeightedEdge]:
        return frozenset(self.edges())

    def with_unit_weights(self) -> "GraphView":
        return GraphView(self.n, (WeightedEdge(u, v, 1) for u, v, _ in self.edges()))

    def __repr__(self) -> str:
        return f"GraphView(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class Forest:
    """Acyclic edge set over n vertices, labeled by min-id per tree."""

    n: int
    edges: frozenset[WeightedEdge]

    def __post_init__(self):
        uf = UnionFind(self.n)
        for e in self.edges:
            if not uf.union(e.u, e.v):
                raise ValueError(f"cycle introduced by {e}")

    @cached_property
    def labeling(self) -> ComponentLabeling:
        uf = UnionFind(self.n)
        for e in self.edges:
            uf.union(e.u, e.v)
        return ComponentLabeling(tuple(uf.min_labels(self.n)))

    @property
    def tree_count(self) -> int:
        # acyclicity makes this exact
        return self.n - len(self.edges)

    @property
    def total_weight(self) -> Weight:
        return sum(e.w for e in self.edges)

    @cached_property
    def adjacency(self) -> dict[int, list[tuple[int, Weight]]]:
        out: dict[int, list[tuple[int, Weight]]] = {}
        for e in self.edges:
            out.setdefault(e.u, []).append((e.v, e.w))
            out.setdefault(e.v, []).append((e.u, e.w))
        return out


@dataclass(frozen=True)
class ComponentGraph:
    """Clusters (by leader id) plus min-weight collapsed inter-edges.

    inter_edges maps (leaderA, leaderB) with leaderA < leaderB to the
    witness edge attaining the minimum weight across that pair, ties
    broken by the (w, u, v) edge order.
    """

    components: frozenset[int]
    inter_edges: dict[tuple[int, int], WeightedEdge]

    @property
    def edge_count(self) -> int:
        return len(self.inter_edges)

    def isolated(self) -> frozenset[int]:
        touched = {c for pair in self.inter_edges for c in pair}
        return frozenset(self.components - touched)


class EdgeClass(Enum):
    LIGHT = "light"
    HEAVY = "heavy"


def connected_components(g: GraphView) -> ComponentLabeling:
    """Min-id component labels via BFS (independent of union-find paths)."""
    labels = [-1] * g.n
    for start in range(g.n):
        if labels[start] != -1:
            continue
        labels[start] = start
        queue = [start]
        while queue:
            nxt = []
            for v in queue:
                for u, _ in g.adj[v]:
                    if labels[u] == -1:
                        labels[u] = start
                        nxt.append(u)
            queue = nxt
    return ComponentLabeling(tuple(labels))


def kruskal_mst(g: GraphView) -> Forest:
    """Minimum spanning forest, unique under the (w, u, v) tie-break."""
    uf = UnionFind(g.n)
    chosen = []
    for e in sorted(g.edges(), key=lambda e: e.key):
        if uf.union(e.u, e.v):
            chosen.append(e)
    return Forest(g.n, frozenset(chosen))


def spanning_forest_local(edges: Iterable[WeightedEdge], n: int) -> Forest:
    """Deterministic spanning forest of an edge set (processed in key order)."""
    uf = UnionFind(n)
    chosen = []
    for e in sorted(set(edges), key=lambda e: e.key):
        if not (0 <= e.u < n and 0 <= e.v < n):
            raise ValueError(f"edge {e} out of range for n={n}")
        if uf.union(e.u, e.v):
            chosen.append(e)
    return Forest(n, frozenset(chosen))


def build_component_graph_reference(g: GraphView, sub: Iterable[WeightedEdge]) -> ComponentGraph:
    """Collapse g's edges across the components induced by `sub`."""
    uf = UnionFind(g.n)
    for e in sub:
        uf.union(e.u, e.v)
    labels = uf.min_labels(g.n)
    inter: dict[tuple[int, int], WeightedEdge] = {}
    for e in g.edges():
        a, b = labels[e.u], labels[e.v]
        if a == b:
            continue
        pair = (a, b) if a < b else (b, a)
        best = inter.get(pair)
        if best is None or e.key < best.key:
            inter[pair] = e
    return ComponentGraph(frozenset(labels), inter)


def forest_path_max_weight(f: Forest, u: int, v: int) -> Weight:
    """Maximum edge weight on the forest path u..v, INFINITY if none."""
    if u == v:
        return 0
    adj = f.adjacency
    best = {u: 0}
    queue = [u]
    while queue:
        nxt = []
        for x in queue:
            for y, w in adj.get(x, ()):
                if y not in best:
                    best[y] = max(best[x], w)
                    if y == v:
                        return best[y]
                    nxt.append(y)
        queue = nxt
    return INFINITY


def f_light_classify(f: Forest, e: WeightedEdge) -> EdgeClass:
    """HEAVY iff e outweighs the heaviest edge on its forest path."""
    return EdgeClass.HEAVY if e.w > forest_path_max_weight(f, e.u, e.v) else EdgeClass.LIGHT


def _check_brute_force_size(n: int) -> None:
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force capped at n={BRUTE_FORCE_LIMIT}, got {n}")
    if n < 2:
        raise ValueError("cut enumeration needs at least two vertices")


def _adjacency_masks(g: GraphView) -> list[int]:
    masks = [0] * g.n
    for u in range(g.n):
        acc = 0
        for v, _ in g.adj[u]:
            acc |= 1 << v
        masks[u] = acc
    return masks


def enumerate_cuts(g: GraphView) -> Iterator[tuple[frozenset[int], int]]:
    """Yield every non-trivial bipartition once, with its crossing count.

    The yielded side is the one not containing vertex 0.
    """
    _check_brute_force_size(g.n)
    masks = _adjacency_masks(g)
    n = g.n
    full = (1 << n) - 1
    for bits in range(1, 1 << (n - 1)):
        side = bits << 1  # vertex 0 always on the other side
        rest = full & ~side
        cut = 0
        probe = side
        while probe:
            low = probe & -probe
            cut += (masks[low.bit_length() - 1] & rest).bit_count()
            probe ^= low
        yield frozenset(i for i in range(1, n) if side >> i & 1), cut


def max_cut_bruteforce(g: GraphView) -> int:
    """Exact max-cut size by direct edge scanning over all bipartitions."""
    _check_brute_force_size(g.n)
    edge_list = list(g.edges())
    best = 0
    for bits in range(1, 1 << (g.n - 1)):
        mask = bits << 1
        cut = 0
        for u, v, _ in edge_list:
            cut += (mask >> u & 1) != (mask >> v & 1)
        if cut > best:
            best = cut
    return best


def rounded_degree(d: int) -> int:
    """Largest power of two not exceeding d."""
    if d < 1:
        raise ValueError("rounded degree needs a positive degree")
    return 1 << (d.bit_length() - 1)


def edge_rounded_degree(g: GraphView, e: WeightedEdge) -> int:
    return min(rounded_degree(g.degree(e.u)), rounded_degree(g.degree(e.v)))


def k_projection(cut: Iterable[WeightedEdge], k: int, g: GraphView) -> frozenset[WeightedEdge]:
    """Subset of the cut whose rounded edge degree equals k (a power of two)."""
    if k < 1 or k & (k - 1):
        raise ValueError(f"k must be a power of two, got {k}")
    return frozenset(e for e in cut if edge_rounded_degree(g, e) == k)


# graph file format: first line "n m", then one edge per line as
# "u v [w]"; '#' starts a comment line; a missing weight means 1.

def write_graph(g: GraphView, fh: TextIO) -> None:
    fh.write(f"{g.n} {g.m}\n")
    for u, v, w in sorted(g.edges()):
        fh.write(f"{u} {v} {w}\n")


def read_graph(fh: TextIO) -> GraphView:
    header = None
    edges = []
    for raw in fh:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise ValueError(f"expected 'n m' header, got {line!r}")
            header = (int(parts[0]), int(parts[1]))
            continue
        if len(parts) not in (2, 3):
            raise ValueError(f"bad edge line {line!r}")
        u, v = int(parts[0]), int(parts[1])
        w = int(parts[2]) if len(parts) == 3 else 1
        edges.append(make_edge(u, v, w))
    if header is None:
        raise ValueError("empty graph file")
    n, m = header
    if len(edges) != m:
        raise ValueError(f"header promised {m} edges, found {len(edges)}")
    return GraphView(n, edges)
