"""Seeded graph generators for experiments and tests."""

from __future__ import annotations

from .graphs import GraphView, WeightedEdge, make_edge
from .net import derived_rng


def gnp(n: int, p: float, seed: int) -> GraphView:
    """Each unordered pair becomes a unit-weight edge with probability p."""
    if not 0 <= p <= 1:
        raise ValueError("edge probability must be in [0, 1]")
    if n < 2:
        raise ValueError("need at least two vertices")
    rng = derived_rng(seed, "gnp", n, p)
    edges = [
        make_edge(u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < p
    ]
    return GraphView(n, edges)


def weighted_clique(n: int, seed: int, allow_ties: bool = False) -> GraphView:
    """Complete graph; weights are a permutation of 1..m unless ties are on."""
    if n < 2:
        raise ValueError("need at least two vertices")
    rng = derived_rng(seed, "weighted-clique", n, allow_ties)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    if allow_ties:
        weights = [rng.randint(1, max(1, len(pairs) // 2)) for _ in pairs]
    else:
        weights = list(range(1, len(pairs) + 1))
        rng.shuffle(weights)
    return GraphView(n, (make_edge(u, v, w) for (u, v), w in zip(pairs, weights)))


def components(n: int, k: int, seed: int) -> GraphView:
    """Exactly k connected components of near-equal size."""
    if not 1 <= k <= n:
        raise ValueError("component count must be in [1, n]")
    rng = derived_rng(seed, "components", n, k)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    edges: list[WeightedEdge] = []
    start = 0
    for size in sizes:
        block = list(range(start, start + size))
        for idx in range(1, size):
            edges.append(make_edge(block[idx], block[rng.randrange(idx)]))
        extra = min(size * (size - 1) // 2 - (size - 1), size)
        tried = {(e.u, e.v) for e in edges}
        while extra > 0:
            u, v = rng.sample(block, 2) if size > 1 else (None, None)
            if u is None:
                break
            pair = (min(u, v), max(u, v))
            if pair in tried:
                extra -= 1
                continue
            tried.add(pair)
            edges.append(make_edge(*pair))
            extra -= 1
        start += size
    return GraphView(n, edges)


def barbell(n: int, seed: int = 0) -> GraphView:
    """Two cliques joined by a path through the remaining vertices."""
    if n < 4:
        raise ValueError("need at least four vertices")
    side = max(2, n // 3)
    left = list(range(side))
    right = list(range(n - side, n))
    middle = list(range(side - 1, n - side + 1))
    edges = []
    for block in (left, right):
        for i, u in enumerate(block):
            for v in block[i + 1 :]:
                edges.append(make_edge(u, v))
    for a, b in zip(middle, middle[1:]):
        edges.append(make_edge(a, b))
    return GraphView(n, set(edges))


def path(n: int, seed: int = 0) -> GraphView:
    if n < 2:
        raise ValueError("need at least two vertices")
    return GraphView(n, (make_edge(v, v + 1) for v in range(n - 1)))


GENERATORS = {
    "gnp": gnp,
    "weighted-clique": weighted_clique,
    "components": components,
    "barbell": barbell,
    "path": path,
}
