import random

import pytest

from cliquesim.graphs import GraphView, make_edge


def random_graph(n: int, p: float, seed: int, weighted: bool = False) -> GraphView:
    """Small test-local generator, independent of the package generators."""
    rng = random.Random(seed)
    edges = []
    w = 0
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                w += 1
                edges.append(make_edge(u, v, w if weighted else 1))
    return GraphView(n, edges)


@pytest.fixture
def triangle():
    return GraphView(3, [make_edge(0, 1, 1), make_edge(1, 2, 2), make_edge(0, 2, 3)])
