"""Model contract tests: bandwidth limits, primitive validation, metrics."""

import json
import random

import pytest

from cliquesim.graphs import GraphView, make_edge
from cliquesim.net import (
    CliqueSimulator,
    Message,
    ProtocolViolation,
    SimConfig,
    derived_rng,
)

from conftest import random_graph


def sim_of(n, seed=0, **kw):
    return CliqueSimulator(SimConfig(n=n, seed=seed, **kw))


class TestRunRound:
    def test_all_silent(self):
        sim = sim_of(5)
        sim.run_round(lambda ctx: [])
        m = sim.metrics()
        assert m.rounds_total == 1
        assert m.messages_total == 0

    def test_one_node_to_all(self):
        g = GraphView(5, [make_edge(0, k) for k in range(1, 5)])
        sim = CliqueSimulator(SimConfig(n=5), g)

        def handler(ctx):
            if ctx.id == 0:
                return [Message(0, d, (len(ctx.adjacency),)) for d in range(1, 5)]
            return []

        sim.run_round(handler)
        assert sim.metrics().messages_total == 4
        assert all(len(sim.inbox(v)) == 1 for v in range(1, 5))
        assert sim.inbox(0) == ()
        assert sim.inbox(3)[0].payload == (4,)

    def test_double_send_rejected(self):
        sim = sim_of(4)
        with pytest.raises(ProtocolViolation) as err:
            sim.run_round(
                lambda ctx: [Message(ctx.id, 3, (1,)), Message(ctx.id, 3, (2,))]
                if ctx.id == 0
                else []
            )
        assert err.value.code == "BANDWIDTH_VIOLATION"

    def test_oversized_payload_rejected(self):
        sim = sim_of(3)
        with pytest.raises(ProtocolViolation):
            sim.run_round(
                lambda ctx: [Message(0, 1, (1, 2, 3, 4, 5))] if ctx.id == 0 else []
            )


class TestBroadcast:
    def test_star_degrees(self):
        g = GraphView(5, [make_edge(0, k) for k in range(1, 5)])
        sim = CliqueSimulator(SimConfig(n=5), g)
        seen = sim.broadcast_value([(g.degree(v),) for v in range(5)])
        assert [s[0] for s in seen] == [4, 1, 1, 1, 1]
        assert sim.metrics().rounds_total == 1

    def test_constant(self):
        sim = sim_of(6)
        assert sim.broadcast_value([(0,)] * 6) == [(0,)] * 6

    def test_labels_match_central(self):
        from cliquesim.graphs import connected_components

        g = random_graph(20, 0.15, seed=6)
        labels = connected_components(g)
        sim = CliqueSimulator(SimConfig(n=20), g)
        seen = sim.broadcast_value([(labels.of(v),) for v in range(20)])
        assert tuple(s[0] for s in seen) == labels.labels


class TestRouteIdt:
    def test_all_to_one_boundary(self):
        n = 8
        sim = sim_of(n)
        sets = [[Message(v, 0, (v,))] for v in range(n)]
        out = sim.route_idt(sets)
        assert len(out[0]) == n
        assert [m.src for m in out[0]] == list(range(n))

    def test_recv_overflow(self):
        n = 4
        sim = sim_of(n)
        sets = [[] for _ in range(n)]
        sets[1] = [Message(1, 0, (k,)) for k in range(n + 1)]
        with pytest.raises(ProtocolViolation) as err:
            sim.route_idt(sets)
        assert err.value.code == "IDT_PRECONDITION_RECV"
        assert sim.metrics().violations[0]["code"] == "IDT_PRECONDITION_RECV"

    def test_send_overflow(self):
        n = 4
        sim = sim_of(n)
        sets = [[] for _ in range(n)]
        sets[1] = [Message(1, k % n, (k,)) for k in range(n + 1)]
        with pytest.raises(ProtocolViolation) as err:
            sim.route_idt(sets)
        assert err.value.code == "IDT_PRECONDITION_SEND"

    def test_delivery_order_and_conservation(self):
        n = 16
        rng = random.Random(0)
        sim = sim_of(n)
        sets = [
            [Message(v, rng.randrange(n), (v, k)) for k in range(rng.randrange(n))]
            for v in range(n)
        ]
        total = sum(len(s) for s in sets)
        out = sim.route_idt(sets)
        assert sum(len(o) for o in out) == total
        for inbox in out:
            assert inbox == sorted(inbox, key=lambda m: m.src)
        m = sim.metrics()
        assert m.messages_total == total == m.receipts_total


class TestDistSort:
    def test_three_singletons(self):
        sim = sim_of(3)
        assert sim.dist_sort([[(5,)], [(2,)], [(9,)]]) == [[2], [1], [3]]

    def test_equal_keys_tiebreak_by_holder(self):
        sim = sim_of(3)
        ranks = sim.dist_sort([[(7,), (7,)], [(7,)], [(7,)]])
        assert ranks == [[1, 2], [3], [4]]

    def test_against_central_sort(self):
        n = 64
        rng = random.Random(12)
        keys = [[] for _ in range(n)]
        for _ in range(1000):
            keys[rng.randrange(n)].append((rng.randrange(500),))
        keys = [k[: n] for k in keys]
        sim = sim_of(n)
        ranks = sim.dist_sort(keys)
        tagged = sorted(
            (key, v, i) for v in range(n) for i, key in enumerate(keys[v])
        )
        expect = {(v, i): r for r, (_, v, i) in enumerate(tagged, start=1)}
        for v in range(n):
            for i, r in enumerate(ranks[v]):
                assert expect[(v, i)] == r

    def test_key_overflow(self):
        sim = sim_of(2)
        with pytest.raises(ProtocolViolation) as err:
            sim.dist_sort([[(1,), (2,), (3,)], []])
        assert err.value.code == "SORT_PRECONDITION"


class TestConvergeMin:
    def test_min_of_two_proposals(self):
        sim = sim_of(4)
        group = [0, 0, 2, 2]
        items = [
            [(("a", "b"), make_edge(0, 1, 7))],
            [(("a", "b"), make_edge(1, 2, 3))],
            [],
            [],
        ]
        out = sim.converge_min(group, items)
        assert out[0][("a", "b")] == make_edge(1, 2, 3)

    def test_empty(self):
        sim = sim_of(3)
        assert sim.converge_min([0, 0, 0], [[], [], []]) == {}

    def test_matches_central_group_by(self):
        n = 24
        rng = random.Random(5)
        group = [rng.choice([0, 7, 13]) for _ in range(n)]
        items = [
            [
                (rng.randrange(4), make_edge(*rng.sample(range(n), 2), rng.randrange(99)))
                for _ in range(rng.randrange(5))
            ]
            for _ in range(n)
        ]
        out = sim_of(n).converge_min(group, items)
        central = {}
        for v in range(n):
            for key, e in items[v]:
                bucket = central.setdefault(group[v], {})
                if key not in bucket or e.key < bucket[key].key:
                    bucket[key] = e
        assert out == central


class TestDisseminate:
    def test_single_item(self):
        sim = sim_of(5)
        assert sim.disseminate_all([[("x",)], [], [], [], []]) == [("x",)]

    def test_boundary_n_items(self):
        n = 6
        sim = sim_of(n)
        items = [[(v,)] for v in range(n)]
        assert sim.disseminate_all(items) == [(v,) for v in range(n)]

    def test_overflow(self):
        sim = sim_of(3)
        with pytest.raises(ProtocolViolation) as err:
            sim.disseminate_all([[(1,), (2,)], [(3,)], [(4,)]])
        assert err.value.code == "ITEM_OVERFLOW"

    def test_forest_identical_everywhere(self):
        # every node reconstructs the same forest from what it received
        n = 10
        edges = [(v, v + 1, 1) for v in range(n - 1)]
        sim = sim_of(n)
        items = [[] for _ in range(n)]
        items[0] = edges
        known = sim.disseminate_all(items)
        assert known == edges
        assert sim.metrics().rounds_total == sim.config.route_cost + 1


class TestMetrics:
    def test_determinism_bytes(self):
        def run():
            g = random_graph(12, 0.5, seed=3)
            sim = CliqueSimulator(SimConfig(n=12, seed=3), g)
            from cliquesim.connectivity import conn

            conn(sim, g)
            return json.dumps(sim.metrics().json_dict(), sort_keys=True)

        assert run() == run()

    def test_phase_accounting(self):
        sim = sim_of(4)
        with sim.phase("a"):
            sim.broadcast_value([(1,)] * 4)
        with sim.phase("b"):
            sim.route_idt([[] for _ in range(4)])
        m = sim.metrics()
        assert m.rounds_by_phase == {"a": 1, "b": sim.config.route_cost}
        assert m.rounds_total == 1 + sim.config.route_cost

    def test_nested_phase_rejected(self):
        sim = sim_of(2)
        with pytest.raises(RuntimeError):
            with sim.phase("a"):
                with sim.phase("b"):
                    pass

    def test_derived_rng_stable(self):
        a = derived_rng(1, "x", 2).random()
        b = derived_rng(1, "x", 2).random()
        c = derived_rng(1, "x", 3).random()
        assert a == b != c
