"""Lock-step simulator for an all-to-all synchronous network.

The model: n nodes, every ordered pair joined by a link that carries one
bounded message per round. Raw rounds (`run_round`) enforce that limit
directly. The heavy collective operations (routing, sorting, leader
aggregation, dissemination) are modeled as validated primitives with a
configurable constant round charge; their preconditions (at most n
messages per sender and per receiver) are enforced on every call, which
is exactly the load contract the algorithms are required to respect.

Determinism: all randomness flows through `derived_rng` streams keyed on
the run seed, so identical configurations reproduce identical metrics
and outputs regardless of host parallelism.
"""

from __future__ import annotations

import hashlib
import logging
import random
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, NamedTuple, Optional, Sequence, Union

from .graphs import INFINITY, GraphView, WeightedEdge

log = logging.getLogger("cliquesim")

#: messages carry at most this many machine words
PAYLOAD_WORDS = 4

STRATEGY_SAFE_BORUVKA = "safe-boruvka"
STRATEGY_SQUARING = "squaring"

Word = Union[int, float, str, None]


class Message(NamedTuple):
    src: int
    dst: int
    payload: tuple


class ProtocolViolation(RuntimeError):
    """A model precondition was broken; carries a stable violation code."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


def derived_rng(*parts: Any) -> random.Random:
    """Deterministic RNG stream keyed by the given parts (hash-seed free)."""
    text = ":".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


def bernoulli(rng: random.Random, p: Fraction) -> bool:
    """Exact Bernoulli draw: a 53-bit uniform compared against a rational."""
    return rng.getrandbits(53) < p * (1 << 53)


def _check_payload(payload: Any) -> tuple:
    if not isinstance(payload, tuple):
        payload = (payload,)
    if len(payload) > PAYLOAD_WORDS:
        raise ProtocolViolation("BANDWIDTH_VIOLATION", f"payload exceeds {PAYLOAD_WORDS} words: {payload!r}")
    for word in payload:
        if not (word is None or isinstance(word, (int, float, str))):
            raise ProtocolViolation("BANDWIDTH_VIOLATION", f"non-word payload entry {word!r}")
    return payload


@dataclass(frozen=True)
class SimConfig:
    """Run parameters; all rounds costs are per primitive invocation."""

    n: int
    seed: int = 0
    route_cost: int = 2
    sort_cost: int = 3
    agg_cost: int = 2
    c_sample: Fraction = Fraction(50)
    ccmst_strategy: str = STRATEGY_SAFE_BORUVKA

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one node")
        for name in ("route_cost", "sort_cost", "agg_cost"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        c = Fraction(self.c_sample)
        if c <= 0:
            raise ValueError("c_sample must be positive")
        object.__setattr__(self, "c_sample", c)
        if self.ccmst_strategy not in (STRATEGY_SAFE_BORUVKA, STRATEGY_SQUARING):
            raise ValueError(f"unknown strategy {self.ccmst_strategy!r}")


@dataclass(frozen=True)
class NodeContext:
    """What a node may read during one raw round: its own state only."""

    id: int
    adjacency: tuple
    inbox: tuple
    rng: random.Random


@dataclass(frozen=True)
class RoundMetrics:
    rounds_total: int
    rounds_by_phase: dict[str, int]
    messages_total: int
    messages_by_phase: dict[str, int]
    max_send_per_round: int
    max_recv_per_round: int
    primitive_calls: dict[str, int]
    violations: list[dict]
    receipts_total: int

    def json_dict(self, extras: Optional[Mapping[str, Any]] = None) -> dict:
        out = {
            "rounds_total": self.rounds_total,
            "rounds_by_phase": dict(sorted(self.rounds_by_phase.items())),
            "messages_total": self.messages_total,
            "max_send_per_round": self.max_send_per_round,
            "max_recv_per_round": self.max_recv_per_round,
            "primitive_calls": dict(sorted(self.primitive_calls.items())),
            "violations": list(self.violations),
        }
        if extras:
            out.update(extras)
        return out


class CliqueSimulator:
    """Scheduler, bandwidth police, and metrics book-keeper in one.

    The simulator object itself must stay on a single controlling task;
    metrics snapshots are plain values and may be shared freely.
    """

    def __init__(self, config: SimConfig, graph: Optional[GraphView] = None):
        self.config = config
        self.n = config.n
        self.graph = graph
        self.extras: dict[str, Any] = {}
        self._round = 0
        self._messages = 0
        self._receipts = 0
        self._max_send_raw = 0
        self._max_recv_raw = 0
        self._rounds_by_phase: dict[str, int] = {}
        self._messages_by_phase: dict[str, int] = {}
        self._primitive_calls: Counter = Counter()
        self._violations: list[dict] = []
        self._inboxes: list[tuple] = [() for _ in range(self.n)]
        self._phase: Optional[str] = None

    # -- phase and metric accounting ------------------------------------

    @contextmanager
    def phase(self, name: str):
        if self._phase is not None:
            raise RuntimeError(f"phase {self._phase!r} already active")
        self._phase = name
        self._rounds_by_phase.setdefault(name, 0)
        self._messages_by_phase.setdefault(name, 0)
        log.info("phase %s: begin (round %d)", name, self._round)
        try:
            yield self
        finally:
            log.info("phase %s: end (round %d)", name, self._round)
            self._phase = None

    def _charge(self, rounds: int, messages: int) -> None:
        self._round += rounds
        self._messages += messages
        if self._phase is not None:
            self._rounds_by_phase[self._phase] += rounds
            self._messages_by_phase[self._phase] += messages
        log.debug("charge %d rounds, %d messages (total %d)", rounds, messages, self._round)

    def violation(self, code: str, detail: str = "") -> ProtocolViolation:
        """Record a violation in the metrics and return it for raising."""
        self._violations.append({"code": code, "detail": detail})
        return ProtocolViolation(code, detail)

    @property
    def rounds_elapsed(self) -> int:
        return self._round

    def rng_for(self, *parts: Any) -> random.Random:
        return derived_rng(self.config.seed, *parts)

    def metrics(self) -> RoundMetrics:
        return RoundMetrics(
            rounds_total=self._round,
            rounds_by_phase=dict(self._rounds_by_phase),
            messages_total=self._messages,
            messages_by_phase=dict(self._messages_by_phase),
            max_send_per_round=self._max_send_raw,
            max_recv_per_round=self._max_recv_raw,
            primitive_calls=dict(self._primitive_calls),
            violations=list(self._violations),
            receipts_total=self._receipts,
        )

    # -- raw rounds ------------------------------------------------------

    def run_round(self, handler: Callable[[NodeContext], Iterable[Message]]) -> None:
        """One lock-step round: every node emits, all sends land together.

        Per node, at most one message per destination and no self-sends;
        payloads are bounded. Handlers see only their own context.
        """
        adjacency = self.graph.adj if self.graph is not None else None
        outgoing: list[list[Message]] = [[] for _ in range(self.n)]
        max_send = 0
        for v in range(self.n):
            ctx = NodeContext(
                id=v,
                adjacency=adjacency[v] if adjacency is not None else (),
                inbox=self._inboxes[v],
                rng=derived_rng(self.config.seed, "round", self._round, v),
            )
            sent_to: set[int] = set()
            count = 0
            for msg in handler(ctx) or ():
                if msg.src != v:
                    raise self.violation("BANDWIDTH_VIOLATION", f"node {v} forged src {msg.src}")
                if not (0 <= msg.dst < self.n) or msg.dst == v:
                    raise self.violation("BANDWIDTH_VIOLATION", f"node {v} bad destination {msg.dst}")
                if msg.dst in sent_to:
                    raise self.violation("BANDWIDTH_VIOLATION", f"node {v} sent twice to {msg.dst}")
                _check_payload(msg.payload)
                sent_to.add(msg.dst)
                outgoing[msg.dst].append(msg)
                count += 1
            max_send = max(max_send, count)
        delivered = 0
        for v in range(self.n):
            inbox = tuple(sorted(outgoing[v], key=lambda m: m.src))
            self._inboxes[v] = inbox
            delivered += len(inbox)
            self._max_recv_raw = max(self._max_recv_raw, len(inbox))
        self._max_send_raw = max(self._max_send_raw, max_send)
        self._receipts += delivered
        self._charge(1, delivered)

    def inbox(self, v: int) -> tuple:
        return self._inboxes[v]

    # -- validated collective primitives ---------------------------------

    def broadcast_value(self, values: Sequence[Any]) -> list[Any]:
        """Every node announces one payload; after 1 round all nodes hold all.

        A None entry means the node stays silent that round.
        """
        if len(values) != self.n:
            raise ValueError("need exactly one payload slot per node")
        senders = 0
        for val in values:
            if val is not None:
                _check_payload(val)
                senders += 1
        self._primitive_calls["broadcast"] += 1
        traffic = senders * (self.n - 1)
        self._max_send_raw = max(self._max_send_raw, self.n - 1 if senders else 0)
        self._max_recv_raw = max(self._max_recv_raw, min(senders, self.n - 1))
        self._receipts += traffic
        self._charge(1, traffic)
        return list(values)

    def route_idt(self, message_sets: Sequence[Sequence[Message]]) -> list[list[Message]]:
        """Deliver arbitrary point-to-point batches in route_cost rounds.

        Every sender is limited to n messages and every receiver to n;
        breaking either bound is an algorithm bug, not a model artifact.
        """
        if len(message_sets) != self.n:
            raise ValueError("need one (possibly empty) message list per node")
        recv_count = [0] * self.n
        total = 0
        for v, batch in enumerate(message_sets):
            for msg in batch:
                if msg.src != v:
                    raise self.violation("IDT_PRECONDITION_SEND", f"node {v} forged src {msg.src}")
                if not (0 <= msg.dst < self.n):
                    raise self.violation("IDT_PRECONDITION_SEND", f"bad destination {msg.dst}")
                _check_payload(msg.payload)
                recv_count[msg.dst] += 1
                total += 1
        overloaded = [v for v, c in enumerate(recv_count) if c > self.n]
        if overloaded:
            v = overloaded[0]
            raise self.violation(
                "IDT_PRECONDITION_RECV", f"node {v} addressed by {recv_count[v]} > n={self.n} messages"
            )
        for v, batch in enumerate(message_sets):
            if len(batch) > self.n:
                raise self.violation(
                    "IDT_PRECONDITION_SEND", f"node {v} queued {len(batch)} > n={self.n} messages"
                )
        delivery: list[list[Message]] = [[] for _ in range(self.n)]
        for batch in message_sets:
            for idx, msg in enumerate(batch):
                delivery[msg.dst].append((msg.src, idx, msg))
        out = [[m for _, _, m in sorted(entries, key=lambda t: (t[0], t[1]))] for entries in delivery]
        self._primitive_calls["route_idt"] += 1
        self._receipts += total
        self._charge(self.config.route_cost, total)
        return out

    def dist_sort(self, keys_per_node: Sequence[Sequence[Any]]) -> list[list[int]]:
        """Global 1-based ranks for every node's keys.

        Ties break by (key, holder id, local index), so ranks are a
        permutation of 1..K even with duplicate keys.
        """
        if len(keys_per_node) != self.n:
            raise ValueError("need one key list per node")
        tagged = []
        for v, keys in enumerate(keys_per_node):
            if len(keys) > self.n:
                raise self.violation("SORT_PRECONDITION", f"node {v} holds {len(keys)} > n={self.n} keys")
            for idx, key in enumerate(keys):
                tagged.append((key, v, idx))
        tagged.sort()
        ranks: list[list[int]] = [[0] * len(keys) for keys in keys_per_node]
        for rank, (_, v, idx) in enumerate(tagged, start=1):
            ranks[v][idx] = rank
        self._primitive_calls["dist_sort"] += 1
        self._receipts += len(tagged)
        self._charge(self.config.sort_cost, len(tagged))
        return ranks

    def converge_min(
        self,
        group_of: Sequence[int],
        items_per_node: Sequence[Sequence[tuple[Any, WeightedEdge]]],
    ) -> dict[int, dict[Any, WeightedEdge]]:
        """Leader-side minimum per group key, under the (w, u, v) order.

        Each node's items travel to its own group leader; min is
        associative so the in-network combining is legal.
        """
        if len(items_per_node) != self.n:
            raise ValueError("need one item list per node")
        result: dict[int, dict[Any, WeightedEdge]] = {}
        total = 0
        for v, items in enumerate(items_per_node):
            leader = group_of[v]
            for key, edge in items:
                total += 1
                bucket = result.setdefault(leader, {})
                best = bucket.get(key)
                if best is None or edge.key < best.key:
                    bucket[key] = edge
        for leader, bucket in result.items():
            if len(bucket) > self.n:
                raise self.violation(
                    "AGG_PRECONDITION", f"leader {leader} aggregated {len(bucket)} > n={self.n} keys"
                )
        self._primitive_calls["converge_min"] += 1
        self._receipts += total
        self._charge(self.config.agg_cost, total)
        return result

    def disseminate_all(self, items_per_node: Sequence[Sequence[Any]]) -> list[Any]:
        """Make at most n payloads globally known in route_cost + 1 rounds.

        Items are spread one-per-owner via routing, then each owner
        broadcasts its item. Every node ends up holding the same list,
        ordered by (holder id, emission index).
        """
        if len(items_per_node) != self.n:
            raise ValueError("need one item list per node")
        flat: list[Any] = []
        for v, items in enumerate(items_per_node):
            for item in items:
                _check_payload(item)
                flat.append(item)
        if len(flat) > self.n:
            raise self.violation(
                "ITEM_OVERFLOW", f"disseminating {len(flat)} > n={self.n} items"
            )
        self._primitive_calls["disseminate_all"] += 1
        traffic = len(flat) + len(flat) * (self.n - 1)
        self._receipts += traffic
        self._charge(self.config.route_cost + 1, traffic)
        return flat
