"""Synchronous message-passing simulator with per-edge bandwidth budgets.

Vertices act only on their own state and inbox; all cross-vertex influence
flows through messages delivered simultaneously at the round barrier.  Message
payloads carry a documented fixed-width bit size; a single message larger than
the per-edge budget aborts the round (never silent truncation).  The ledger
tallies rounds, messages, and the worst per-edge per-round bit load, labelled
by algorithm phase.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import BandwidthExceeded
from .graph import Graph, edge_key

DEFAULT_BANDWIDTH_FACTOR = 192
WORD_BITS = 64
KIND_BITS = 8


@dataclass(frozen=True)
class Msg:
    kind: str
    payload: object = None
    bits: int = KIND_BITS + WORD_BITS


@dataclass
class PhaseTotals:
    rounds: int = 0
    messages: int = 0
    max_bits: int = 0


class RoundLedger:
    """Phase-labelled counters of simulated rounds, messages, and edge bit load."""

    def __init__(self):
        self.phases: dict[str, PhaseTotals] = {}

    def charge(self, phase: str, rounds: int = 0, messages: int = 0, edge_bits: int = 0):
        if rounds < 0 or messages < 0 or edge_bits < 0:
            raise ValueError("ledger counters are monotone")
        t = self.phases.setdefault(phase, PhaseTotals())
        t.rounds += rounds
        t.messages += messages
        t.max_bits = max(t.max_bits, edge_bits)

    def totals(self) -> PhaseTotals:
        out = PhaseTotals()
        for t in self.phases.values():
            out.rounds += t.rounds
            out.messages += t.messages
            out.max_bits = max(out.max_bits, t.max_bits)
        return out

    def rows(self) -> list[dict]:
        return [
            {"phase": p, "rounds": t.rounds, "messages": t.messages, "max_bits": t.max_bits}
            for p, t in sorted(self.phases.items())
        ]

    def to_json(self) -> str:
        return json.dumps(self.rows())

    def snapshot(self) -> dict:
        return {p: (t.rounds, t.messages, t.max_bits) for p, t in self.phases.items()}


def default_bandwidth(n: int, factor: int = DEFAULT_BANDWIDTH_FACTOR) -> int:
    return factor * max(1, math.ceil(math.log2(max(2, n))))


class Network:
    """One synchronous network over a host graph, with a shared ledger."""

    def __init__(self, graph: Graph, ledger: RoundLedger | None = None,
                 bandwidth_bits: int | None = None, phase: str = "main",
                 threads: int | None = None, trace: bool = False):
        self.graph = graph
        self.ledger = ledger if ledger is not None else RoundLedger()
        self.bandwidth_bits = bandwidth_bits or default_bandwidth(graph.n)
        self.phase = phase
        self.round_no = 0
        self.threads = threads
        self.trace: list | None = [] if trace else None

    def set_phase(self, phase: str):
        self.phase = phase

    def run_round(self, states: dict, inboxes: dict, step: Callable,
                  adjacency: Callable[[int], Iterable[int]] | None = None):
        """One synchronous round.

        `step(v, state, inbox) -> (new_state, [(dst, Msg), ...])` must be pure in
        (state, inbox); destinations must be adjacent to v under `adjacency`
        (host adjacency by default).  Returns (new_states, new_inboxes).
        """
        adj = adjacency or (lambda v: self.graph.neighbors[v])
        vertices = sorted(states)

        def run_one(v):
            return v, step(v, states[v], inboxes.get(v, ()))

        if self.threads:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(run_one, vertices))
        else:
            results = [run_one(v) for v in vertices]

        new_states = {}
        new_inboxes: dict[int, list] = {}
        n_msgs = 0
        edge_bits: dict[tuple[int, int], int] = {}
        trace_row = [] if self.trace is not None else None
        for v, (state, outs) in results:
            new_states[v] = state
            allowed = None
            for dst, msg in outs:
                if allowed is None:
                    allowed = set(adj(v))
                if dst not in allowed:
                    raise ValueError(f"vertex {v} addressed non-neighbor {dst}")
                if msg.bits > self.bandwidth_bits:
                    raise BandwidthExceeded((v, dst), msg.bits, self.bandwidth_bits)
                new_inboxes.setdefault(dst, []).append((v, msg))
                n_msgs += 1
                edge_bits[(v, dst)] = edge_bits.get((v, dst), 0) + msg.bits
                if trace_row is not None:
                    trace_row.append((v, dst, msg.kind, msg.payload))
        self.round_no += 1
        self.ledger.charge(self.phase, rounds=1, messages=n_msgs,
                           edge_bits=max(edge_bits.values(), default=0))
        if trace_row is not None:
            self.trace.append(tuple(sorted(trace_row, key=repr)))
        return new_states, new_inboxes


# -- spanning tree primitives ---------------------------------------------


@dataclass
class SpanningTree:
    root: int
    parent: dict[int, int]          # root maps to itself
    depth: dict[int, int]
    children: dict[int, list[int]]

    @property
    def depth_max(self) -> int:
        return max(self.depth.values(), default=0)

    @property
    def vertices(self) -> list[int]:
        return sorted(self.parent)


def bfs_tree(net: Network, root: int, edge_filter: Callable[[int, int], bool] | None = None,
             vertices: set | None = None) -> SpanningTree:
    """Message-level BFS; rounds charged equal the root's eccentricity in the
    filtered subgraph.  Unreachable vertices stay out of the tree."""
    ok = edge_filter or (lambda u, v: True)
    inside = vertices if vertices is not None else set(range(net.graph.n))

    def adj(v):
        return [u for u in net.graph.neighbors[v] if u in inside and ok(*edge_key(u, v))]

    parent = {root: root}
    depth = {root: 0}
    states = {v: None for v in inside}
    inboxes: dict[int, list] = {}
    frontier = [root]
    while True:
        targets = {u for v in frontier for u in adj(v) if u not in parent}
        if not targets:
            break

        claimed = set(parent)

        def step(v, state, inbox, _frontier=frozenset(frontier)):
            outs = []
            if v in _frontier:
                outs = [(u, Msg("bfs-claim", v)) for u in adj(v) if u not in claimed]
            return state, outs

        states, inboxes = net.run_round(states, inboxes, step, adjacency=adj)
        frontier = []
        for v, arrivals in sorted(inboxes.items()):
            if v in parent or not arrivals:
                continue
            src = min(a for a, _ in arrivals)
            parent[v] = src
            depth[v] = depth[src] + 1
            frontier.append(v)
        inboxes = {}
    children: dict[int, list[int]] = {v: [] for v in parent}
    for v, p in parent.items():
        if v != p:
            children[p].append(v)
    for c in children.values():
        c.sort()
    return SpanningTree(root, parent, depth, children)


def tree_aggregate(net: Network, tree: SpanningTree, values: dict, combine: Callable):
    """Bottom-up fold over the tree; rounds = tree depth.

    Returns (root_value, subtree_values) where subtree_values[v] combines v's
    value with all of its descendants'.
    """
    dmax = tree.depth_max
    partial = dict(values)
    states = {v: None for v in tree.parent}
    inboxes: dict[int, list] = {}
    for r in range(dmax, 0, -1):
        layer = frozenset(v for v, d in tree.depth.items() if d == r)

        def step(v, state, inbox, _layer=layer):
            outs = []
            if v in _layer:
                outs.append((tree.parent[v], Msg("agg", partial[v])))
            return state, outs

        states, inboxes = net.run_round(states, inboxes, step,
                                        adjacency=lambda v: _tree_adj(tree, v))
        for v, arrivals in inboxes.items():
            for _, msg in sorted(arrivals, key=lambda a: a[0]):
                partial[v] = combine(partial[v], msg.payload)
        inboxes = {}
    return partial[tree.root], partial


def tree_broadcast(net: Network, tree: SpanningTree, value):
    """Top-down broadcast; rounds = tree depth.  Every tree vertex ends with value."""
    dmax = tree.depth_max
    have = {tree.root: value}
    states = {v: None for v in tree.parent}
    inboxes: dict[int, list] = {}
    for r in range(dmax):
        layer = frozenset(v for v, d in tree.depth.items() if d == r and v in have)

        def step(v, state, inbox, _layer=layer):
            outs = []
            if v in _layer:
                outs = [(c, Msg("bcast", have[v])) for c in tree.children[v]]
            return state, outs

        states, inboxes = net.run_round(states, inboxes, step,
                                        adjacency=lambda v: _tree_adj(tree, v))
        for v, arrivals in inboxes.items():
            for _, msg in arrivals:
                have[v] = msg.payload
        inboxes = {}
    return have


def _tree_adj(tree: SpanningTree, v: int):
    out = list(tree.children.get(v, ()))
    if tree.parent.get(v, v) != v:
        out.append(tree.parent[v])
    return out


def subtree_degrees(net: Network, tree: SpanningTree, deg: Callable[[int], int]):
    """s(v): sum of degrees over the subtree rooted at v (via a real aggregate)."""
    _, sub = tree_aggregate(net, tree, {v: deg(v) for v in tree.parent}, lambda a, b: a + b)
    return sub


def sample_by_degree(net: Network, tree: SpanningTree, counts: dict[int, int],
                     rng: np.random.Generator, deg: Callable[[int], int] | None = None,
                     subtree: dict | None = None) -> list[tuple[int, int]]:
    """Land `counts[b]` tokens of each tag b on vertices with probability deg/Vol.

    Tokens trickle down the tree: a token dies at v with probability
    deg(v)/s(v), else moves to child u with probability s(u)/(s(v)-deg(v)).
    Only token counts cross edges; tags are pipelined one per round, so the
    charged rounds are depth + number of tags.
    """
    d = deg or (lambda v: net.graph.degree(v))
    if subtree is None:
        subtree = subtree_degrees(net, tree, d)
    tags = sorted(counts)
    landings: list[tuple[int, int]] = []
    # in_flight: (vertex, tag) -> count; batches released one tag per round.
    in_flight: dict[tuple[int, int], int] = {}
    released = 0
    rounds = 0
    while released < len(tags) or in_flight:
        rounds += 1
        if released < len(tags):
            tag = tags[released]
            if counts[tag] > 0:
                in_flight[(tree.root, tag)] = in_flight.get((tree.root, tag), 0) + counts[tag]
            released += 1
        moved: dict[tuple[int, int], int] = {}
        n_msgs = 0
        for (v, tag) in sorted(in_flight):
            cnt = in_flight[(v, tag)]
            s_v = subtree[v]
            stay = rng.binomial(cnt, d(v) / s_v) if s_v > d(v) else cnt
            landings.extend([(v, tag)] * stay)
            rest = cnt - stay
            if rest:
                kids = tree.children[v]
                probs = np.array([subtree[u] for u in kids], dtype=float)
                probs /= probs.sum()
                split = rng.multinomial(rest, probs)
                for u, c in zip(kids, split):
                    if c:
                        moved[(u, tag)] = moved.get((u, tag), 0) + int(c)
                        n_msgs += 1
        in_flight = moved
        net.ledger.charge(net.phase, rounds=1, messages=n_msgs,
                          edge_bits=(KIND_BITS + 2 * WORD_BITS) if n_msgs else 0)
    landings.sort()
    return landings


@dataclass
class SearchResult:
    rank: int                 # 1-based rank of the last true position; 0 if none
    vertex: int | None
    prefix_weight: int
    iterations: int


def random_binary_search(net: Network, tree: SpanningTree, keys: dict[int, object],
                         weights: dict[int, int], predicate: Callable[[int, int], bool],
                         rng: np.random.Generator, message_level: bool = True,
                         iteration_cap: int | None = None) -> SearchResult:
    """Locate the last rank (in ascending key order) where a monotone predicate holds.

    `predicate(vertex, prefix_weight)` sees the cumulative weight of every
    universe member with key <= the candidate's.  Each iteration samples a
    uniform member of the live band; with probability 1/2 the band shrinks by a
    factor >= 3/4.  In message mode every band count, descent, and prefix
    aggregation runs on the tree; the fast mode performs the identical
    computation and random draws in memory and charges the same round formula.
    """
    universe = sorted(keys, key=lambda v: keys[v])
    if not universe:
        return SearchResult(0, None, 0, 0)
    w = np.array([weights[v] for v in universe], dtype=np.int64)
    cumw = np.cumsum(w)
    lo, hi = 0, len(universe) - 1
    best_rank, best_vertex, best_weight = 0, None, 0
    iterations = 0
    cap = iteration_cap or max(64, 64 * int(math.log2(len(universe) + 1) + 1))
    depth = tree.depth_max
    while lo <= hi:
        iterations += 1
        if iterations > cap:
            idx = (lo + hi) // 2  # deterministic fallback; statistically unreachable
        else:
            idx = lo + int(rng.integers(hi - lo + 1))
        v = universe[idx]
        pw = int(cumw[idx])
        if message_level:
            _search_round_trip(net, tree, v)
        else:
            net.ledger.charge(net.phase, rounds=4 * depth,
                              messages=4 * max(0, len(tree.parent) - 1),
                              edge_bits=KIND_BITS + 2 * WORD_BITS)
        if predicate(v, pw):
            best_rank, best_vertex, best_weight = idx + 1, v, pw
            lo = idx + 1
        else:
            hi = idx - 1
    return SearchResult(best_rank, best_vertex, best_weight, iterations)


def _search_round_trip(net: Network, tree: SpanningTree, marker: int):
    """Band broadcast, count aggregate, descent, and prefix aggregate on the tree."""
    tree_broadcast(net, tree, ("band", marker))
    tree_aggregate(net, tree, {v: 1 for v in tree.parent}, lambda a, b: a + b)
    tree_broadcast(net, tree, ("descend", marker))
    tree_aggregate(net, tree, {v: 0 for v in tree.parent}, lambda a, b: a + b)
