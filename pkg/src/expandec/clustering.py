"""Exponential-shift clustering and the high-probability low-diameter decomposition.

The shift clustering runs one simulated round per epoch (idle epochs are
skipped computationally but charged in full; their transcript is empty by
construction).  The dense/sparse split classifies vertices by comparing
neighborhood edge-count estimates at radius a against radius 100ab, grows the
dense region in a-ball merge rounds, and the final decomposition cuts only
inter-cluster edges incident to the sparse side.

Neighborhood edge sets follow the flooding semantics: the radius-d edge set of
v is every tracked edge with an endpoint within distance d-1 of v, which is
what d-1 phases of list-or-star flooding deliver (radius 1 = incident edges).
The message-level flooding implementation is exercised at unit scale; larger
runs use the distance-matrix oracle, which computes the identical output, and
charge rounds by the documented per-phase formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import edge_key
from .simulator import KIND_BITS, Msg, Network
from .views import ActiveView

INF = np.int32(1 << 30)


# -- neighborhood oracle ------------------------------------------------------


class NeighborhoodOracle:
    """Distances and per-edge ball distances for one view (test-scale n)."""

    def __init__(self, view: ActiveView):
        self.view = view
        n = len(view.verts)
        d = np.full((n, n), INF, dtype=np.int32)
        for i in range(n):
            d[i, i] = 0
            frontier = [i]
            dist = 0
            while frontier:
                dist += 1
                nxt = []
                for x in frontier:
                    for y in view._adj_local[x]:
                        if d[i, y] > dist:
                            d[i, y] = dist
                            nxt.append(y)
                frontier = nxt
        self.dist = d
        if view.edges_local.size:
            # min endpoint distance: the edge joins v's radius-k edge set at k = min+1
            self.edge_reach = np.minimum(
                d[:, view.edges_local[:, 0]], d[:, view.edges_local[:, 1]]
            )
        else:
            self.edge_reach = np.zeros((n, 0), dtype=np.int32)

    def ball_edge_counts(self, d: int, edge_mask: np.ndarray | None = None) -> np.ndarray:
        """Per-vertex count of tracked edges with an endpoint within d-1."""
        reach = self.edge_reach if edge_mask is None else self.edge_reach[:, edge_mask]
        if reach.shape[1] == 0:
            return np.zeros(len(self.view.verts), dtype=np.int64)
        return (reach <= d - 1).sum(axis=1).astype(np.int64)

    def ball_edges(self, local_v: int, d: int, edge_mask: np.ndarray | None = None):
        idx = np.nonzero((self.edge_reach[local_v] <= d - 1)
                         & (edge_mask if edge_mask is not None else True))[0]
        verts = self.view.verts
        el = self.view.edges_local
        return sorted(edge_key(int(verts[el[i, 0]]), int(verts[el[i, 1]])) for i in idx)


# -- neighborhood primitives ---------------------------------------------------


OVER = "over-threshold"


def neighborhood_edges_exact(net: Network, view: ActiveView, estar, d: int, tau: int,
                             message_level: bool = True,
                             oracle: NeighborhoodOracle | None = None) -> dict:
    """Each vertex learns its radius-d edge set within estar exactly, or the
    fact that it exceeds tau.  d-1 phases of list-or-star flooding."""
    estar = {edge_key(*e) for e in estar}
    if message_level:
        return _edges_exact_messages(net, view, estar, d, tau)
    oracle = oracle or NeighborhoodOracle(view)
    mask = np.array(
        [edge_key(int(view.verts[a]), int(view.verts[b])) in estar
         for a, b in view.edges_local],
        dtype=bool,
    )
    counts = oracle.ball_edge_counts(d, mask)
    out = {}
    for i, v in enumerate(view.verts):
        v = int(v)
        out[v] = OVER if counts[i] > tau else oracle.ball_edges(i, d, mask)
    edge_bits = 2 * math.ceil(math.log2(max(2, net.graph.n)))
    per_phase = max(1, math.ceil((tau + 1) * edge_bits / net.bandwidth_bits))
    net.ledger.charge(net.phase, rounds=max(0, d - 1) * per_phase,
                      messages=2 * view.m_live * max(0, d - 1), edge_bits=net.bandwidth_bits)
    return out


def _edges_exact_messages(net: Network, view: ActiveView, estar: set, d: int, tau: int) -> dict:
    verts = [int(v) for v in view.verts]
    known = {v: {e for e in estar if v in e and view.working.is_live(*e)
                 and e[0] in view.active and e[1] in view.active} for v in verts}
    over = {v: len(known[v]) > tau for v in verts}
    edge_bits = 2 * math.ceil(math.log2(max(2, net.graph.n)))
    cap = net.bandwidth_bits // edge_bits
    for _phase in range(d - 1):
        outgoing = {v: (OVER if over[v] else sorted(known[v])) for v in verts}
        states = {v: None for v in verts}
        inboxes: dict[int, list] = {}
        queues = {v: list(outgoing[v]) if outgoing[v] != OVER else OVER for v in verts}
        # stream each list over as many rounds as the phase needs, all in lockstep
        phase_rounds = max(
            1, max((len(q) + cap - 1) // cap for q in queues.values() if q != OVER)
            if any(q != OVER for q in queues.values()) else 1,
        )
        for _r in range(phase_rounds):
            def step(v, s, inbox):
                q = queues[v]
                if q == OVER:
                    if _r == 0:
                        return s, [(u, Msg("star", OVER, bits=KIND_BITS))
                                   for u in view.live_neighbors(v)]
                    return s, []
                chunk, queues[v] = q[:cap], q[cap:]
                if not chunk:
                    return s, []
                bits = KIND_BITS + edge_bits * len(chunk)
                return s, [(u, Msg("edges", tuple(chunk), bits=bits))
                           for u in view.live_neighbors(v)]

            states, inboxes = net.run_round(states, inboxes, step,
                                            adjacency=view.live_neighbors)
            for v, arrivals in inboxes.items():
                for _, msg in arrivals:
                    if msg.kind == "star":
                        over[v] = True
                    else:
                        known[v].update(msg.payload)
            inboxes = {}
        for v in verts:
            if len(known[v]) > tau:
                over[v] = True
    return {v: (OVER if over[v] else sorted(known[v])) for v in verts}


def neighborhood_threshold_test(net: Network, view: ActiveView, d: int, z: int, f: float,
                                rng: np.random.Generator, K: int = 10,
                                oracle: NeighborhoodOracle | None = None) -> dict:
    """Per-vertex bit: 1 when the radius-d edge count is below z (w.h.p. calibrated
    so counts <= z give 1 and counts >= (1+f)z give 0)."""
    oracle = oracle or NeighborhoodOracle(view)
    n = net.graph.n
    log_n = math.log2(max(2, n))
    if K * log_n >= f * f * z:
        tau = (1 + f) * z
        counts = oracle.ball_edge_counts(d)
        out = {int(v): int(counts[i] <= tau) for i, v in enumerate(view.verts)}
        charge_tau = tau
    else:
        q = K * log_n / (f * f * z)
        mask = rng.random(view.m_live) < q
        tau = (1 + f / 2) * K * log_n / (f * f)
        counts = oracle.ball_edge_counts(d, mask)
        out = {int(v): int(counts[i] <= tau) for i, v in enumerate(view.verts)}
        charge_tau = tau
    edge_bits = 2 * math.ceil(math.log2(max(2, n)))
    per_phase = max(1, math.ceil((charge_tau + 1) * edge_bits / net.bandwidth_bits))
    net.ledger.charge(net.phase, rounds=max(0, d - 1) * per_phase,
                      messages=2 * view.m_live * max(0, d - 1), edge_bits=net.bandwidth_bits)
    return out


def neighborhood_size_estimate(net: Network, view: ActiveView, d: int, f: float,
                               rng: np.random.Generator, K: int = 10,
                               oracle: NeighborhoodOracle | None = None) -> dict:
    """Per-vertex m_v within a (1+f) factor of the radius-d edge count w.h.p.

    m_v is the lowest ladder rung whose threshold test accepts (every oversized
    rung accepts, so the first acceptance is the informative one).  Ladder
    levels reuse sample streams keyed by level index, so estimates are
    monotone in d for a fixed generator state.
    """
    oracle = oracle or NeighborhoodOracle(view)
    n = net.graph.n
    seed_key = int(rng.integers(1 << 62))
    ladder = [1.0]
    cap = n * (n - 1) / 2
    while ladder[-1] * (1 + f) <= cap:
        ladder.append(ladder[-1] * (1 + f))
    best = {int(v): ladder[-1] for v in view.verts}
    for i in range(len(ladder) - 1, -1, -1):
        s_i = ladder[i]
        level_rng = np.random.default_rng([seed_key, i])
        bits = neighborhood_threshold_test(net, view, d, max(1, math.ceil(s_i)), f,
                                           level_rng, K=K, oracle=oracle)
        for v, bit in bits.items():
            if bit:
                best[v] = s_i
    return best


# -- exponential-shift clustering ----------------------------------------------


@dataclass
class ShiftClustering:
    assignment: dict[int, int]  # vertex -> center
    centers: list[int]
    start: dict[int, int]
    epochs: int
    cut_edges: list[tuple[int, int]]  # inter-cluster live edges

    def clusters(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for v, c in sorted(self.assignment.items()):
            out.setdefault(c, []).append(v)
        return out


def exponential_shift_clustering(net: Network, view: ActiveView, beta: float,
                                 rng: np.random.Generator,
                                 deltas: dict[int, float] | None = None) -> ShiftClustering:
    """Sample per-vertex Exponential(rate beta) head starts and grow clusters one
    hop per epoch; ties join the smallest adjacent cluster id.  Rounds charged
    equal the full epoch count (idle epochs carry no messages)."""
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta={beta} outside (0, 1)")
    n = net.graph.n
    horizon = math.ceil(2 * math.log2(max(2, n)) / beta)
    verts = [int(v) for v in view.verts]
    if deltas is None:
        draws = rng.exponential(scale=1.0 / beta, size=len(verts))
        deltas = {v: float(x) for v, x in zip(verts, draws)}
    start = {v: max(1, horizon - int(math.floor(deltas[v]))) for v in verts}
    assignment: dict[int, int] = {}
    unclustered = set(verts)
    start_buckets: dict[int, list[int]] = {}
    for v in verts:
        start_buckets.setdefault(start[v], []).append(v)
    t = 1
    while t <= horizon and unclustered:
        growth_possible = any(
            u in assignment for v in unclustered for u in view.live_neighbors(v)
        )
        has_start = any(
            s >= t and any(v in unclustered for v in vs)
            for s, vs in start_buckets.items()
        )
        if not growth_possible and not has_start:
            break
        if not growth_possible:
            next_start = min(
                s for s, vs in start_buckets.items()
                if s >= t and any(v in unclustered for v in vs)
            )
            if next_start > t:
                t = next_start  # idle epochs: no centers, no adjacent clusters
        joins = {}
        for v in sorted(unclustered):
            if start[v] == t:
                continue
            adjacent = [assignment[u] for u in view.live_neighbors(v) if u in assignment]
            if adjacent:
                joins[v] = min(adjacent)
        for v in sorted(unclustered):
            if start[v] == t:
                assignment[v] = v
                unclustered.discard(v)
        for v, c in joins.items():
            assignment[v] = c
            unclustered.discard(v)
        t += 1
    centers = sorted({c for c in assignment.values()})
    cut = [
        e for e in view.live_edges_host()
        if assignment.get(e[0]) != assignment.get(e[1])
    ]
    net.ledger.charge(net.phase, rounds=horizon, messages=2 * view.m_live,
                      edge_bits=KIND_BITS + 64)
    return ShiftClustering(assignment, centers, start, horizon, cut)


# -- dense/sparse split ----------------------------------------------------------


@dataclass
class DenseSparseSplit:
    v_dense: frozenset
    v_sparse: frozenset
    dense_prime: frozenset
    sparse_prime: frozenset
    a: int
    b: int
    f: float
    stages: list[list[frozenset]]  # components of each W_i, W_0 first
    est_near: dict
    est_far: dict


def build_dense_sparse_split(net: Network, view: ActiveView, beta: float, K: float,
                             rng: np.random.Generator, f: float = 3.0 / 16.0,
                             oracle: NeighborhoodOracle | None = None,
                             k_sample: int = 10) -> DenseSparseSplit:
    """Classify dense/sparse by radius-a vs radius-100ab edge-count estimates,
    then grow the dense region by a-ball merges until components are pairwise
    further than a apart.  (1+f)^4 <= 2 keeps the classification one-sided."""
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta={beta}")
    if (1 + f) ** 4 > 2.0:
        raise ValueError(f"f={f} too coarse: need (1+f)^4 <= 2")
    n = net.graph.n
    log_n = math.log2(max(2, n))
    a = max(1, math.ceil(5 * log_n / beta))
    b = max(1, math.ceil(K * log_n / beta))
    oracle = oracle or NeighborhoodOracle(view)
    n_view = len(view.verts)
    far_radius = min(100 * a * b, n_view + 1)
    est_near = neighborhood_size_estimate(net, view, a, f, rng, K=k_sample, oracle=oracle)
    est_far = neighborhood_size_estimate(net, view, far_radius, f, rng, K=k_sample,
                                         oracle=oracle)
    dense_prime = frozenset(
        v for v in est_near
        if est_near[v] * 2 * b * (1 + f) ** 2 >= est_far[v]
    )
    sparse_prime = frozenset(est_near) - dense_prime
    dist = oracle.dist
    idx = view.index

    def ball(hosts, radius) -> frozenset:
        if not hosts:
            return frozenset()
        rows = [idx[v] for v in hosts]
        near = (dist[rows].min(axis=0) <= radius)
        return frozenset(int(view.verts[i]) for i in np.nonzero(near)[0])

    def components_within(w: frozenset) -> list[frozenset]:
        comps = []
        seen = set()
        for v in sorted(w):
            if v in seen:
                continue
            comp = {v}
            stack = [v]
            seen.add(v)
            while stack:
                x = stack.pop()
                for y in view.live_neighbors(x):
                    if y in w and y not in seen:
                        seen.add(y)
                        comp.add(y)
                        stack.append(y)
            comps.append(frozenset(comp))
        return comps

    w = ball(dense_prime, a)
    stages = [components_within(w)]
    for _ in range(2 * b):
        comps = stages[-1]
        if len(comps) <= 1:
            break
        rows = {i: [idx[v] for v in c] for i, c in enumerate(comps)}
        merged = False
        new_w = set()
        for i, c in enumerate(comps):
            near_other = any(
                dist[np.ix_(rows[i], rows[j])].min() <= a
                for j in range(len(comps)) if j != i
            )
            if near_other:
                new_w |= ball(c, a)
                merged = True
            else:
                new_w |= c
        ecc = max((len(c) for c in comps), default=1)
        net.ledger.charge(net.phase, rounds=min(20 * a * b, ecc + a),
                          messages=2 * view.m_live, edge_bits=KIND_BITS + 64)
        if not merged or frozenset(new_w) == w:
            break
        w = frozenset(new_w)
        stages.append(components_within(w))
    final = stages[-1]
    for i in range(len(final)):
        for j in range(i + 1, len(final)):
            rows_i = [idx[v] for v in final[i]]
            rows_j = [idx[v] for v in final[j]]
            if dist[np.ix_(rows_i, rows_j)].min() <= a:
                raise RuntimeError("dense-region merge loop left components within a")
    v_dense = frozenset(w)
    v_sparse = view.active - v_dense
    return DenseSparseSplit(v_dense, v_sparse, dense_prime, sparse_prime,
                            a, b, f, stages, est_near, est_far)


# -- low-diameter decomposition ---------------------------------------------------


@dataclass
class LowDiamResult:
    components: list[frozenset]
    cut_edges: list[tuple[int, int]]
    clustering: ShiftClustering
    split: DenseSparseSplit
    diameters: list[int]
    beta: float
    diameter_bound: int

    @property
    def max_diameter(self) -> int:
        return max(self.diameters, default=0)


def low_diam_decomposition(net: Network, view: ActiveView, beta: float, K: int,
                           rng: np.random.Generator) -> LowDiamResult:
    """Partition into low-diameter connected parts w.h.p., cutting only
    inter-cluster edges with an endpoint in the sparse side.  The split and
    clustering run at beta/3 so the combined cut stays within the beta budget."""
    beta_inner = beta / 3.0
    oracle = NeighborhoodOracle(view)
    split = build_dense_sparse_split(net, view, beta_inner, K, rng, oracle=oracle)
    clustering = exponential_shift_clustering(net, view, beta_inner, rng)
    sparse = split.v_sparse
    cut = [e for e in clustering.cut_edges if e[0] in sparse or e[1] in sparse]
    cut_set = set(cut)
    # connected components of the live subgraph minus the cut edges
    comps: list[frozenset] = []
    seen: set[int] = set()
    for v in sorted(view.active):
        if v in seen:
            continue
        comp = {v}
        stack = [v]
        seen.add(v)
        while stack:
            x = stack.pop()
            for y in view.live_neighbors(x):
                if y not in seen and edge_key(x, y) not in cut_set:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        comps.append(frozenset(comp))
    idx = view.index
    diameters = []
    for comp in comps:
        rows = [idx[v] for v in comp]
        sub = oracle.dist[np.ix_(rows, rows)]
        reach = sub[sub < INF]
        diameters.append(int(reach.max()) if reach.size else 0)
    n = net.graph.n
    d1 = 4 * math.log2(max(2, n)) / beta_inner
    d2 = 20 * split.a * split.b
    bound = math.ceil(2 * (d1 + 1) + d2)
    return LowDiamResult(comps, cut, clustering, split, diameters, beta, bound)
