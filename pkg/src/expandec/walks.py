"""Truncated lazy random walk kernel.

Mass is carried in fixed point: 48 fractional bits inside a 64-bit word, so a
probability value fits one O(log n)-bit message with headroom for degrees up to
2^13.  The step uses floor rounding everywhere, which makes it sub-stochastic
and monotone: the truncated walk is pointwise dominated by the untruncated
walk, and the fixed-point walk is pointwise dominated by the exact walk, with
per-entry divergence below t * 2^-40 on test-scale degrees.

The walk on a view G{W} keeps each vertex's loop share in place: a vertex with
mass p keeps floor(p * (2 deg - live) / (2 deg)) and sends floor(p / (2 deg))
along each live edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Profile
from .errors import BadPhi, TooLarge
from .graph import Graph, edge_key, lazy_walk_matrix
from .simulator import KIND_BITS, WORD_BITS, Network
from .views import ActiveView

SCALE_BITS = 48
SCALE = 1 << SCALE_BITS
MASS_MSG_BITS = KIND_BITS + 2 * WORD_BITS  # kind + instance tag + fixed-point value
Z_SET_N_MAX = 64


@dataclass(frozen=True)
class WalkParams:
    """Horizon, detectability, mass floor, and truncation schedule for one phi."""

    m: int
    phi: float
    profile_name: str
    ell: int
    t0: int
    f_phi: float
    gamma: float
    eps_base: float  # eps_b = eps_base / 2**b

    def eps_b(self, b: int) -> float:
        return self.eps_base / (1 << b)

    def eps_units(self, b: int) -> int:
        return int(round(self.eps_b(b) * SCALE))


def derive_walk_params(m: int, phi: float, profile: Profile) -> WalkParams:
    if not (0.0 < phi <= 1.0):
        raise BadPhi(f"phi={phi} outside (0, 1]")
    if m < 1:
        raise ValueError("need at least one edge")
    ln_e2 = math.log(m) + 2.0
    ln_e4 = math.log(m) + 4.0
    ell = max(1, math.ceil(math.log2(m)))
    t0 = max(1, math.ceil(profile.c_t0 * ln_e2 / phi**2))
    f_phi = phi**3 / (profile.c_f * ln_e4**2)
    gamma = 5.0 * phi / (profile.c_gamma * ln_e4)
    eps_base = phi / (profile.c_eps * ln_e4 * t0)
    return WalkParams(m, phi, profile.name, ell, t0, f_phi, gamma, eps_base)


# -- float-vector operations (oracles and small examples) ------------------


def lazy_step(g: Graph, p: np.ndarray) -> np.ndarray:
    """One exact lazy-walk step; self loops keep their mass share in place."""
    return lazy_walk_matrix(g) @ np.asarray(p, dtype=float)


def truncate(g: Graph, p: np.ndarray, eps: float) -> np.ndarray:
    """Zero every entry with p(x) < 2 * eps * deg(x)."""
    p = np.asarray(p, dtype=float).copy()
    p[p < 2.0 * eps * g.deg] = 0.0
    return p


# -- fixed-point kernel -----------------------------------------------------


def walk_step_units(view: ActiveView, mass: np.ndarray) -> np.ndarray:
    """One fixed-point lazy step over a view (int64 array indexed like view.verts)."""
    two_d = 2 * view.deg
    shares = mass // two_d
    kept = (mass * (two_d - view.live_deg)) // two_d
    return kept + view.adj_matrix.dot(shares)


def truncate_units(view: ActiveView, mass: np.ndarray, eps_units: int) -> np.ndarray:
    out = mass.copy()
    out[out < 2 * eps_units * view.deg] = 0
    return out


@dataclass
class TruncatedWalkState:
    """Snapshot of the truncated walk at one step (host-vertex keyed)."""

    t: int
    view: ActiveView
    mass_units: np.ndarray
    eps: float
    participants: frozenset  # host edge keys touched up to this step

    def mass(self, host_v: int) -> float:
        return self.mass_units[self.view.index[host_v]] / SCALE

    def rho(self, host_v: int) -> float:
        i = self.view.index[host_v]
        return self.mass_units[i] / (SCALE * int(self.view.deg[i]))

    def total_mass(self) -> float:
        return float(self.mass_units.sum()) / SCALE

    def support(self) -> list[int]:
        return [int(self.view.verts[i]) for i in np.nonzero(self.mass_units)[0]]


@dataclass
class WalkRun:
    """Complete truncated-walk trajectory with freeze-aware storage.

    `masses[t]` holds the state at steps t = 0..t_last; once the fixed-point
    state repeats exactly it is frozen (all later steps are identical), so
    only the distinct prefix is stored.
    """

    view: ActiveView
    start: int
    b: int
    params: WalkParams
    masses: list[np.ndarray]
    freeze_t: int | None
    pstar: frozenset  # host edge keys
    support_union: np.ndarray  # bool mask over view.verts
    per_round_msgs: list[int]

    @property
    def t0(self) -> int:
        return self.params.t0

    @property
    def t_last(self) -> int:
        return len(self.masses) - 1

    def mass_at(self, t: int) -> np.ndarray:
        return self.masses[min(t, self.t_last)]

    def state_at(self, t: int) -> TruncatedWalkState:
        upto = min(t, self.t_last)
        touched = set()
        mask = np.zeros(len(self.view.verts), dtype=bool)
        for s in range(upto + 1):
            mask |= self.masses[s] > 0
        idx = set(np.nonzero(mask)[0].tolist())
        for a, b_ in self.view.edges_local:
            if a in idx or b_ in idx:
                touched.add(edge_key(int(self.view.verts[a]), int(self.view.verts[b_])))
        return TruncatedWalkState(
            t, self.view, self.mass_at(t), self.params.eps_b(self.b), frozenset(touched)
        )


def compute_walk(view: ActiveView, start: int, params: WalkParams, b: int,
                 net: Network | None = None, instances: int = 1) -> WalkRun:
    """Run the truncated walk for t0 steps (freeze-aware).

    With a network attached, each step is one synchronous round: every vertex
    with positive mass sends its fixed-point share along each live edge; after
    the state freezes, the remaining rounds repeat the identical messages and
    are charged in bulk.
    """
    n = len(view.verts)
    eps_units = params.eps_units(b)
    mass = np.zeros(n, dtype=np.int64)
    mass[view.index[start]] = SCALE
    masses = [mass]
    support = mass > 0
    freeze_t = None
    per_round = []
    if net is not None and MASS_MSG_BITS > net.bandwidth_bits:
        raise BadPhi(f"mass message ({MASS_MSG_BITS}b) exceeds bandwidth {net.bandwidth_bits}")
    for t in range(1, params.t0 + 1):
        cur = masses[-1]
        nxt = truncate_units(view, walk_step_units(view, cur), eps_units)
        senders = cur // (2 * view.deg) > 0
        msgs = int(view.live_deg[senders].sum()) * instances
        per_round.append(msgs)
        if net is not None:
            net.ledger.charge(net.phase, rounds=1, messages=msgs,
                              edge_bits=MASS_MSG_BITS * instances if msgs else 0)
        if np.array_equal(nxt, cur):
            freeze_t = t - 1
            if net is not None and t < params.t0:
                remaining = params.t0 - t
                net.ledger.charge(net.phase, rounds=remaining, messages=remaining * msgs,
                                  edge_bits=MASS_MSG_BITS * instances if msgs else 0)
            break
        masses.append(nxt)
        support |= nxt > 0
    idx = set(np.nonzero(support)[0].tolist())
    pstar = frozenset(
        edge_key(int(view.verts[a]), int(view.verts[b_]))
        for a, b_ in view.edges_local
        if a in idx or b_ in idx
    )
    return WalkRun(view, start, b, params, masses, freeze_t, pstar, support, per_round)


def run_truncated_walk(net: Network, view: ActiveView, start: int,
                       params: WalkParams, b: int) -> WalkRun:
    """Distributed truncated walk: one ledger round per step."""
    return compute_walk(view, start, params, b, net=net)


# -- sweep machinery ---------------------------------------------------------


def sweep_order(state: TruncatedWalkState) -> tuple[list[int], list[int]]:
    """Support ordered by rho descending (IDs ascending on ties) with prefix volumes."""
    order_local = sweep_order_local(state.view, state.mass_units)
    hosts = [int(state.view.verts[i]) for i in order_local]
    prefix = np.cumsum(state.view.deg[order_local]).tolist() if len(order_local) else []
    return hosts, [int(x) for x in prefix]


def sweep_order_local(view: ActiveView, mass: np.ndarray) -> np.ndarray:
    """Local indices of the support sorted by (rho desc, host id asc).

    rho values are exact integer ratios compared through correctly-rounded
    float division: equal ratios compare equal; ratios closer than one ulp
    fall back to the ID tie rule.
    """
    sup = np.nonzero(mass)[0]
    if len(sup) == 0:
        return sup
    rho = mass[sup] / view.deg[sup]
    order = np.lexsort((view.verts[sup], -rho))
    return sup[order]


def prefix_boundary_counts(view: ActiveView, order_local: np.ndarray) -> np.ndarray:
    """|boundary(prefix_j)| for j = 1..len(order), counting live view edges."""
    k = len(order_local)
    big = len(view.verts) + 1
    pos = np.full(len(view.verts), big, dtype=np.int64)
    pos[order_local] = np.arange(k)
    if view.edges_local.size == 0:
        return np.zeros(k, dtype=np.int64)
    pa = pos[view.edges_local[:, 0]]
    pb = pos[view.edges_local[:, 1]]
    lo = np.minimum(pa, pb)
    hi = np.maximum(pa, pb)
    keep = lo < k
    lo = lo[keep]
    hi = np.minimum(hi[keep], k)
    diff = np.zeros(k + 2, dtype=np.int64)
    np.add.at(diff, lo + 1, 1)
    np.add.at(diff, hi + 1, -1)
    return np.cumsum(diff)[1 : k + 1]


# -- diagnostics --------------------------------------------------------------


def influence_set(g: Graph, u: int, params: WalkParams, b: int,
                  n_max: int = Z_SET_N_MAX) -> set[int]:
    """Start vertices whose untruncated walk pushes rho_t(u) over the truncation
    threshold 2*eps_b within the horizon.  Dense powering from every start."""
    if g.n > n_max:
        raise TooLarge(f"n={g.n} exceeds {n_max}")
    thr = 2.0 * params.eps_b(b)
    deg_u = max(1, g.degree(u))
    m = lazy_walk_matrix(g)
    p = np.eye(g.n)  # column v = walk from v
    hit = p[u, :] / deg_u >= thr
    for _ in range(params.t0):
        p = m @ p
        hit |= p[u, :] / deg_u >= thr
        if hit.all():
            break
    return {v for v in range(g.n) if hit[v]}


def exact_rho_table(g: Graph, start: int, t_max: int) -> list[dict[int, tuple[int, int]]]:
    """rho_t(v) as exact integer pairs (numerator, 2L-power denominator exponent).

    Integer-only evaluation of the exact walk: r_t = (2L)^t * p_t with
    L = lcm of degrees, so rho comparisons reduce to integer cross products.
    Returns per-t dicts v -> (r_t(v), t); rho = r / ((2L)^t * deg(v)).
    """
    degs = [g.degree(v) for v in range(g.n)]
    L = 1
    for d in degs:
        L = math.lcm(L, d)
    r = {start: 1}
    out = [{v: (val, 0) for v, val in r.items()}]
    for t in range(1, t_max + 1):
        nxt: dict[int, int] = {}
        for v, val in r.items():
            nxt[v] = nxt.get(v, 0) + val * L  # lazy half: val * (2L) / 2
            share = val * (L // degs[v])
            for u in g.neighbors[v]:
                nxt[u] = nxt.get(u, 0) + share
            if g.self_loops[v]:
                nxt[v] = nxt.get(v, 0) + share * g.self_loops[v]
        r = nxt
        out.append({v: (val, t) for v, val in r.items()})
    return out
