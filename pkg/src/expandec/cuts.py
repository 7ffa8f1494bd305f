"""Sweep-cut search on truncated walks and the nearly-most-balanced sparse cut.

The centralized reference scans every prefix of the sweep order; the
distributed variant scans only a geometric candidate subsequence, locating
each candidate by randomized binary search on a spanning tree of the
participating edges and accepting jump candidates under a relaxed conductance
bound.  Both run the identical fixed-point arithmetic, so their outputs agree
set-for-set; the distributed one additionally charges every simulated round.

All conductance and volume threshold comparisons are exact: thresholds arrive
as binary floats and are compared through their integer ratios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import Profile
from .errors import BadPhi
from .graph import Cut, edge_key
from .simulator import (KIND_BITS, WORD_BITS, Network, SpanningTree, bfs_tree,
                        sample_by_degree, subtree_degrees)
from .views import ActiveView
from .walks import (
    SCALE,
    WalkParams,
    WalkRun,
    compute_walk,
    derive_walk_params,
    prefix_boundary_counts,
    run_truncated_walk,
    sweep_order_local,
)

PHI_ALGO_MAX = 1.0 / 12.0


# -- parameters ---------------------------------------------------------------


@dataclass(frozen=True)
class MultiInstanceParams:
    """Instance count, overlap budget, and union-volume threshold for one graph."""

    vol: int
    k: int
    w: int
    g_bound: int
    s: int

    def union_small_enough(self, union_vol: int) -> bool:
        return 24 * union_vol <= 23 * self.vol


def participation_budget(walkp: WalkParams, profile: Profile) -> float:
    """Expected-participation volume divisor: c * ell * (t0+1) * t0 * ln(m e^4) / phi."""
    ln_e4 = math.log(walkp.m) + 4.0
    return (
        profile.c_parallel * walkp.ell * (walkp.t0 + 1) * walkp.t0 * ln_e4 / walkp.phi
    )


def derive_instance_params(vol: int, walkp: WalkParams, p: float, profile: Profile,
                           k_override: int | None = None) -> MultiInstanceParams:
    if not (0.0 < p < 1.0):
        raise ValueError(f"p={p} outside (0, 1)")
    q = participation_budget(walkp, profile)
    k = k_override if k_override is not None else max(1, math.ceil(vol / q))
    w = 10 * max(1, math.ceil(math.log(max(vol, 2))))
    g = math.ceil(10 * w * q)
    if profile.g_cap is not None:
        g = min(g, profile.g_cap)
    s = 4 * g * math.ceil(math.log(1.0 / p) / math.log(7.0 / 4.0))
    if profile.s_cap is not None:
        s = min(s, profile.s_cap)
    return MultiInstanceParams(vol, k, max(10, w), g, max(1, s))


def ladder_h(theta: float, n: int, c_h: float) -> float:
    """Quality function of the balanced cut: c * theta^(1/3) * log2(n)^(5/3)."""
    return c_h * theta ** (1.0 / 3.0) * math.log2(max(2, n)) ** (5.0 / 3.0)


def ladder_h_inv(theta: float, n: int, c_h: float) -> float:
    return (theta / (c_h * math.log2(max(2, n)) ** (5.0 / 3.0))) ** 3


# -- exact threshold helpers ---------------------------------------------------


def _ratio(x: float) -> tuple[int, int]:
    num, den = float(x).as_integer_ratio()
    return num, den


def _phi_at_most(bnd: int, pv: int, vol_total: int, num: int, den: int) -> bool:
    small = min(pv, vol_total - pv)
    if small <= 0:
        return bnd == 0
    return bnd * den <= num * small


def _mass_floor_ok(p_units: int, deg: int, pv: int, g_num: int, g_den: int) -> bool:
    # rho = p / (SCALE * deg) >= gamma / pv
    return p_units * pv * g_den >= g_num * SCALE * deg


def _vol_window_ok(pv: int, vol_total: int, b: int, up_num: int, up_den: int) -> bool:
    return up_den * pv <= up_num * vol_total and 14 * pv >= 5 * (1 << b)


def _jstar_fix(prefvol: list[int], thr_num: int, thr_den: int, pv_prev: int,
               jmax: int, j: int) -> int:
    """Exact largest 1-based j <= jmax with prefvol[j-1]*den <= num*pv_prev,
    starting from a float-accurate guess (0 if none)."""
    j = min(j, jmax)
    while j < jmax and prefvol[j] * thr_den <= thr_num * pv_prev:
        j += 1
    while j > 0 and prefvol[j - 1] * thr_den > thr_num * pv_prev:
        j -= 1
    return j


# -- round charging for the distributed scan -----------------------------------


class ScanCharger:
    """Accumulates scan round/message charges, one ledger entry per walk step.

    Candidate location is charged deterministically at the with-high-probability
    iteration scale (ceil(log2 band) + 2 tree round trips per search); the
    standalone random_binary_search primitive remains fully message-simulated.
    """

    def __init__(self, net: Network, depth: int, size: int):
        self.net = net
        self.depth = depth
        self.size = max(1, size)
        self._t_rounds = 0
        self._t_msgs = 0

    def begin_t(self):
        self._t_rounds = 0
        self._t_msgs = 0

    def _charge(self, rounds: int, messages: int):
        self.net.ledger.charge(self.net.phase, rounds=rounds, messages=messages,
                               edge_bits=(KIND_BITS + 2 * WORD_BITS) if messages else 0)
        self._t_rounds += rounds
        self._t_msgs += messages

    def step_scan(self, n_checks: int, n_searches: int, jmax: int):
        iters = math.ceil(math.log2(max(2, jmax))) + 2
        rounds = n_checks * 2 * self.depth + n_searches * iters * 4 * self.depth
        msgs = (n_checks * 2 + n_searches * iters * 4) * (self.size - 1)
        self._charge(rounds, msgs)

    def frozen_tail(self, remaining_t: int):
        # The state repeats exactly, so every remaining step scans identically.
        self.net.ledger.charge(self.net.phase, rounds=remaining_t * self._t_rounds,
                               messages=remaining_t * self._t_msgs,
                               edge_bits=(KIND_BITS + 2 * WORD_BITS) if self._t_msgs else 0)

    def membership_broadcast(self):
        self._charge(self.depth, self.size - 1)


# -- the scan -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCandidate:
    """The accepted sweep prefix: step, index, and its exact statistics."""

    t: int
    j: int
    starred: bool
    prefix_volume: int
    boundary: int
    conductance: Fraction
    rho_at_j: float


@dataclass
class LocalCutResult:
    members: frozenset | None
    cut: Cut | None
    candidate: SweepCandidate | None
    start: int
    b: int
    pstar: frozenset
    walk_frozen_at: int | None


def scan_run(view: ActiveView, run: WalkRun, phi: float, b: int, profile: Profile,
             jx_only: bool, charger: ScanCharger | None = None) -> SweepCandidate | None:
    """First (t, j) hit of the sweep conditions, or None.

    jx_only scans the geometric candidate subsequence (raw conditions on
    consecutive candidates, slack conditions on jumps); otherwise every index
    is tested under the raw conditions.  Candidates are prefiltered with float
    masks whose margins strictly dominate rounding error, then confirmed in
    exact integer arithmetic, so the outcome equals a fully exact scan.
    """
    vol_total = view.vol()
    phi_num, phi_den = _ratio(phi)
    slackF = Fraction(profile.starred_slack) * Fraction(phi)
    slack_num, slack_den = slackF.numerator, slackF.denominator
    slack_f = float(slackF)
    one_p_phi = 1 + Fraction(phi)
    thr_num, thr_den = one_p_phi.numerator, one_p_phi.denominator
    gam = run.params.gamma
    g_num, g_den = _ratio(gam)
    deg = view.deg

    for t in range(1, run.t0 + 1):
        if t > run.t_last:
            if charger is not None:
                charger.frozen_tail(run.t0 - t + 1)
            break
        if charger is not None:
            charger.begin_t()
        mass = run.masses[t]
        order = sweep_order_local(view, mass)
        jmax = len(order)
        if jmax == 0:
            continue
        prefvol_np = np.cumsum(deg[order])
        prefvol = [int(x) for x in prefvol_np]
        bnds = prefix_boundary_counts(view, order)
        small = np.minimum(prefvol_np, vol_total - prefvol_np)
        rho_j = mass[order] / deg[order]
        window_raw = (6 * prefvol_np <= 5 * vol_total) & (14 * prefvol_np >= 5 * (1 << b))
        window_star = (12 * prefvol_np <= 11 * vol_total) & (14 * prefvol_np >= 5 * (1 << b))
        c1_raw = bnds <= phi * small * (1 + 1e-9) + 1e-9
        c1_star = bnds <= slack_f * small * (1 + 1e-9) + 1e-9
        c2_raw = rho_j * prefvol_np >= gam * (1 - 1e-9) - 1e-18
        jst_approx = np.searchsorted(prefvol_np, (1.0 + phi) * prefvol_np, side="right")

        def raw_ok(j: int) -> bool:
            pv, bd = prefvol[j - 1], int(bnds[j - 1])
            u = order[j - 1]
            return (
                _phi_at_most(bd, pv, vol_total, phi_num, phi_den)
                and _mass_floor_ok(int(mass[u]), int(deg[u]), pv, g_num, g_den)
                and _vol_window_ok(pv, vol_total, b, 5, 6)
            )

        def starred_ok(j: int, j_prev: int) -> bool:
            pv, bd = prefvol[j - 1], int(bnds[j - 1])
            u_prev = order[j_prev - 1]
            return (
                _phi_at_most(bd, pv, vol_total, slack_num, slack_den)
                and _mass_floor_ok(int(mass[u_prev]), int(deg[u_prev]), pv, g_num, g_den)
                and _vol_window_ok(pv, vol_total, b, 11, 12)
            )

        def hit(j: int, starred: bool) -> SweepCandidate:
            pv, bd = prefvol[j - 1], int(bnds[j - 1])
            sm = min(pv, vol_total - pv)
            u = order[j - 1]
            return SweepCandidate(
                t, j, starred, pv, bd,
                Fraction(0) if bd == 0 else Fraction(bd, sm),
                int(mass[u]) / (SCALE * int(deg[u])),
            )

        if not jx_only:
            for j0 in np.nonzero(c1_raw & window_raw & c2_raw)[0]:
                j = int(j0) + 1
                if raw_ok(j):
                    return hit(j, False)
            continue

        n_checks = 0
        n_searches = 0
        found = None
        j_prev = None
        j = 1
        while True:
            n_checks += 1
            if j_prev is None or j == j_prev + 1:
                if c1_raw[j - 1] and window_raw[j - 1] and c2_raw[j - 1] and raw_ok(j):
                    found = hit(j, False)
                    break
            else:
                if c1_star[j - 1] and window_star[j - 1] and starred_ok(j, j_prev):
                    found = hit(j, True)
                    break
            if j >= jmax:
                break
            j_prev = j
            n_searches += 1
            j_star = _jstar_fix(prefvol, thr_num, thr_den, prefvol[j - 1], jmax,
                                int(jst_approx[j - 1]))
            j = max(j_prev + 1, j_star)
        if charger is not None:
            charger.step_scan(n_checks, n_searches, jmax)
            if found is not None:
                charger.membership_broadcast()
        if found is not None:
            return found
    return None


# -- the local-cut family --------------------------------------------------------


def _result_from_candidate(view: ActiveView, run: WalkRun, cand: SweepCandidate | None,
                           start: int, b: int) -> LocalCutResult:
    if cand is None:
        return LocalCutResult(None, None, None, start, b, run.pstar, run.freeze_t)
    order = sweep_order_local(view, run.masses[cand.t])
    members = frozenset(int(view.verts[i]) for i in order[: cand.j])
    cut = view.cut_stats(members)
    return LocalCutResult(members, cut, cand, start, b, run.pstar, run.freeze_t)


def local_cut(view_or_graph, v: int, phi: float, b: int, params: WalkParams,
              profile: Profile) -> LocalCutResult:
    """Centralized reference: full sweep scan under the raw conditions."""
    view = _as_view(view_or_graph)
    if not (0.0 < phi <= 1.0):
        raise BadPhi(f"phi={phi}")
    run = compute_walk(view, v, params, b)
    cand = scan_run(view, run, phi, b, profile, jx_only=False)
    return _result_from_candidate(view, run, cand, v, b)


def approximate_local_cut_reference(view_or_graph, v: int, phi: float, b: int,
                                    params: WalkParams, profile: Profile) -> LocalCutResult:
    """Centralized twin of the distributed scan (same schedule, same tie rule)."""
    view = _as_view(view_or_graph)
    _check_algo_phi(phi)
    run = compute_walk(view, v, params, b)
    cand = scan_run(view, run, phi, b, profile, jx_only=True)
    return _result_from_candidate(view, run, cand, v, b)


def distributed_local_cut(net: Network, view: ActiveView, v: int, phi: float, b: int,
                          params: WalkParams, profile: Profile) -> LocalCutResult:
    """Distributed local cut: simulated walk, tree-search candidate location,
    slack conditions on jump candidates, full round accounting."""
    _check_algo_phi(phi)
    run = run_truncated_walk(net, view, v, params, b)
    touched = {v} | {u for e in run.pstar for u in e}
    tree = bfs_tree(net, v, edge_filter=lambda a, c: edge_key(a, c) in run.pstar,
                    vertices=touched)
    charger = ScanCharger(net, tree.depth_max, len(tree.parent))
    cand = scan_run(view, run, phi, b, profile, jx_only=True, charger=charger)
    return _result_from_candidate(view, run, cand, v, b)


def _check_algo_phi(phi: float):
    if not (0.0 < phi <= PHI_ALGO_MAX + 1e-12):
        raise BadPhi(f"phi={phi} outside (0, 1/12]")


def _as_view(view_or_graph) -> ActiveView:
    if isinstance(view_or_graph, ActiveView):
        return view_or_graph
    return ActiveView.whole(view_or_graph)


def draw_b(ell: int, rng: np.random.Generator) -> int:
    probs = np.array([2.0 ** -i for i in range(1, ell + 1)])
    probs /= probs.sum()
    return 1 + int(rng.choice(ell, p=probs))


def randomized_local_cut(net: Network, view: ActiveView, phi: float,
                         params: WalkParams, profile: Profile,
                         rng: np.random.Generator,
                         host_tree: SpanningTree | None = None,
                         host_subtree: dict | None = None) -> LocalCutResult:
    """Local cut from a degree-distributed start and geometric truncation level."""
    b = draw_b(params.ell, rng)
    v = _sample_starts(net, view, {b: 1}, rng, host_tree, host_subtree)[0][0]
    return distributed_local_cut(net, view, v, phi, b, params, profile)


def _sample_starts(net, view, counts, rng, host_tree, host_subtree):
    if host_tree is None:
        root = min(view.active)
        host_tree = bfs_tree(net, root,
                             edge_filter=lambda a, c: view.working.is_live(a, c),
                             vertices=view.active)
        host_subtree = None
    deg = lambda u: net.graph.degree(u) if u in view.active else 0
    if host_subtree is None:
        host_subtree = subtree_degrees(net, host_tree, deg)
    return sample_by_degree(net, host_tree, counts, rng, deg=deg, subtree=host_subtree)


@dataclass
class ConcurrentResult:
    members: frozenset | None
    cut: Cut | None
    aborted_overlap: bool
    params: MultiInstanceParams
    instances: list[LocalCutResult]
    instance_ids: list[int]
    edge_participation: dict


def concurrent_local_cuts(net: Network, view: ActiveView, phi: float,
                          walkp: WalkParams, profile: Profile,
                          rng: np.random.Generator, p: float = 0.25,
                          k_override: int | None = None,
                          host_tree: SpanningTree | None = None,
                          host_subtree: dict | None = None,
                          host_depth: int | None = None) -> ConcurrentResult:
    """k concurrent randomized local cuts merged under the union-volume rule.

    Aborts to None when any edge participates in more than w instances (the
    abort is broadcast over the host component).  Instances are ordered by
    their random 64-bit identifiers (ties by start id, then level), and the
    output is the largest prefix union within 23/24 of the graph volume.
    Round accounting is sequential-equivalent: an upper bound on any
    w-multiplexed schedule.
    """
    _check_algo_phi(phi)
    mi = derive_instance_params(view.vol(), walkp, p, profile, k_override)
    bs = [draw_b(walkp.ell, rng) for _ in range(mi.k)]
    counts: dict[int, int] = {}
    for b in bs:
        counts[b] = counts.get(b, 0) + 1
    landings = _sample_starts(net, view, counts, rng, host_tree, host_subtree)
    sub_rngs = rng.spawn(len(landings))
    instances: list[LocalCutResult] = []
    ids: list[int] = []
    for (v, b), sub in zip(landings, sub_rngs):
        ids.append(int(sub.integers(1 << 62)))
        instances.append(distributed_local_cut(net, view, v, phi, b, walkp, profile))
    participation: dict[tuple[int, int], int] = {}
    for res in instances:
        for e in res.pstar:
            participation[e] = participation.get(e, 0) + 1
    depth = host_depth if host_depth is not None else (host_tree.depth_max if host_tree else len(view))
    if participation and max(participation.values()) > mi.w:
        net.ledger.charge(net.phase, rounds=max(1, depth), messages=2 * view.m_live,
                          edge_bits=KIND_BITS)
        return ConcurrentResult(None, None, True, mi, instances, ids, participation)
    seq = sorted(range(len(instances)),
                 key=lambda i: (ids[i], instances[i].start, instances[i].b))
    union: set[int] = set()
    union_vol = 0
    best: set[int] | None = None
    for i in seq:
        mem = instances[i].members
        if mem:
            for u in mem - union:
                union_vol += net.graph.degree(u)
            union |= mem
        if mi.union_small_enough(union_vol):
            best = set(union)
    net.ledger.charge(net.phase,
                      rounds=max(1, depth) * (2 + math.ceil(math.log2(max(2, mi.k)))),
                      messages=max(0, len(view) - 1), edge_bits=KIND_BITS + WORD_BITS)
    if not best:
        return ConcurrentResult(None, None, False, mi, instances, ids, participation)
    members = frozenset(best)
    cut = view.cut_stats(members) if members != view.active else None
    return ConcurrentResult(members, cut, False, mi, instances, ids, participation)


@dataclass
class PartitionResult:
    members: frozenset          # possibly empty
    cut: Cut | None             # stats w.r.t. the graph the call started from
    pieces: list[frozenset]     # disjoint per-iteration cuts, in order
    iterations: int
    s_budget: int
    w_max: int
    phi: float
    k_phi: float                # recorded constant: Phi(C) <= k_phi * phi * log2(|V|)
    concurrent: list[ConcurrentResult]


def sparse_cut_partition(net: Network, view: ActiveView, phi: float, p: float,
                         profile: Profile, rng: np.random.Generator,
                         k_override: int | None = None) -> PartitionResult:
    """Accumulate concurrent local cuts until 1/48 of the volume is captured.

    Hard guarantees checked downstream: the accumulated cut keeps volume at
    most 47/48 of the total, pieces are disjoint, and a non-empty result has
    conductance at most 47 * 276 * w * phi.
    """
    _check_algo_phi(phi)
    if not (0.0 < p < 1.0):
        raise ValueError(f"p={p}")
    vol0 = view.vol()
    m0 = max(1, view.m_live)
    walkp = derive_walk_params(m0, phi, profile)
    mi0 = derive_instance_params(vol0, walkp, p, profile, k_override)
    root = min(view.active)
    host_tree = bfs_tree(net, root, edge_filter=lambda a, c: view.working.is_live(a, c),
                         vertices=view.active)
    host_depth = host_tree.depth_max
    active = set(view.active)
    pieces: list[frozenset] = []
    concurrent: list[ConcurrentResult] = []
    w_max = mi0.w
    it = 0
    for it in range(1, mi0.s + 1):
        cur = view if not pieces else view.subview(active)
        deg_mask = lambda u: net.graph.degree(u) if u in active else 0
        host_subtree = subtree_degrees(net, host_tree, deg_mask)
        res = concurrent_local_cuts(net, cur, phi, walkp, profile, rng, p=p,
                                    k_override=k_override, host_tree=host_tree,
                                    host_subtree=host_subtree, host_depth=host_depth)
        concurrent.append(res)
        w_max = max(w_max, res.params.w)
        if res.members:
            pieces.append(res.members)
            active -= res.members
        removed_vol = vol0 - view.vol_of(active)
        if 48 * removed_vol >= vol0:
            break
    members = frozenset().union(*pieces) if pieces else frozenset()
    cut = view.cut_stats(members) if members and members != view.active else None
    n_view = max(2, len(view))
    k_phi = 47.0 * 276.0 * w_max / math.log2(n_view)
    return PartitionResult(members, cut, pieces, it, mi0.s, w_max, phi, k_phi, concurrent)


@dataclass
class BalancedCutResult:
    members: frozenset
    cut: Cut
    phi_target: float
    phi_inner: float
    h_bound: float        # certified conductance bound for this run
    c_h_effective: float  # h_bound expressed against theta^(1/3) log2(n)^(5/3)
    partition: PartitionResult


def balanced_sparse_cut(net: Network, view: ActiveView, phi_target: float,
                        profile: Profile, rng: np.random.Generator,
                        p: float | None = None,
                        k_override: int | None = None) -> BalancedCutResult | None:
    """Nearly-most-balanced sparse cut: re-parameterized cut accumulation.

    The inner conductance solves f(phi') = phi_target (capped at 1/12); the
    recorded h bound certifies the output conductance.  Returns None for an
    empty result.
    """
    n_view = len(view)
    if profile.enforce_phi_cap:
        cap = 1.0 / math.log2(max(4, n_view)) ** 5
        if phi_target > cap:
            raise BadPhi(f"phi={phi_target} above profile cap {cap}")
    if phi_target <= 0:
        raise BadPhi(f"phi={phi_target}")
    m_view = max(1, view.m_live)
    ln_e4 = math.log(m_view) + 4.0
    phi_inner = min((phi_target * profile.c_f * ln_e4**2) ** (1.0 / 3.0), PHI_ALGO_MAX)
    if p is None:
        p = 1.0 / max(2, n_view) ** 2
    part = sparse_cut_partition(net, view, phi_inner, p, profile, rng, k_override)
    if not part.members or part.cut is None:
        return None
    h_bound = min(1.0, 47.0 * 276.0 * part.w_max * phi_inner)
    c_h_eff = h_bound / (phi_target ** (1.0 / 3.0) * math.log2(max(2, n_view)) ** (5.0 / 3.0))
    return BalancedCutResult(part.members, part.cut, phi_target, phi_inner,
                             h_bound, c_h_eff, part)
