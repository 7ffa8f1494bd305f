"""Two-phase expander decomposition with three tagged edge-removal channels.

Phase 1 recursively splits along nearly-most-balanced sparse cuts after a
low-diameter preprocessing pass (channel r1 = clustering cuts, r2 = balanced
cuts).  Components whose cut came back small enter Phase 2, a level ladder
that keeps cutting at successively smaller conductance targets and ejects each
sufficiently large cut wholesale (channel r3), turning its members into
self-loop singletons.  Degrees never change; removed plus remaining edges
always recompose the input.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
import numpy as np

from .config import Profile
from .cuts import balanced_sparse_cut, ladder_h_inv
from .errors import (
    BadEpsilon,
    BudgetExceeded,
    DepthExceeded,
    IterationOverflow,
    LevelOverflow,
)
from .graph import Graph, N_ORACLE_MAX, edge_key, min_conductance_oracle
from .simulator import Network, RoundLedger
from .views import ActiveView, WorkingGraph
from .walks import compute_walk, derive_walk_params, prefix_boundary_counts, sweep_order_local


@dataclass(frozen=True)
class DecompParams:
    epsilon: float
    k: int
    d: int
    beta: float
    phi_ladder: tuple[float, ...]  # phi_0 .. phi_k, strictly decreasing
    c_h: float
    profile_name: str

    @property
    def phi_0(self) -> float:
        return self.phi_ladder[0]

    @property
    def phi_k(self) -> float:
        return self.phi_ladder[-1]


def derive_decomp_params(n: int, m: int, epsilon: float, k: int,
                         profile: Profile) -> DecompParams:
    """d is the smallest integer with (1 - eps/12)^d * 2 * C(n,2) < 1;
    beta = (eps/3)/d; the phi ladder starts where the cut-quality function h
    meets (eps/6)/log2 C(n,2) and steps down through h-inverse.  The desk
    profile floors the ladder (geometrically, preserving strict decrease)."""
    if not (0.0 < epsilon < 1.0):
        raise BadEpsilon(f"epsilon={epsilon}")
    if k < 1:
        raise BadEpsilon(f"k={k}")
    pairs = n * (n - 1)  # 2 * C(n, 2)
    d = 1
    while (1 - epsilon / 12.0) ** d * pairs >= 1.0 and d < 10**7:
        d += 1
    beta = (epsilon / 3.0) / d
    target = (epsilon / 6.0) / math.log2(max(2, n * (n - 1) // 2))
    phi = [ladder_h_inv(target, n, profile.c_h_ladder)]
    for _ in range(k):
        phi.append(ladder_h_inv(phi[-1], n, profile.c_h_ladder))
    if profile.phi_floor is not None:
        floor = profile.phi_floor
        phi = [max(p, floor * profile.phi_decay**i) for i, p in enumerate(phi)]
    if not all(a > b for a, b in zip(phi, phi[1:])):
        raise BadEpsilon(f"phi ladder not strictly decreasing: {phi}")
    return DecompParams(epsilon, k, d, beta, tuple(phi), profile.c_h_ladder, profile.name)


@dataclass
class ComponentCertificate:
    members: tuple[int, ...]
    kind: str          # "oracle" | "sweep" | "singleton"
    phi_lower_ok: bool
    phi_value: float | None  # exact oracle value or best sweep upper bound seen


@dataclass
class Decomposition:
    graph: Graph
    params: DecompParams
    components: list[frozenset]
    removed: dict[str, list[tuple[int, int]]]  # channels r1, r2, r3
    certificates: list[ComponentCertificate]
    ledger: RoundLedger
    seed: int
    constants: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def removed_total(self) -> int:
        return sum(len(v) for v in self.removed.values())

    def inter_fraction(self) -> float:
        return self.removed_total / max(1, self.graph.m)

    def to_json(self) -> str:
        return json.dumps({
            "components": [sorted(c) for c in self.components],
            "removed": {ch: len(es) for ch, es in self.removed.items()},
            "removed_edges": {ch: sorted(es) for ch, es in self.removed.items()},
            "epsilon": self.params.epsilon,
            "k": self.params.k,
            "phi_k": self.params.phi_k,
            "constants": self.constants,
            "rounds": self.ledger.rows(),
            "seed": self.seed,
        }, sort_keys=True)


def expander_decomposition(graph: Graph, epsilon: float, k: int,
                           rng: np.random.Generator | int, profile: Profile,
                           ledger: RoundLedger | None = None,
                           lowdiam_K: float = 10.0) -> Decomposition:
    """Phase-1 recursion plus Phase-2 trimming; asserts the removal budget."""
    if isinstance(rng, np.random.Generator):
        seed = -1
    else:
        seed_material = [int(rng)] if isinstance(rng, (int, np.integer)) else [int(x) for x in rng]
        seed = seed_material[0]
        rng = np.random.default_rng(seed_material + [0xDEC0])
    params = derive_decomp_params(graph.n, graph.m, epsilon, k, profile)
    ledger = ledger or RoundLedger()
    net = Network(graph, ledger=ledger, phase="decomp")
    working = WorkingGraph(graph)
    state = _RunState(net, working, params, profile, rng, lowdiam_K)
    whole = ActiveView(working, range(graph.n))
    for comp in whole.components():
        _phase1(state, comp, depth=1)
    for host_comp, members in state.phase2_queue:
        _phase2(state, host_comp, members)
    components = sorted(state.finals, key=min)
    removed = {ch: working.removed_by(ch) for ch in ("r1", "r2", "r3")}
    total = sum(len(v) for v in removed.values())
    if total > epsilon * graph.m:
        raise BudgetExceeded(f"removed {total} of {graph.m} edges at epsilon={epsilon}")
    _check_structure(graph, working, components)
    certificates = [_certify(state, comp) for comp in components]
    constants = {
        "c_h_ladder": params.c_h,
        "phi_ladder": list(params.phi_ladder),
        "d": params.d,
        "beta": params.beta,
        "k_phi_parts": list(profile.k_phi_parts),
        "profile": profile.name,
        "lowdiam_K": lowdiam_K,
    }
    dec = Decomposition(graph, params, components, removed, certificates,
                        ledger, seed, constants)
    dec.diagnostics = {
        "max_depth": state.max_depth_seen,
        "d": params.d,
        "phase2": state.phase2_stats,
    }
    return dec


class _RunState:
    def __init__(self, net, working, params, profile, rng, lowdiam_K):
        self.net = net
        self.working = working
        self.params = params
        self.profile = profile
        self.rng = rng
        self.lowdiam_K = lowdiam_K
        self.finals: list[frozenset] = []
        self.phase2_queue: list[tuple[frozenset, frozenset]] = []
        self.max_depth_seen = 0
        self.phase2_stats: list[dict] = []


def _phase1(state: _RunState, members: frozenset, depth: int):
    from .clustering import low_diam_decomposition

    params = state.params
    if depth > params.d:
        raise DepthExceeded(f"phase-1 recursion reached depth {depth} > d={params.d}")
    state.max_depth_seen = max(state.max_depth_seen, depth)
    view = ActiveView(state.working, members)
    for comp in view.components():
        comp_view = view.subview(comp)
        if comp_view.vol() <= state.profile.vol_finalize_cutoff:
            _finalize_tiny(state, comp)
            continue
        state.net.set_phase("lowdiam")
        ld = low_diam_decomposition(state.net, comp_view, params.beta,
                                    state.lowdiam_K, state.rng)
        if ld.cut_edges:
            state.working.remove_edges(ld.cut_edges, "r1")
        after = ActiveView(state.working, comp)
        for u_set in after.components():
            u_view = after.subview(u_set)
            if u_view.vol() <= state.profile.vol_finalize_cutoff:
                _finalize_tiny(state, u_set)
                continue
            state.net.set_phase("phase1-cut")
            res = balanced_sparse_cut(state.net, u_view, params.phi_0,
                                      state.profile, state.rng)
            if res is None:
                state.finals.append(u_set)
                continue
            vol_u = u_view.vol()
            vol_c = u_view.vol_of(res.members)
            if 12 * vol_c <= params.epsilon * vol_u:
                state.phase2_queue.append((u_set, u_set))
                continue
            cut_edges = [
                e for e in u_view.live_edges_host()
                if (e[0] in res.members) != (e[1] in res.members)
            ]
            state.working.remove_edges(cut_edges, "r2")
            _phase1(state, frozenset(res.members), depth + 1)
            _phase1(state, u_set - res.members, depth + 1)


def _finalize_tiny(state: _RunState, comp: frozenset):
    # Components this small can never dip below the ladder floor: any proper
    # cut of a connected piece with volume <= 8 has conductance >= 1/4.
    state.finals.append(comp)


def _phase2(state: _RunState, host_comp: frozenset, members: frozenset):
    params = state.params
    view = ActiveView(state.working, members)
    vol_u = view.vol()
    tau = ((params.epsilon / 6.0) * vol_u) ** (1.0 / params.k)
    m_levels = [(params.epsilon / 6.0) * vol_u]
    for _ in range(params.k):
        m_levels.append(m_levels[-1] / tau)
    level = 1
    active = set(members)
    iters_at_level = 0
    removed_vol_at_level: dict[int, int] = {}
    while True:
        if level > params.k:
            raise LevelOverflow(f"phase-2 level {level} > k={params.k}")
        if iters_at_level > 2 * tau + 1:
            raise IterationOverflow(
                f"phase-2 spent {iters_at_level} iterations at level {level} (2 tau = {2 * tau:.2f})"
            )
        cur = ActiveView(state.working, active)
        if cur.vol() <= state.profile.vol_finalize_cutoff or cur.m_live == 0:
            for comp in cur.components():
                state.finals.append(comp)
            break
        state.net.set_phase("phase2-cut")
        res = balanced_sparse_cut(state.net, cur, params.phi_ladder[level],
                                  state.profile, state.rng)
        iters_at_level += 1
        if res is None:
            for comp in cur.components():
                state.finals.append(comp)
            break
        vol_c = cur.vol_of(res.members)
        if 2 * tau * vol_c <= m_levels[level - 1]:
            level += 1
            iters_at_level = 0
            continue
        # eject the cut: every incident live edge goes, members become singletons
        incident = [
            e for e in cur.live_edges_host()
            if e[0] in res.members or e[1] in res.members
        ]
        state.working.remove_edges(incident, "r3")
        removed_vol_at_level[level] = removed_vol_at_level.get(level, 0) + vol_c
        for u in sorted(res.members):
            state.finals.append(frozenset({u}))
        active -= res.members
        if not active:
            break
    state.phase2_stats.append({
        "vol_u": vol_u,
        "tau": tau,
        "m_levels": m_levels,
        "removed_vol_at_level": removed_vol_at_level,
        "final_level": level,
    })


def _check_structure(graph: Graph, working: WorkingGraph, components: list[frozenset]):
    # degree conservation: removals only convert edges to loops
    view = ActiveView(working, range(graph.n))
    vol_live = int(view.deg.sum())
    assert vol_live == graph.volume()
    # components must be exactly the connected parts of the remaining edges
    recomputed = sorted(view.components(), key=min)
    got = sorted(components, key=min)
    if recomputed != got:
        raise AssertionError("final components disagree with live connectivity")


def _certify(state: _RunState, comp: frozenset) -> ComponentCertificate:
    phi_k = state.params.phi_k
    members = tuple(sorted(comp))
    if len(comp) == 1:
        return ComponentCertificate(members, "singleton", True, None)
    sub = contract_live(state.working, comp)
    if len(comp) <= N_ORACLE_MAX:
        phi, _ = min_conductance_oracle(sub)
        return ComponentCertificate(members, "oracle", float(phi) >= phi_k, float(phi))
    best = _sweep_falsifier(state, comp)
    return ComponentCertificate(members, "sweep", best >= phi_k, best)


def contract_live(working: WorkingGraph, comp) -> Graph:
    """Contraction of the working graph (removed edges as loops) onto comp."""
    view = ActiveView(working, comp)
    g, _labels = view.materialize()
    return g


def _sweep_falsifier(state: _RunState, comp: frozenset) -> float:
    """Sound conductance falsifier: min sweep-prefix conductance of one
    truncated walk started inside the component (an upper bound on Phi)."""
    view = ActiveView(state.working, comp)
    params = derive_walk_params(max(1, view.m_live), state.params.phi_k, state.profile)
    run = compute_walk(view, min(comp), params, b=max(1, params.ell // 2))
    vol_total = view.vol()
    best = float("inf")
    for t in range(1, run.t_last + 1):
        order = sweep_order_local(view, run.masses[t])
        if len(order) < 2:
            continue
        prefvol = np.cumsum(view.deg[order])
        bnds = prefix_boundary_counts(view, order)
        small = np.minimum(prefvol, vol_total - prefvol)
        ok = small > 0
        if ok.any():
            best = min(best, float((bnds[ok] / small[ok]).min()))
    return best


# -- verification -----------------------------------------------------------------


@dataclass
class VerifyReport:
    ok: bool
    inter_edges: int
    inter_fraction_ok: bool
    component_results: list[tuple[tuple[int, ...], str, bool]]

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status}: {self.inter_edges} inter edges, " + ", ".join(
            f"{kind}:{'ok' if good else 'FAIL'}" for _, kind, good in self.component_results
        )


def verify_decomposition(graph: Graph, components: list, epsilon: float,
                         phi_k: float, profile: Profile,
                         reported_removed: set | None = None) -> VerifyReport:
    """Recompute the inter-component fraction and re-certify every component
    (exact oracle when small, sweep falsifier when large).  When the run's
    reported removal set is given, the recount must match it exactly."""
    assignment = {}
    for i, comp in enumerate(components):
        for v in comp:
            if v in assignment:
                return VerifyReport(False, -1, False, [(tuple(comp), "overlap", False)])
            assignment[v] = i
    if set(assignment) != set(range(graph.n)):
        return VerifyReport(False, -1, False, [((), "cover", False)])
    inter_set = {(u, v) for u, v in graph.edges if assignment[u] != assignment[v]}
    inter = len(inter_set)
    frac_ok = inter <= epsilon * graph.m
    if reported_removed is not None and {edge_key(*e) for e in reported_removed} != inter_set:
        return VerifyReport(False, inter, frac_ok,
                            [((), "inter-edge recount", False)])
    working = WorkingGraph(graph)
    cut_edges = [e for e in graph.edges if assignment[e[0]] != assignment[e[1]]]
    if cut_edges:
        working.remove_edges(cut_edges, "inter")
    results = []
    ok = frac_ok
    for comp in components:
        comp = frozenset(comp)
        members = tuple(sorted(comp))
        if len(comp) == 1:
            results.append((members, "singleton", True))
            continue
        sub = contract_live(working, comp)
        if not sub.is_connected():
            results.append((members, "connectivity", False))
            ok = False
            continue
        if len(comp) <= N_ORACLE_MAX:
            phi, _ = min_conductance_oracle(sub)
            good = float(phi) >= phi_k
            results.append((members, "oracle", good))
        else:
            state = _FalsifierShim(working, phi_k, profile)
            best = _sweep_falsifier(state, comp)
            good = best >= phi_k
            results.append((members, "sweep", good))
        ok = ok and good
    return VerifyReport(ok, inter, frac_ok, results)


class _FalsifierShim:
    def __init__(self, working, phi_k, profile):
        self.working = working
        self.profile = profile
        self.params = _PhiOnly(phi_k)


class _PhiOnly:
    def __init__(self, phi_k):
        self.phi_k = phi_k
