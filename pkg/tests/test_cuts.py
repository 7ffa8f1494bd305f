"""Local sweep cuts, concurrent instances, cut accumulation, balanced wrapper."""
import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.stats

from expandec import generators as gen
from expandec.config import DESK, PAPER
from expandec.errors import BadPhi
from expandec.graph import cut_stats
from expandec.simulator import Network
from expandec.views import ActiveView
from expandec.walks import WalkParams, compute_walk, derive_walk_params
from expandec.cuts import (
    approximate_local_cut_reference,
    balanced_sparse_cut,
    concurrent_local_cuts,
    derive_instance_params,
    distributed_local_cut,
    draw_b,
    ladder_h,
    ladder_h_inv,
    local_cut,
    randomized_local_cut,
    scan_run,
    sparse_cut_partition,
)

PHI = 1 / 12


def candidate_indices(prefvol, phi):
    """Reference recurrence for the geometric candidate subsequence (1-based)."""
    jmax = len(prefvol)
    out = [1]
    while out[-1] < jmax:
        prev = out[-1]
        thr = (1 + phi) * prefvol[prev - 1]
        j_star = 0
        for j in range(1, jmax + 1):
            if prefvol[j - 1] <= thr + 1e-12:
                j_star = j
        out.append(max(prev + 1, j_star))
    return out


def test_jx_single_vertex():
    assert candidate_indices([3], 0.5) == [1]


def test_jx_doubling_pattern():
    prefvol = list(range(1, 65))
    js = candidate_indices(prefvol, 1.0)
    assert js[:7] == [1, 2, 4, 8, 16, 32, 64]


def test_jx_strictly_increasing_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        degs = rng.integers(1, 9, size=n)
        prefvol = np.cumsum(degs).tolist()
        js = candidate_indices(prefvol, float(rng.uniform(0.02, 0.5)))
        assert all(a < b for a, b in zip(js, js[1:]))
        assert js[-1] == n


def _cut_setup(g, phi=PHI):
    view = ActiveView.whole(g)
    params = derive_walk_params(g.m, phi, DESK)
    return view, params


def test_local_cut_output_bounds():
    g = gen.barbell(8, 1)
    view, params = _cut_setup(g)
    vol = view.vol()
    for v in (0, 3, 9):
        for b in (1, 2, 3):
            res = local_cut(view, v, PHI, b, params, DESK)
            if res.members is None:
                continue
            cut = cut_stats(g, res.members)
            assert cut.conductance <= Fraction(PHI).limit_denominator(10**12)
            assert 6 * cut.vol_s <= 5 * vol


def test_local_cut_k2_unsatisfiable_level():
    g = gen.clique(2)
    view, params = _cut_setup(g)
    # (5/7) * 2^(b-1) > Vol(V) = 2 for b >= 3
    res = local_cut(view, 0, PHI, 3, params, DESK)
    assert res.members is None


def test_local_cut_recovers_planted_side():
    g = gen.barbell(8, 1)
    view, params = _cut_setup(g)
    side = set(range(8))
    vol_side = sum(g.degree(v) for v in side)
    good = 0
    total = 0
    rng = np.random.default_rng(17)
    for _ in range(100):
        v = int(rng.integers(0, 8))
        b = 1 + int(rng.integers(0, 3))
        res = local_cut(view, v, PHI, b, params, DESK)
        total += 1
        if res.members is not None:
            overlap = sum(g.degree(u) for u in res.members & side)
            if 2 * overlap >= vol_side:
                good += 1
    assert good >= 0.9 * total


def test_approx_scan_bounds():
    g = gen.barbell(8, 1)
    view, params = _cut_setup(g)
    vol = view.vol()
    for v in range(0, 16, 3):
        for b in (1, 2, 4):
            res = approximate_local_cut_reference(view, v, PHI, b, params, DESK)
            if res.members is None:
                continue
            cut = cut_stats(g, res.members)
            assert float(cut.conductance) <= 12 * PHI + 1e-12
            assert 12 * cut.vol_s <= 11 * vol


def test_approx_scan_rejects_bad_phi():
    g = gen.clique(4)
    view, params = _cut_setup(g)
    with pytest.raises(BadPhi):
        approximate_local_cut_reference(view, 0, 0.5, 1, params, DESK)


def test_distributed_equals_reference_many_seeds():
    graphs = [gen.barbell(6, 1), gen.cliques_chain(3, 5, 1), gen.grid(4, 4),
              gen.erdos_renyi(18, 0.3, seed=5), gen.clique(9)]
    rng = np.random.default_rng(23)
    for g in graphs:
        if not g.is_connected():
            continue
        view, params = _cut_setup(g)
        for _ in range(8):
            v = int(rng.integers(g.n))
            b = 1 + int(rng.integers(0, params.ell))
            ref = approximate_local_cut_reference(view, v, PHI, b, params, DESK)
            net = Network(g)
            dist = distributed_local_cut(net, view, v, PHI, b, params, DESK)
            assert ref.members == dist.members


def test_planted_overlap_lower_bound():
    # With the detectability precondition forced via a small constant, the
    # level-b cut from a planted start covers at least 2^(b-2) of the side.
    g = gen.barbell(12, 1)
    prof = DESK.replace(c_f=1e-3)
    view = ActiveView.whole(g)
    params = derive_walk_params(g.m, PHI, prof)
    side = set(range(12))
    vol_side = sum(g.degree(v) for v in side)
    phi_side = 1 / vol_side
    assert phi_side <= 2 * params.f_phi  # precondition (desk constants overridden)
    for v in (0, 5, 11):
        for b in (1, 2, 3, 4):
            res = approximate_local_cut_reference(view, v, PHI, b, params, prof)
            assert res.members is not None
            overlap = sum(g.degree(u) for u in res.members & side)
            assert overlap >= 2 ** (b - 2)


def test_b_marginal_chi_square():
    ell = 8
    rng = np.random.default_rng(5)
    draws = [draw_b(ell, rng) for _ in range(100_000)]
    observed = np.bincount(draws, minlength=ell + 1)[1:]
    probs = np.array([2.0**-i for i in range(1, ell + 1)])
    probs /= probs.sum()
    chi2, p = scipy.stats.chisquare(observed, probs * len(draws))
    assert p > 0.01


def test_randomized_start_degree_marginal():
    g = gen.star(4)
    view, params = _cut_setup(g)
    rng = np.random.default_rng(8)
    net = Network(g)
    center = 0
    trials = 2000
    hits = 0
    from expandec.cuts import _sample_starts

    for _ in range(trials):
        (v, _b), = _sample_starts(net, view, {1: 1}, rng, None, None)
        hits += v == center
    sigma = math.sqrt(0.25 / trials)
    assert abs(hits / trials - 0.5) <= 5 * sigma


def test_participation_frequency_at_paper_constants():
    # The participation bound is vacuous (>1) at this scale; measure and check <= 1.
    g = gen.barbell(3, 1)
    view = ActiveView.whole(g)
    params = derive_walk_params(g.m, PHI, PAPER)
    q = 56 * params.ell * (params.t0 + 1) * params.t0 * (math.log(g.m) + 4) / PHI
    bound = q / view.vol()
    assert bound > 1
    rng = np.random.default_rng(2)
    counts = {e: 0 for e in g.edges}
    trials = 20
    for _ in range(trials):
        net = Network(g)
        res = randomized_local_cut(net, view, PHI, params, DESK, rng)
        for e in res.pstar:
            counts[e] += 1
    freq = max(counts.values()) / trials
    assert freq <= 1.0


def test_concurrent_conductance_bound():
    g = gen.barbell(8, 1)
    view, params = _cut_setup(g)
    for seed in range(6):
        net = Network(g)
        res = concurrent_local_cuts(net, view, PHI, params, DESK,
                                    np.random.default_rng(seed), k_override=4)
        if res.members is None:
            continue
        cut = cut_stats(g, res.members)
        assert float(cut.conductance) <= 276 * res.params.w * PHI


def test_concurrent_k1_degenerate():
    g = gen.barbell(8, 1)
    view, params = _cut_setup(g)
    net = Network(g)
    res = concurrent_local_cuts(net, view, PHI, params, DESK,
                                np.random.default_rng(4), k_override=1)
    assert len(res.instances) == 1
    single = res.instances[0].members
    vol = view.vol()
    if single is not None and 24 * sum(g.degree(v) for v in single) <= 23 * vol:
        assert res.members == single
    else:
        assert res.members is None


def test_concurrent_union_volume_bound_any_seed():
    g = gen.cliques_chain(3, 6, 1)
    view, params = _cut_setup(g)
    vol = view.vol()
    for seed in range(10):
        net = Network(g)
        res = concurrent_local_cuts(net, view, PHI, params, DESK,
                                    np.random.default_rng(seed), k_override=5)
        if res.members is not None:
            assert 24 * sum(g.degree(v) for v in res.members) <= 23 * vol


def test_partition_on_expander_returns_empty():
    g = gen.clique(16)
    view = ActiveView.whole(g)
    empty = 0
    for seed in range(40):
        net = Network(g)
        res = sparse_cut_partition(net, view, PHI, 0.25, DESK, np.random.default_rng(seed))
        if not res.members:
            empty += 1
        else:
            cut = cut_stats(g, res.members)
            assert float(cut.conductance) <= res.k_phi * PHI * math.log2(g.n)
    assert empty >= 36


def test_partition_hard_bounds_every_seed():
    for g in (gen.barbell(12, 1), gen.cliques_chain(3, 6, 2), gen.grid(5, 5)):
        view = ActiveView.whole(g)
        vol = view.vol()
        for seed in range(5):
            net = Network(g)
            res = sparse_cut_partition(net, view, PHI, 0.25, DESK,
                                       np.random.default_rng(seed))
            vol_c = sum(g.degree(v) for v in res.members)
            assert 48 * vol_c <= 47 * vol
            # pieces disjoint
            seen = set()
            for piece in res.pieces:
                assert not (piece & seen)
                seen |= piece
            if res.members:
                cut = cut_stats(g, res.members)
                assert float(cut.conductance) <= res.k_phi * PHI * math.log2(g.n) + 1e-12
                assert float(cut.conductance) <= 47 * 276 * res.w_max * PHI


def test_partition_recovers_planted_cut():
    g = gen.barbell(12, 1)
    view = ActiveView.whole(g)
    vol = view.vol()
    side = set(range(12))
    vol_side = sum(g.degree(v) for v in side)
    ok = 0
    for seed in range(20):
        net = Network(g)
        res = sparse_cut_partition(net, view, PHI, 0.25, DESK,
                                   np.random.default_rng(seed))
        vol_c = sum(g.degree(v) for v in res.members)
        overlap = sum(g.degree(v) for v in res.members & side)
        if 48 * vol_c >= vol or 2 * overlap >= vol_side:
            ok += 1
    assert ok >= 14  # 0.70 fraction at module scale


def test_balanced_cut_expander_or_bounded():
    from expandec.graph import min_conductance_oracle

    g = gen.random_regular(12, 4, seed=3)
    phi_g, _ = min_conductance_oracle(g)
    target = 0.01
    assert float(phi_g) > target
    for seed in range(6):
        net = Network(g)
        res = balanced_sparse_cut(net, ActiveView.whole(g), target, DESK,
                                  np.random.default_rng(seed))
        if res is not None:
            assert float(res.cut.conductance) <= res.h_bound


def test_balanced_cut_phi_cap_paper():
    g = gen.clique(8)
    net = Network(g)
    with pytest.raises(BadPhi):
        balanced_sparse_cut(net, ActiveView.whole(g), 0.2, PAPER,
                            np.random.default_rng(0))


def test_h_inverse_pair():
    for n in (8, 64, 1024):
        for c_h in (0.5, 1.0, 3.0):
            for theta in (1e-6, 1e-3, 0.05):
                assert ladder_h_inv(ladder_h(theta, n, c_h), n, c_h) == pytest.approx(theta, abs=1e-9)
                assert ladder_h(theta, n, c_h) < ladder_h(theta * 2, n, c_h)


def test_recomputed_conductance_matches_cached():
    g = gen.barbell(8, 1)
    view, params = _cut_setup(g)
    res = local_cut(view, 1, PHI, 2, params, DESK)
    assert res.members is not None
    assert cut_stats(g, res.members).conductance == res.cut.conductance


def test_overlap_rule_from_transcript():
    g = gen.barbell(8, 1)
    view, params = _cut_setup(g)
    for seed in range(5):
        net = Network(g)
        res = concurrent_local_cuts(net, view, PHI, params, DESK,
                                    np.random.default_rng(seed), k_override=6)
        recount = {}
        for inst in res.instances:
            for e in inst.pstar:
                recount[e] = recount.get(e, 0) + 1
        assert recount == res.edge_participation
        if res.members is not None:
            assert max(recount.values()) <= res.params.w


def test_instance_params_fields():
    params = derive_walk_params(100, PHI, DESK)
    mi = derive_instance_params(500, params, 0.25, DESK)
    assert mi.k >= 1
    assert mi.w >= 10
    assert mi.s >= 1
    assert mi.union_small_enough(int(500 * 23 / 24))
    assert not mi.union_small_enough(500)
