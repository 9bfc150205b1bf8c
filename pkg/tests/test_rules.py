import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from labelprop import _sweep_kernels as K
from labelprop.engine import _group_max, _scratch, check_equilibrium, compile_rule, run, RunConfig
from labelprop.graph import Partition, from_arrays
from labelprop.objectives import hamiltonian
from labelprop.rules import (Rule, RuleError, RuleState, apm_lambda, balanced_weight, defensive_pref_update,
                             eigenvector_prefs, probabilistic_sync_update, score_citation, score_cpm,
                             score_general_tau, score_modularity, score_neighborhood_strength,
                             score_preference, score_standard)

from conftest import complete, complete_bipartite, graph_and_labels, path, star


def kernel_scores(g, rule, labels, i, prefs=None, bal=None):
    """Score map the compiled kernel builds for node i."""
    plan = compile_rule(g, rule)
    pg, n = plan.graph, g.n
    lab = np.ascontiguousarray(labels, dtype=np.int64)
    size, kg, kin = np.zeros(n, np.int64), np.zeros(n), np.zeros(n)
    K.recompute_state(pg.indptr, pg.indices, pg.weights, plan.selfw, lab, plan.degree, size, kg, kin)
    p = plan.prefs if prefs is None else np.asarray(prefs, dtype=float)
    acc, acc2, mark, cands, _ = _scratch(n)
    nc = K._collect(i, pg.indptr, pg.indices, pg.weights, plan.selfw, lab, plan.kind, plan.lam, plan.mode, p,
                    _group_max(lab, p, n), np.ones(n) if bal is None else np.asarray(bal, float), size, kg,
                    plan.degree, acc, acc2, mark, cands, 1)
    return {int(c): float(acc[c]) for c in cands[:nc]}


def same_scores(a, b, tol=1e-9):
    keys = set(a) | set(b)
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol * max(1.0, abs(a.get(k, 0.0))) for k in keys)


def maxset(scores, tol=1e-10):
    best = max(scores.values())
    return {k for k, v in scores.items() if v >= best - tol * abs(best)}


def random_dag(rng, n, p):
    iu, iv = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    perm = rng.permutation(n)
    return from_arrays(n, perm[iu[keep]], perm[iv[keep]], directed=True)


# -- kernel agrees with reference scorers ---------------------------------------------


@given(graph_and_labels(weighted=True, loops=True), st.floats(0, 2))
def test_kernel_matches_reference_linear_rules(gl, lam):
    g, lab = gl
    st_ = RuleState.from_labels(g, lab)
    lam2 = lam / max(g.m, 1)
    prefs = np.linspace(0.1, 1.0, g.n)
    for i in range(g.n):
        assert same_scores(kernel_scores(g, Rule(), lab, i), score_standard(i, st_))
        assert same_scores(kernel_scores(g, Rule("cpm", lambda1=lam), lab, i), score_cpm(i, st_, lam))
        assert same_scores(kernel_scores(g, Rule("modularity", lambda2=lam2), lab, i),
                           score_modularity(i, st_, lam2))
        for mode in ("promote", "suppress"):
            rule = Rule("preference", prefs=prefs, pref_mode=mode)
            assert same_scores(kernel_scores(g, rule, lab, i), score_preference(i, st_, prefs, mode))


@given(graph_and_labels(weighted=True), st.sampled_from([0.0, 0.3, 0.7, 1.0]))
def test_kernel_matches_reference_two_hop_rules(gl, tau):
    g, lab = gl
    st_ = RuleState.from_labels(g, lab)
    for i in range(g.n):
        assert same_scores(kernel_scores(g, Rule("tau", tau=tau), lab, i), score_general_tau(i, st_, tau))
        assert same_scores(kernel_scores(g, Rule("neighborhood"), lab, i), score_neighborhood_strength(i, st_))


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("mode", ["cocitation", "bibcoupling"])
def test_kernel_matches_reference_citation(seed, mode):
    rng = np.random.default_rng(seed)
    g = random_dag(rng, 20, 0.15)
    lab = rng.integers(0, 5, g.n)
    st_ = RuleState.from_labels(g, lab)
    for i in range(g.n):
        assert same_scores(kernel_scores(g, Rule(mode), lab, i), score_citation(i, st_, mode))


@given(graph_and_labels(weighted=True))
def test_equilibrium_matches_reference(gl):
    g, lab = gl
    st_ = RuleState.from_labels(g, lab)
    lam = 0.5
    for rule, ref in [(Rule(), lambda i: score_standard(i, st_)),
                      (Rule("cpm", lambda1=lam), lambda i: score_cpm(i, st_, lam))]:
        expect = all(lab[i] in maxset({**{int(lab[i]): ref(i).get(int(lab[i]), 0.0)}, **ref(i)})
                     for i in range(g.n))
        assert check_equilibrium(g, rule, lab) == expect


# -- reductions and invariants -----------------------------------------------------------


@given(graph_and_labels(weighted=True))
def test_reduction_identities(gl):
    g, lab = gl
    base = [maxset(kernel_scores(g, Rule(), lab, i)) for i in range(g.n)]
    variants = [
        dict(rule=Rule("cpm", lambda1=0.0)),
        dict(rule=Rule("modularity", lambda2=0.0)),
        dict(rule=Rule("tau", tau=1.0)),
        dict(rule=Rule("preference", prefs=np.ones(g.n))),
        dict(rule=Rule("balanced", gamma=0.0), bal=balanced_weight(np.linspace(1 / g.n, 1, g.n), 0.0)),
    ]
    for v in variants:
        got = [maxset(kernel_scores(g, v["rule"], lab, i, bal=v.get("bal"))) for i in range(g.n)]
        assert got == base


@given(graph_and_labels(weighted=True, loops=True), st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)),
                                                               max_size=30))
def test_incremental_state_matches_recount(gl, moves):
    g, lab = gl
    state = RuleState.from_labels(g, lab)
    for i, new in moves:
        state.move(i % g.n, new % g.n)
        assert state.is_consistent(atol=0.0)


@given(graph_and_labels(weighted=True, loops=True), st.floats(-0.9, 5.0))
def test_apm_mapping_matches_cpm_energy(gl, lam3):
    g, lab = gl
    h1 = hamiltonian(g, lab, "cpm", apm_lambda(lam3))
    h3 = hamiltonian(g, lab, "apm", lam3)
    assert math.isclose(h1, h3 / (lam3 + 1), rel_tol=1e-9, abs_tol=1e-9)


@given(graph_and_labels(weighted=True))
def test_scores_are_finite(gl):
    g, lab = gl
    for rule in (Rule("cpm", lambda1=3.0), Rule("modularity"), Rule("tau", tau=0.0), Rule("neighborhood"),
                 Rule("degree")):
        for i in range(g.n):
            assert all(math.isfinite(v) for v in kernel_scores(g, rule, lab, i).values())


def test_weight_scaling_keeps_maxsets():
    rng = np.random.default_rng(3)
    g = from_arrays(12, *np.triu_indices(12, 1), rng.integers(1, 4, 66))
    lab = rng.integers(0, 4, 12)
    scaled = g.with_weights(g.weights * 7.5)
    for i in range(12):
        assert maxset(kernel_scores(g, Rule(), lab, i)) == maxset(kernel_scores(scaled, Rule(), lab, i))


# -- standard -----------------------------------------------------------------------------


def test_standard_examples():
    st_ = RuleState.from_labels(path(3), [0, 1, 2])
    assert score_standard(1, st_) == {0: 1.0, 2: 1.0}
    st_ = RuleState.from_labels(complete(3), [0, 0, 2])
    assert score_standard(2, st_) == {0: 2.0}


def test_loop_votes_for_own_label():
    g = from_arrays(2, [0, 0], [0, 1], [3, 1])
    assert score_standard(0, RuleState.from_labels(g, [0, 1])) == {0: 3.0, 1: 1.0}


# -- constrained scores -----------------------------------------------------------------


def test_cpm_star_center_stays_singleton():
    g = star(4)
    state = RuleState.from_labels(g, [0, 1, 1, 1, 1])
    assert score_cpm(0, state, 2.0) == {1: -4.0, 0: 0.0}
    assert maxset(kernel_scores(g, Rule("cpm", lambda1=2.0), [0, 1, 1, 1, 1], 0)) == {0}


def test_cpm_prefers_smaller_group():
    # node 0 sees one neighbor in each group; group 1 has 3 members, group 4 has 1
    g = from_arrays(6, [0, 0, 1, 1], [1, 4, 2, 3])
    lab = [0, 1, 1, 1, 4, 5]
    scores = score_cpm(0, RuleState.from_labels(g, lab), 0.5)
    assert scores[4] > scores[1]


def test_modularity_isolated_node_keeps_label():
    g = from_arrays(3, [0], [1])
    state = RuleState.from_labels(g, [0, 1, 2])
    assert score_modularity(2, state, 0.25) == {2: 0.0}
    res = run(g, Rule("modularity"), RunConfig(seed=0))
    assert res.labels[2] == 2


def test_apm_lambda_values():
    assert apm_lambda(0) == 0 and apm_lambda(1) == 0.5 and apm_lambda(3) == 0.75
    with pytest.raises(RuleError):
        apm_lambda(-1)


# -- preferences --------------------------------------------------------------------------


def test_preference_suppress_all_ones_is_zero():
    g = path(3)
    state = RuleState.from_labels(g, [0, 1, 2])
    assert score_preference(1, state, np.ones(3), "suppress") == {0: 0.0, 2: 0.0}
    res = run(g, Rule("preference", prefs=np.ones(3), pref_mode="suppress"), RunConfig(seed=0))
    assert res.iterations == 1 and res.partition.n_groups == 3


def test_degree_preference_breaks_tie_toward_hub():
    # node 0 sees hub 1 (degree 2) and leaf 2 (degree 1)
    g = from_arrays(4, [0, 0, 1], [1, 2, 3])
    lab = [0, 1, 2, 3]
    assert maxset(score_standard(0, RuleState.from_labels(g, lab))) == {1, 2}
    assert maxset(kernel_scores(g, Rule("degree"), lab, 0)) == {1}


def test_defensive_update_counts_in_group_neighbors():
    g = star(3)
    state = RuleState.from_labels(g, [0, 0, 0, 0])
    assert state.prefs.tolist() == [1, 1, 1, 1]
    assert defensive_pref_update(0, state) == 3.0


@given(graph_and_labels(weighted=True))
def test_defensive_fixed_point(gl):
    g, lab = gl
    state = RuleState.from_labels(g, lab)
    state.prefs = np.where(state.own_weight > 0, state.own_weight, 1.0)
    for i in range(g.n):
        if state.own_weight[i] > 0:
            assert math.isclose(defensive_pref_update(i, state), state.own_weight[i], rel_tol=1e-12)


def test_defensive_guard_returns_one_without_in_group_neighbors():
    state = RuleState.from_labels(path(3), [0, 1, 2])
    assert defensive_pref_update(1, state) == 1.0


def test_eigenvector_prefs_examples():
    p, ok = eigenvector_prefs(complete(3), [0, 0, 0])
    assert ok and np.allclose(p, 1.0)
    p, ok = eigenvector_prefs(star(3), [0, 0, 0, 0])
    assert ok and abs(p[0] - 1) < 1e-9 and np.allclose(p[1:], 1 / math.sqrt(3), atol=1e-9)
    p, _ = eigenvector_prefs(from_arrays(3, [0], [1]), [0, 0, 1])
    assert p[2] == 1.0


def test_eigenvector_star_matches_dense_eigendecomposition():
    a = star(5).adjacency().toarray()
    vals, vecs = np.linalg.eigh(a)
    v = np.abs(vecs[:, np.argmax(vals)])
    p, _ = eigenvector_prefs(star(5), np.zeros(6, np.int64))
    assert np.allclose(p, v / v.max(), atol=1e-9)


def test_balanced_weight():
    assert np.allclose(balanced_weight(np.linspace(0.1, 1, 10), 0.0), 0.5)
    assert balanced_weight(0.5, 1.0) == 0.5
    t = np.linspace(0.01, 1, 50)
    assert np.all(np.diff(balanced_weight(t, 10.0)) > 0)
    w = balanced_weight(t, 200.0)
    assert w[-1] > 1 - 1e-12 and w[0] < 1e-12


# -- probabilistic ---------------------------------------------------------------------------


def test_probabilistic_isolated_node():
    state = RuleState.from_labels(from_arrays(2, [], []), [0, 1])
    rng = np.random.default_rng(0)
    assert {probabilistic_sync_update(0, state, rng) for _ in range(50)} == {0}


def test_probabilistic_p3_is_uniform():
    state = RuleState.from_labels(path(3), [0, 2, 1])
    rng = np.random.default_rng(0)
    draws = np.array([probabilistic_sync_update(1, state, rng) for _ in range(30000)])
    assert np.allclose(np.bincount(draws, minlength=3) / draws.size, 1 / 3, atol=0.01)


def test_probabilistic_kernel_p3_is_uniform():
    g = path(3)
    got = [run(g, cfg=RunConfig(schedule="sync", probabilistic_sync=True, max_iters=1, seed=s),
               init_labels=[0, 2, 1]).labels[1] for s in range(3000)]
    assert np.allclose(np.bincount(got, minlength=3) / 3000, 1 / 3, atol=0.03)


def test_probabilistic_sync_breaks_oscillation():
    g = complete_bipartite(2, 2)
    single = 0
    for s in range(25):
        res = run(g, cfg=RunConfig(schedule="sync", probabilistic_sync=True, max_iters=100, seed=s),
                  init_labels=[0, 0, 1, 1])
        single += len(set(res.labels.tolist())) == 1
    assert single >= 24


# -- structural rules --------------------------------------------------------------------------


def test_neighborhood_examples():
    assert score_neighborhood_strength(0, RuleState.from_labels(complete(3), [0, 1, 2])) == {1: 2.0, 2: 2.0}
    assert score_neighborhood_strength(0, RuleState.from_labels(complete(4), [0, 1, 2, 3])) == {
        1: 3.0, 2: 3.0, 3: 3.0}
    st_ = RuleState.from_labels(star(4), [0, 1, 2, 3, 4])
    assert score_neighborhood_strength(0, st_) == score_standard(0, st_)


def test_tau_zero_p3_end():
    st_ = RuleState.from_labels(path(3), [0, 1, 2])
    assert score_general_tau(0, st_, 0.0) == {2: 1.0}
    assert kernel_scores(path(3), Rule("tau", tau=0.0), [0, 1, 2], 0) == {0: 0.0, 2: 1.0}


def test_tau_one_is_standard():
    st_ = RuleState.from_labels(star(3), [0, 1, 1, 2])
    assert score_general_tau(0, st_, 1.0) == score_standard(0, st_)


def hubs_sharing_leaves(leaves=4):
    u = [h for h in (0, 1) for _ in range(leaves)]
    v = [2 + j for _ in (0, 1) for j in range(leaves)]
    return from_arrays(2 + leaves, u, v)


def test_tau_zero_groups_disconnected_hubs():
    g = hubs_sharing_leaves()
    st_ = RuleState.from_labels(g, np.arange(6))
    assert score_general_tau(0, st_, 0.0)[1] == 4.0
    res = run(g, Rule("tau", tau=0.0), RunConfig(seed=0))
    assert res.labels[0] == res.labels[1]


def test_citation_definitions():
    g = from_arrays(3, [0, 1], [2, 2], directed=True)
    st_ = RuleState.from_labels(g, [0, 1, 2])
    assert score_citation(0, st_, "cocitation") == {1: 1.0}
    assert score_citation(0, st_, "bibcoupling") == {0: 0.0}
    g = from_arrays(3, [2, 2], [0, 1], directed=True)
    st_ = RuleState.from_labels(g, [0, 1, 2])
    assert score_citation(0, st_, "bibcoupling") == {1: 1.0}
    assert score_citation(0, st_, "cocitation") == {0: 0.0}


@pytest.mark.parametrize("seed", range(10))
def test_cocitation_equals_shared_target_projection(seed):
    rng = np.random.default_rng(100 + seed)
    g = random_dag(rng, 20, 0.2)
    lab = rng.integers(0, 6, 20)
    a = g.adjacency().toarray()
    shared = a @ a.T
    np.fill_diagonal(shared, 0)
    st_ = RuleState.from_labels(g, lab)
    for i in range(20):
        want = {}
        for j in np.flatnonzero(shared[i]):
            want[int(lab[j])] = want.get(int(lab[j]), 0.0) + shared[i, j]
        assert same_scores(score_citation(i, st_, "cocitation"), want or {int(lab[i]): 0.0})


def test_citation_needs_directed_graph():
    with pytest.raises(RuleError):
        score_citation(0, RuleState.from_labels(path(3)), "cocitation")
    with pytest.raises(RuleError):
        run(path(3), Rule("cocitation"))
    with pytest.raises(RuleError):
        run(from_arrays(2, [0], [1], directed=True), Rule())


@pytest.mark.parametrize("kw", [dict(kind="nope"), dict(kind="cpm", lambda1=-1), dict(kind="tau", tau=1.5),
                                dict(kind="apm", lambda3=-1), dict(kind="preference"),
                                dict(kind="eigenvector", pref_mode="both")])
def test_invalid_rules(kw):
    with pytest.raises(RuleError):
        Rule(**kw)


def test_offensive_prefers_border_votes():
    # node 0 sees the core of group 1 and the border of group 5
    g = from_arrays(7, [0, 0, 1, 1, 2, 4, 5], [1, 4, 2, 3, 3, 5, 6])
    lab = [0, 1, 1, 1, 5, 5, 6]
    prefs = np.array([1, 3, 2, 2, 0.5, 1, 1], float)
    scores = kernel_scores(g, Rule("offensive"), lab, 0, prefs=prefs)
    assert scores[1] == 0.0 and scores[5] == 0.5 and maxset(scores) == {5}


def test_partition_input_accepted():
    assert check_equilibrium(complete(3), None, Partition([4, 4, 4]))
