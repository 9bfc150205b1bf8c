import math

import numpy as np
import pytest

from labelprop.generators import (PlantedSpec, _decode_pairs, block_model, erdos_renyi, grid_crossing_edges,
                                  karate_club, nested_planted_partition, overlapping_cliques,
                                  planted_partition, split_grid, triangular_grid)
from labelprop.graph import GraphError, connected_components
from labelprop.objectives import cut_weight


def external_fraction(g, truth):
    return cut_weight(g, truth) / g.m


def test_er_edge_cases():
    assert erdos_renyi(10, 0, seed=1).m == 0
    g = erdos_renyi(2, 1, seed=1)
    assert g.m == 1 and g.weight(0, 1) == 1
    with pytest.raises(GraphError):
        erdos_renyi(10, 10, seed=1)


def test_er_mean_degree():
    means = [erdos_renyi(10_000, 10, seed=s).degree.mean() for s in range(10)]
    assert abs(np.mean(means) - 10) / 10 < 0.05


def test_er_edge_count_within_three_sigma():
    n, k = 2000, 6
    pairs = n * (n - 1) / 2
    p = k / (n - 1)
    sigma = math.sqrt(pairs * p * (1 - p))
    for s in range(5):
        g = erdos_renyi(n, k, seed=s)
        assert abs(g.m - pairs * p) <= 3 * sigma
        assert g.loops.sum() == 0 and g.weights.max() == 1


def test_same_seed_same_graph():
    a = planted_partition(n=128, q=4, avg_degree=16, mu=0.3, seed=9)[0]
    b = planted_partition(n=128, q=4, avg_degree=16, mu=0.3, seed=9)[0]
    assert np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
    c = erdos_renyi(500, 4, seed=3)
    d = erdos_renyi(500, 4, seed=3)
    assert np.array_equal(c.indices, d.indices)


def test_pair_decoding_is_bijective():
    s = 40
    i, j = _decode_pairs(np.arange(s * (s - 1) // 2))
    assert np.all(i < j) and len(set(zip(i.tolist(), j.tolist()))) == s * (s - 1) // 2


def test_planted_mu_zero_is_disconnected_blocks():
    g, truth = planted_partition(n=128, q=4, avg_degree=16, mu=0.0, seed=1)
    assert cut_weight(g, truth) == 0
    assert connected_components(g).n_groups >= 4


def test_planted_external_fraction():
    fr = [external_fraction(*planted_partition(n=128, q=4, avg_degree=16, mu=0.1, seed=s)) for s in range(10)]
    assert abs(np.mean(fr) - 0.1) < 0.03


def test_planted_external_fraction_large():
    fr = [external_fraction(*planted_partition(n=1024, q=4, avg_degree=16, mu=0.3, seed=s)) for s in range(10)]
    assert abs(np.mean(fr) - 0.3) < 0.02


def test_planted_mu_one_has_no_internal_edges():
    fr = [external_fraction(*planted_partition(n=128, q=4, avg_degree=16, mu=1.0, seed=s)) for s in range(5)]
    assert 1 - np.mean(fr) < 0.02


def test_planted_mean_degree():
    ks = [planted_partition(n=1024, q=8, avg_degree=12, mu=0.2, seed=s)[0].degree.mean() for s in range(5)]
    assert abs(np.mean(ks) - 12) / 12 < 0.03


@pytest.mark.parametrize("kw", [dict(n=130, q=4, avg_degree=16, mu=0.1),
                                dict(n=128, q=4, avg_degree=16, mu=1.5),
                                dict(n=128, q=4, avg_degree=200, mu=0.1)])
def test_planted_invalid(kw):
    with pytest.raises(GraphError):
        planted_partition(PlantedSpec(**kw))


def test_planted_infeasible_probability():
    with pytest.raises(GraphError):
        planted_partition(n=16, q=4, avg_degree=8, mu=0.0, seed=0)  # p_in = 8/3


def test_block_model_sizes():
    g, blocks = block_model([3, 4], [[1.0, 0.0], [0.0, 1.0]], seed=0)
    assert g.m == 3 + 6 and blocks.n_groups == 2


def test_nested_truths():
    g, fine, coarse = nested_planted_partition(group_size=32, seed=0)
    assert g.n == 128 and fine.n_groups == 4 and coarse.n_groups == 2


def triangular_edge_count(r, c):
    return r * (c - 1) + (r - 1) * c + (r - 1) * (c - 1)


def test_grid_2x2_complete_lattice():
    g = triangular_grid(2, 2)
    u, v, _ = g.edges()
    assert list(zip(u.tolist(), v.tolist())) == [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]


@pytest.mark.parametrize("r,c", [(1, 1), (2, 5), (6, 12), (4, 3)])
def test_grid_edge_count(r, c):
    assert triangular_grid(r, c).m == triangular_edge_count(r, c)


def test_grid_removal_of_missing_edge():
    with pytest.raises(GraphError):
        triangular_grid(3, 3, [(0, 8)])


def test_grid_bridge_set_splits():
    g = triangular_grid(4, 6, grid_crossing_edges(4, 6, 2))
    assert connected_components(g).n_groups == 2


def test_split_grid_halves():
    g, halves = split_grid(6, 12)
    full = len(grid_crossing_edges(6, 12, 5))
    assert g.m == triangular_edge_count(6, 12) - 4
    assert cut_weight(g, halves) == full - 4
    assert halves.sizes() == {0: 36, 1: 36}


def test_overlapping_cliques():
    g, cover = overlapping_cliques(5, 1)
    assert g.n == 9 and g.degree[4] == 8
    assert cover.memberships(4) == [0, 1]
    g, cover = overlapping_cliques(3, 0)
    assert g.n == 6 and connected_components(g).n_groups == 2 and cover.is_partition()
    g, _ = overlapping_cliques(4, 2)
    assert g.n == 6 and g.degree[2] == 5 and g.degree[3] == 5
    with pytest.raises(GraphError):
        overlapping_cliques(3, 3)


def test_karate():
    g = karate_club()
    assert g.n == 34 and g.m == 78
    assert sorted(g.degree.tolist())[-2:] == [16, 17]
