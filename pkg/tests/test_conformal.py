import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmsobolev.conformal import (chain_distance, conformal_distance, dual_lipschitz_distance,
                                 length_distance, refinement_gaps, sandwich_residual)
from mmsobolev.generators import random_connected_graph


def test_two_node_examples(two_node):
    g = np.array([1.0, 3.0])
    assert conformal_distance(two_node, g)[0, 1] == 2.0
    assert dual_lipschitz_distance(two_node, g)[0, 1] == 1.0
    assert chain_distance(two_node, g)[0, 1] == 3.0
    assert np.array_equal(conformal_distance(two_node, np.ones(2)), length_distance(two_node))


def test_rejects_nonpositive_weight(two_node):
    for g in ([0.0, 1.0], [-1.0, 1.0], [np.inf, 1.0], [1.0]):
        with pytest.raises(ValueError):
            conformal_distance(two_node, g)


def test_path_against_hand_values(path3):
    g = np.array([1.0, 2.0, 0.5])
    assert conformal_distance(path3, g)[0, 2] == pytest.approx(1.5 + 1.25)
    assert dual_lipschitz_distance(path3, g)[0, 2] == pytest.approx(1.5)
    assert chain_distance(path3, g)[0, 2] == pytest.approx(4.0)


def test_chain_threshold_and_cap(path3):
    g = np.ones(3)
    # no step below eps: capped at max g * max finite distance
    assert chain_distance(path3, g, eps=0.5)[0, 2] == pytest.approx(2.0)
    assert chain_distance(path3, g, eps=1.5)[0, 2] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        chain_distance(path3, g, eps=0.0)


def brute_force_chain(space, g):
    """Best simple path by exhaustive search with max-weights on each step."""
    n = space.n
    best = np.full((n, n), np.inf)
    np.fill_diagonal(best, 0.0)

    def walk(path, cost):
        x = path[-1]
        best[path[0], x] = min(best[path[0], x], cost)
        for y in np.flatnonzero(space.adjacency[x]):
            if y not in path:
                walk(path + [y], cost + space.dist[x, y] * max(g[x], g[y]))
    for s in range(n):
        walk([s], 0.0)
    return best


@given(seed=st.integers(0, 10 ** 6))
def test_sandwich_and_chain_oracle(seed):
    rng = np.random.default_rng(seed)
    sp = random_connected_graph(rng, int(rng.integers(2, 7)))
    g = rng.uniform(0.2, 3.0, sp.n)
    assert sandwich_residual(sp, g) == 0.0
    fin = sp.dist[np.isfinite(sp.dist)].max() * g.max()
    want = np.minimum(brute_force_chain(sp, g), fin)
    np.fill_diagonal(want, 0.0)
    assert np.allclose(chain_distance(sp, g), want, rtol=1e-12)


@given(seed=st.integers(0, 10 ** 6), c=st.floats(0.1, 10))
def test_conformal_distance_is_metric_and_homogeneous(seed, c):
    rng = np.random.default_rng(seed)
    sp = random_connected_graph(rng, 7)
    g = rng.uniform(0.2, 3.0, sp.n)
    D = conformal_distance(sp, g)
    assert np.allclose(D, D.T)
    via = (D[:, :, None] + D[None, :, :]).min(axis=1)
    assert np.all(D <= via + 1e-12)
    assert np.allclose(conformal_distance(sp, c * g), c * D)


def test_refinement_gap_decays():
    rows = refinement_gaps(lambda x: 1 + x ** 2, [16, 64, 256, 1024])
    gaps = [r["gap"] for r in rows]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 2e-3
    assert rows[-1]["trapezoid"] == pytest.approx(4 / 3, abs=1e-6)
