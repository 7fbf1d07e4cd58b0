import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmsobolev.arcs import (Arc, ConnectorFamily, DegenerateWindow, ExplicitFamily, FamilyTooLarge,
                            arc_measure, concatenate, enumerate_family, family_from_json, is_member,
                            length, line_integral, normalize, restrict)
from mmsobolev.generators import random_connected_graph
from mmsobolev.space import DiscreteSpace

from .helpers import use_backend


def test_lengths(two_node, path3):
    assert length(Arc.on(two_node, [0])) == 0
    assert length(Arc.on(two_node, [0, 1])) == 1
    assert length(Arc.on(path3, [0, 1, 2])) == 2


def test_line_integral_examples(path3):
    arc = Arc.on(path3, [0, 1, 2])
    assert line_integral(np.ones(3), arc) == arc.length
    assert line_integral([1, 2, 1], arc) == 3.0
    assert np.dot(arc_measure(arc, 3), [1, 2, 1]) == 3.0
    assert line_integral([5, 1, 2], Arc.on(path3, [1])) == 0.0


def test_normalize(two_node):
    assert normalize(Arc.on(two_node, [0, 0, 1])).nodes == (0, 1)
    assert normalize(Arc.on(two_node, [0, 0, 1, 1])) == normalize(Arc.on(two_node, [0, 1]))
    a = Arc.on(two_node, [0, 1])
    assert normalize(a) == a
    assert normalize(Arc.on(two_node, [1, 0])).nodes == (0, 1)


def test_restrict(path3):
    arc = Arc.on(path3, [0, 1, 2])
    assert restrict(arc, 0, 1) == arc
    assert restrict(arc, 0, 0.5).nodes == (0, 1)
    assert restrict(arc, 0.5, 1).nodes == (1, 2)
    with pytest.raises(DegenerateWindow):
        restrict(arc, 0.4, 0.6)


def test_enumeration_examples(two_node, path3):
    tri = DiscreteSpace.from_edges([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], [1, 1, 1])
    assert [a.nodes for a in enumerate_family(ConnectorFamily([0], [1], 1), two_node)] == [(0, 1)]
    assert [a.nodes for a in enumerate_family(ConnectorFamily([0], [2], 2), path3)] == [(0, 1, 2)]
    assert [a.nodes for a in enumerate_family(ConnectorFamily([0], [1], 2), tri)] == [(0, 1), (0, 2, 1)]


def brute_paths(space, S, T, k):
    """Every simple path by permutations (independent of the DFS kernel)."""
    out = []
    n = space.n
    for length_ in range(0, k + 1):
        for seq in itertools.permutations(range(n), length_ + 1):
            if seq[0] in S and seq[-1] in T and all(space.adjacency[a, b] for a, b in zip(seq, seq[1:])):
                out.append(seq)
    return sorted(out)


@pytest.mark.parametrize("which", ["numba", "numpy"])
@given(seed=st.integers(0, 10 ** 6))
def test_enumeration_matches_permutation_oracle(which, seed):
    with use_backend(which):
        _enumeration_case(seed)


def _enumeration_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    sp = random_connected_graph(rng, n)
    S = set(rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist())
    T = set(rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist())
    k = int(rng.integers(1, n))
    fam = ConnectorFamily(S, T, k)
    got = [a.nodes for a in enumerate_family(fam, sp)]
    want = brute_paths(sp, S, T, k)
    # enumeration dedups by normal form, keeping the lexicographically first orientation
    seen, expect = set(), []
    for w in want:
        key = normalize(Arc.on(sp, w)).nodes
        if key not in seen:
            seen.add(key)
            expect.append(w)
    assert got == expect


def test_family_too_large():
    n = 12
    edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)]
    sp = DiscreteSpace.from_edges(edges, np.ones(n))
    with pytest.raises(FamilyTooLarge):
        enumerate_family(ConnectorFamily([0], [1], 11), sp, limit=1000)
    with pytest.raises(FamilyTooLarge):
        enumerate_family(ConnectorFamily([0], [1], 13), sp)


@given(seed=st.integers(0, 10 ** 6))
def test_arc_measure_properties(seed):
    rng = np.random.default_rng(seed)
    sp = random_connected_graph(rng, 6)
    walk = [int(rng.integers(6))]
    for _ in range(int(rng.integers(0, 6))):
        walk.append(int(rng.choice(np.flatnonzero(sp.adjacency[walk[-1]]))))
    arc = Arc.on(sp, walk)
    assert arc_measure(arc, 6).sum() == pytest.approx(arc.length, abs=1e-12)
    f, g = rng.normal(size=(2, 6))
    a, b = rng.normal(size=2)
    assert line_integral(a * f + b * g, arc) == pytest.approx(
        a * line_integral(f, arc) + b * line_integral(g, arc), abs=1e-10)
    V = arc.variation()
    assert V[0] == 0 and np.all(np.diff(V) >= 0) and V[-1] == pytest.approx(arc.length)
    if len(walk) > 2:
        u = V[1] / V[-1]
        if 0 < u < 1:
            left, right = restrict(arc, 0, u), restrict(arc, u, 1)
            assert concatenate(left, right).nodes == arc.nodes
            assert line_integral(f, left) + line_integral(f, right) == pytest.approx(
                line_integral(f, arc), abs=1e-10)


def test_family_json(path3):
    fam = family_from_json({"kind": "explicit", "paths": [[0, 1, 2], [1]]}, path3)
    assert isinstance(fam, ExplicitFamily) and fam.arcs[0].nodes == (0, 1, 2)
    con = family_from_json({"kind": "connector", "source": [0], "target": [2], "maxEdges": 2}, path3)
    assert is_member(Arc.on(path3, [0, 1, 2]), con)
    assert not is_member(Arc.on(path3, [0, 1]), con)
