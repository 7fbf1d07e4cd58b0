import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmsobolev.generators import random_connected_graph
from mmsobolev.space import (DiscreteSpace, NonAscendingThresholds, SpaceError, load_space,
                             truncated_family, validate)


def matrix_space(entries, nodes, measure=None):
    measure = measure or [1.0] * len(nodes)
    return DiscreteSpace.from_json({"nodes": nodes, "metric": {"type": "matrix", "entries": entries},
                                    "measure": measure})


def test_two_node_valid(two_node):
    rep = validate(two_node)
    assert rep.valid and rep.violations == []


def test_symmetry_violation():
    sp = matrix_space([["x", "y", 1], ["y", "x", 2]], ["x", "y"])
    kinds = [(v["kind"], v["indices"]) for v in validate(sp).violations]
    assert ("symmetry", [0, 1]) in kinds


def test_triangle_violation():
    sp = matrix_space([["a", "c", 5], ["a", "b", 1], ["b", "c", 1]], ["a", "b", "c"])
    tri = [v for v in validate(sp).violations if v["kind"] == "triangle"]
    assert [v["indices"] for v in tri] == [[0, 1, 2]]
    assert tri[0]["excess"] == pytest.approx(3.0)


def test_missing_pair_is_infinite():
    sp = matrix_space([["a", "b", 1]], ["a", "b", "c"])
    assert np.isinf(sp.dist[0, 2]) and validate(sp).valid


def test_graph_type_shortest_path_metric(path3):
    assert path3.dist[0, 2] == 2.0
    assert not path3.adjacency[0, 2]


@pytest.mark.parametrize("obj, pointer", [
    ({"nodes": ["a"], "metric": {"type": "matrix", "entries": []}}, "/measure"),
    ({"nodes": ["a", "b"], "metric": {"type": "cube"}, "measure": [1, 1]}, "/metric/type"),
    ({"nodes": ["a", "b"], "metric": {"type": "matrix", "entries": [["a", "z", 1]]}, "measure": [1, 1]},
     "/metric/entries/0"),
    ({"nodes": ["a", "b"], "metric": {"type": "matrix", "entries": [["a", "b", -1]]}, "measure": [1, 1]},
     "/metric/entries/0"),
    ({"nodes": ["a", "b"], "metric": {"type": "graph", "edges": [["a", "b", 0]]}, "measure": [1, 1]},
     "/metric/edges/0"),
    ({"nodes": ["a", "b"], "metric": {"type": "matrix", "entries": []}, "measure": [1, 0]}, "/measure/1"),
    ({"nodes": ["a", "a"], "metric": {"type": "matrix", "entries": []}, "measure": [1, 1]}, "/nodes"),
])
def test_malformed_input_points_at_entry(obj, pointer):
    with pytest.raises(SpaceError) as exc:
        DiscreteSpace.from_json(obj)
    assert exc.value.pointer == pointer


def test_json_round_trip(tmp_path, rng):
    sp = random_connected_graph(rng, 6)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(sp.to_json()))
    back = load_space(path)
    assert np.array_equal(back.dist, sp.dist) and np.array_equal(back.measure, sp.measure)


def test_truncated_examples():
    sp = DiscreteSpace.from_dist([[0, 3], [3, 0]])
    fam = truncated_family(sp, [1, 2, 3])
    assert [d[0, 1] for d in fam.members] == [1, 2, 3]
    inf = matrix_space([], ["x", "y"])
    fam = truncated_family(inf, [1, 2])
    assert [d[0, 1] for d in fam.members] == [1, 2]
    single = truncated_family(sp, [3])
    assert len(single) == 1 and np.array_equal(single[0], sp.dist)


@pytest.mark.parametrize("th", [[2, 1], [0, 3], [1, 2]])
def test_truncated_rejects_bad_thresholds(th):
    sp = DiscreteSpace.from_dist([[0, 3], [3, 0]])
    with pytest.raises(NonAscendingThresholds):
        truncated_family(sp, th)


@given(seed=st.integers(0, 10 ** 6), n=st.integers(2, 20), k=st.integers(1, 6))
def test_truncated_family_invariants(seed, n, k):
    rng = np.random.default_rng(seed)
    sp = random_connected_graph(rng, n)
    top = sp.dist[np.isfinite(sp.dist)].max()
    th = np.sort(rng.uniform(0.01, 1.0, k)) * top
    th = np.unique(np.append(th, top))
    fam = truncated_family(sp, th)
    assert fam.check(sp.dist, tol=1e-12 * top) == []
    for a, b in zip(fam.members[:-1], fam.members[1:]):
        assert np.all(a <= b)


def test_large_space_samples_triangles():
    n = 520
    D = np.ones((n, n)) - np.eye(n)
    even = np.arange(0, n, 2)
    D[np.ix_(even, even)] = 3.0
    np.fill_diagonal(D, 0.0)
    sp = DiscreteSpace.from_dist(D)
    rep = validate(sp, np.random.default_rng(1))
    assert not rep.valid
    for v in rep.violations:
        a, b, c = v["indices"]
        assert v["kind"] == "triangle" and D[a, c] > D[a, b] + D[b, c]
