"""Seeded random instances used by the test suites, benchmarks and CLI."""
import numpy as np

from .arcs import ConnectorFamily, enumerate_family
from .space import DiscreteSpace


def random_connected_graph(rng, n, n_edges=None, weight=(0.5, 2.0), mass=(0.5, 2.0)):
    """Random spanning tree plus extra edges; graph-type space.

    Parameters
    ----------
    rng : numpy.random.Generator
    n : int
        Number of nodes.
    n_edges : int, optional
        Total edge count, clipped to ``[n - 1, n (n - 1) / 2]``.  Defaults to
        a random count in ``[n - 1, min(2n, 20)]``.
    """
    max_e = n * (n - 1) // 2
    if n_edges is None:
        n_edges = int(rng.integers(n - 1, max(n, min(2 * n, 20, max_e)) + 1))
    n_edges = int(np.clip(n_edges, n - 1, max_e))
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(0, k)])
        edges.add((min(a, b), max(a, b)))
    rest = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
    rng.shuffle(rest)
    edges.update(rest[: n_edges - len(edges)])
    triples = [(i, j, float(rng.uniform(*weight))) for i, j in sorted(edges)]
    return DiscreteSpace.from_edges(triples, rng.uniform(*mass, size=n))


def connector_instance(rng, space, max_paths=200):
    """Connector between two distinct random nodes with at most ``max_paths`` paths."""
    n = space.n
    s, t = (int(v) for v in rng.choice(n, size=2, replace=False))
    for k in range(min(n - 1, 12), 0, -1):
        fam = ConnectorFamily([s], [t], k)
        arcs = enumerate_family(fam, space, limit=10 * max_paths)
        if 0 < len(arcs) <= max_paths:
            return fam
    return ConnectorFamily([s], [t], 1)


def interval_path(N, f=None):
    """Path graph with ``N`` equal edges on ``[0, 1]`` and trapezoid measure.

    End nodes carry mass ``h/2`` and interior nodes ``h``, so node sums are
    the trapezoid rule for ``∫_0^1``.
    """
    h = 1.0 / N
    m = np.full(N + 1, h)
    m[[0, -1]] = h / 2
    space = DiscreteSpace.from_edges([(i, i + 1, h) for i in range(N)], m)
    x = np.linspace(0.0, 1.0, N + 1)
    return space, x


def zero_mean(rng, space):
    h = rng.normal(size=space.n)
    return h - (space.measure @ h) / space.mass
