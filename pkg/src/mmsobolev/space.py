"""Finite metric-measure spaces and monotone semidistance families."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels

TRIANGLE_EXACT_LIMIT = 500
TRIANGLE_SAMPLES = 100_000


class SpaceError(ValueError):
    """Malformed space input; ``pointer`` locates the offending entry."""

    def __init__(self, message, pointer=None):
        super().__init__(message)
        self.pointer = pointer


class NonAscendingThresholds(ValueError):
    pass


@dataclass(frozen=True)
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self):
        return not self.violations

    def to_dict(self):
        return {"valid": self.valid, "violations": self.violations}


@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    """Finite node set with an extended distance and a positive measure.

    Parameters
    ----------
    nodes : tuple
        Node identifiers, in index order.
    dist : ndarray, shape (n, n)
        Extended distance; ``np.inf`` means the pair is infinitely separated.
    measure : ndarray, shape (n,)
        Strictly positive node masses.
    adjacency : ndarray of bool, shape (n, n)
        Edges along which arcs may step.  For matrix-type input every finite
        off-diagonal pair is an edge; for graph-type input only the listed
        edges are, while ``dist`` is their shortest-path metric.
    """

    nodes: tuple
    dist: np.ndarray
    measure: np.ndarray
    adjacency: np.ndarray

    def __post_init__(self):
        dist = np.array(self.dist, dtype=float)
        measure = np.array(self.measure, dtype=float)
        n = len(self.nodes)
        if dist.shape != (n, n):
            raise SpaceError(f"dist has shape {dist.shape}, expected {(n, n)}", "/metric")
        if measure.shape != (n,):
            raise SpaceError(f"measure has {measure.size} entries, expected {n}", "/measure")
        bad = np.flatnonzero(~(measure > 0) | ~np.isfinite(measure))
        if bad.size:
            raise SpaceError(f"measure must be finite and > 0 (node {self.nodes[bad[0]]!r})",
                             f"/measure/{bad[0]}")
        if np.any(np.isnan(dist)) or np.any(dist < 0):
            raise SpaceError("dist entries must be nonnegative", "/metric")
        adjacency = np.array(self.adjacency, dtype=bool)
        np.fill_diagonal(adjacency, False)
        adjacency &= np.isfinite(dist)
        for name, arr in (("dist", dist), ("measure", measure), ("adjacency", adjacency)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "nodes", tuple(self.nodes))

    # -- construction ---------------------------------------------------------
    @classmethod
    def from_dist(cls, dist, measure=None, nodes=None):
        """Matrix-type space: every finite off-diagonal pair is an edge."""
        dist = np.asarray(dist, dtype=float)
        n = dist.shape[0]
        nodes = tuple(range(n)) if nodes is None else tuple(nodes)
        measure = np.ones(n) if measure is None else measure
        adjacency = np.isfinite(dist) & ~np.eye(n, dtype=bool)
        return cls(nodes, dist, measure, adjacency)

    @classmethod
    def from_edges(cls, edges, measure, nodes=None):
        """Graph-type space: ``dist`` is the shortest-path metric of ``edges``.

        ``edges`` holds ``(i, j, w)`` index triples.  Repeated edges keep the
        smallest weight.
        """
        measure = np.asarray(measure, dtype=float)
        n = measure.size
        nodes = tuple(range(n)) if nodes is None else tuple(nodes)
        W = np.full((n, n), np.inf)
        for k, (i, j, w) in enumerate(edges):
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise SpaceError(f"edge {k} has invalid endpoints", f"/metric/edges/{k}")
            if not (w > 0 and np.isfinite(w)):
                raise SpaceError(f"edge {k} weight must be finite and > 0", f"/metric/edges/{k}")
            W[i, j] = W[j, i] = min(W[i, j], w)
        np.fill_diagonal(W, 0.0)
        dist = _kernels.floyd_warshall(W)
        adjacency = np.isfinite(W) & ~np.eye(n, dtype=bool)
        return cls(nodes, dist, measure, adjacency)

    @classmethod
    def from_json(cls, obj):
        """Parse the JSON space format (see the README)."""
        if not isinstance(obj, dict):
            raise SpaceError("space must be a JSON object", "")
        for key in ("nodes", "metric", "measure"):
            if key not in obj:
                raise SpaceError(f"missing key {key!r}", f"/{key}")
        nodes = obj["nodes"]
        if not isinstance(nodes, list) or not nodes:
            raise SpaceError("nodes must be a nonempty list", "/nodes")
        if len(set(map(_hashable, nodes))) != len(nodes):
            raise SpaceError("duplicate node identifiers", "/nodes")
        index = {_hashable(v): k for k, v in enumerate(nodes)}
        n = len(nodes)
        measure = obj["measure"]
        if not isinstance(measure, list) or len(measure) != n:
            raise SpaceError(f"measure must be a list of {n} numbers", "/measure")
        try:
            measure = np.array(measure, dtype=float)
        except (TypeError, ValueError):
            raise SpaceError("measure entries must be numbers", "/measure") from None
        metric = obj["metric"]
        if not isinstance(metric, dict) or metric.get("type") not in ("matrix", "graph"):
            raise SpaceError('metric.type must be "matrix" or "graph"', "/metric/type")
        key = "entries" if metric["type"] == "matrix" else "edges"
        triples = []
        for k, entry in enumerate(metric.get(key, [])):
            where = f"/metric/{key}/{k}"
            if not isinstance(entry, list) or len(entry) != 3:
                raise SpaceError("expected [i, j, d]", where)
            i, j, d = entry
            if _hashable(i) not in index or _hashable(j) not in index:
                raise SpaceError("unknown node identifier", where)
            try:
                d = float(d)
            except (TypeError, ValueError):
                raise SpaceError("distance must be a number", where) from None
            triples.append((index[_hashable(i)], index[_hashable(j)], d, where))
        if metric["type"] == "graph":
            return cls.from_edges([t[:3] for t in triples], measure, nodes)
        dist = np.full((n, n), np.inf)
        np.fill_diagonal(dist, 0.0)
        given = {}
        for i, j, d, where in triples:
            if np.isnan(d) or d < 0:
                raise SpaceError("distance must be nonnegative", where)
            given[(i, j)] = d
        for (i, j), d in given.items():
            dist[i, j] = d
            if (j, i) not in given:
                dist[j, i] = d
        return cls.from_dist(dist, measure, nodes)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpaceError(f"invalid JSON: {exc}", f"line {exc.lineno}") from None
        return cls.from_json(obj)

    def to_json(self):
        entries = [[_plain(self.nodes[i]), _plain(self.nodes[j]), float(self.dist[i, j])]
                   for i in range(self.n) for j in range(i + 1, self.n)
                   if np.isfinite(self.dist[i, j])]
        return {"nodes": [_plain(v) for v in self.nodes],
                "metric": {"type": "matrix", "entries": entries},
                "measure": self.measure.tolist()}

    # -- derived data ---------------------------------------------------------
    @property
    def n(self):
        return len(self.nodes)

    @property
    def mass(self):
        return float(self.measure.sum())

    @property
    def edge_weights(self):
        """Distance on adjacent pairs, ``inf`` elsewhere (diagonal included)."""
        return np.where(self.adjacency, self.dist, np.inf)

    def edges(self):
        """Undirected adjacency as a sorted list of ``(i, j)`` with ``i < j``."""
        i, j = np.nonzero(np.triu(self.adjacency | self.adjacency.T, 1))
        return list(zip(i.tolist(), j.tolist()))

    def csr(self):
        """Adjacency in CSR form with ascending neighbour lists."""
        rows, cols = np.nonzero(self.adjacency)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return np.cumsum(indptr), cols.astype(np.int64)

    def index_of(self, node):
        try:
            return self.nodes.index(node)
        except ValueError:
            raise SpaceError(f"unknown node {node!r}") from None

    def with_measure(self, measure):
        return DiscreteSpace(self.nodes, self.dist, measure, self.adjacency)

    def with_dist(self, dist):
        return DiscreteSpace(self.nodes, dist, self.measure, self.adjacency)

    def validate(self):
        return validate(self)


def _hashable(v):
    return tuple(v) if isinstance(v, list) else v


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def validate(space, rng=None):
    """Report symmetry, positivity and triangle violations of ``space.dist``.

    Every violation is a dict with a ``kind`` and the offending indices.
    Triangle checks are exhaustive up to 500 nodes and sampled above.
    """
    D = space.dist
    n = space.n
    out = []
    for i in range(n):
        if D[i, i] != 0:
            out.append({"kind": "diagonal", "indices": [i], "value": float(D[i, i])})
    iu, ju = np.nonzero(np.triu(D != D.T, 1))
    for i, j in zip(iu.tolist(), ju.tolist()):
        out.append({"kind": "symmetry", "indices": [i, j],
                    "values": [float(D[i, j]), float(D[j, i])]})
    off = ~np.eye(n, dtype=bool)
    ip, jp = np.nonzero(off & (D <= 0))
    for i, j in zip(ip.tolist(), jp.tolist()):
        if i < j or D[j, i] > 0:
            out.append({"kind": "positivity", "indices": [i, j]})
    tol = 1e-12
    if n <= TRIANGLE_EXACT_LIMIT:
        for b in range(n):
            via = D[:, b, None] + D[None, b, :]
            bad_a, bad_c = np.nonzero(D > via * (1 + tol) + tol)
            for a, c in zip(bad_a.tolist(), bad_c.tolist()):
                if a < c and a != b and c != b:
                    out.append({"kind": "triangle", "indices": [a, b, c],
                                "excess": float(D[a, c] - via[a, c])})
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        t = rng.integers(0, n, size=(TRIANGLE_SAMPLES, 3))
        a, b, c = t.T
        via = D[a, b] + D[b, c]
        bad = np.flatnonzero(D[a, c] > via * (1 + tol) + tol)
        seen = set()
        for k in bad.tolist():
            key = (int(a[k]), int(b[k]), int(c[k]))
            if key not in seen and len(set(key)) == 3:
                seen.add(key)
                out.append({"kind": "triangle", "indices": list(key),
                            "excess": float(D[a[k], c[k]] - via[k])})
    out.sort(key=lambda v: ({"diagonal": 0, "symmetry": 1, "positivity": 2, "triangle": 3}[v["kind"]],
                            v["indices"]))
    return ValidationReport(out)


@dataclass(frozen=True, eq=False)
class SemidistanceFamily:
    """Nondecreasing sequence of finite semidistances below ``dist``."""

    members: tuple

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def check(self, dist=None, tol=0.0):
        """Return a list of human-readable invariant failures (empty if fine)."""
        problems = []
        for k, d in enumerate(self.members):
            if not np.all(np.isfinite(d)):
                problems.append(f"member {k} is not finite")
            if np.any(d != d.T):
                problems.append(f"member {k} is not symmetric")
            if np.any(np.diag(d) != 0):
                problems.append(f"member {k} has nonzero diagonal")
            via = (d[:, :, None] + d[None, :, :]).min(axis=1)
            if np.any(d > via + tol):
                problems.append(f"member {k} violates the triangle inequality")
            if k and np.any(self.members[k - 1] > d + tol):
                problems.append(f"members {k - 1},{k} not monotone")
        if dist is not None and self.members:
            fin = np.isfinite(dist)
            if np.any(self.members[-1][fin] > dist[fin] + tol):
                problems.append("top member exceeds dist")
            if np.any(np.abs(self.members[-1][fin] - dist[fin]) > tol):
                problems.append("top member differs from dist on finite entries")
        return problems


def truncated_family(space, thresholds):
    """Canonical monotone family ``d_i = min(dist, thresholds[i])``.

    Raises
    ------
    NonAscendingThresholds
        If thresholds are not strictly ascending and positive, or the last one
        is below the largest finite distance.
    """
    th = np.asarray(thresholds, dtype=float).ravel()
    if th.size == 0 or np.any(th <= 0) or np.any(np.diff(th) <= 0):
        raise NonAscendingThresholds("thresholds must be positive and strictly ascending")
    D = space.dist if isinstance(space, DiscreteSpace) else np.asarray(space, dtype=float)
    finite = D[np.isfinite(D)]
    top = finite.max() if finite.size else 0.0
    if th[-1] < top:
        raise NonAscendingThresholds(f"last threshold {th[-1]} is below max finite distance {top}")
    members = []
    for t in th:
        d = np.minimum(D, t)
        d.setflags(write=False)
        members.append(d)
    return SemidistanceFamily(tuple(members))


def load_space(path):
    return DiscreteSpace.load(Path(path))
