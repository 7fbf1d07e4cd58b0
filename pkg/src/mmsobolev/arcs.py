"""Discrete arcs (node paths), their measures, and path families."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .space import DiscreteSpace, SpaceError

MAX_CONNECTOR_EDGES = 12
MAX_PATHS = 1_000_000


class FamilyTooLarge(ValueError):
    pass


class DegenerateWindow(ValueError):
    pass


@dataclass(frozen=True)
class Arc:
    """A finite node path ``(v_0, ..., v_k)`` with its edge lengths."""

    nodes: tuple
    edge_lengths: tuple

    @classmethod
    def on(cls, space, nodes):
        nodes = tuple(int(v) for v in nodes)
        if not nodes:
            raise ValueError("an arc needs at least one node")
        lengths = tuple(float(space.dist[a, b]) for a, b in zip(nodes[:-1], nodes[1:]))
        if not all(np.isfinite(lengths)):
            raise ValueError(f"arc {nodes} steps across an infinite distance")
        return cls(nodes, lengths)

    @property
    def length(self):
        return float(sum(self.edge_lengths))

    @property
    def start(self):
        return self.nodes[0]

    @property
    def end(self):
        return self.nodes[-1]

    @property
    def is_constant(self):
        return self.length == 0.0

    def variation(self):
        """Cumulative length ``V_γ`` at each breakpoint."""
        return np.concatenate([[0.0], np.cumsum(self.edge_lengths)])

    def __len__(self):
        return len(self.nodes)


def length(arc):
    return arc.length


def arc_measure(arc, n):
    """Node weights of ``ν_γ``: half of every edge length on each endpoint."""
    nu = np.zeros(n)
    for (a, b), d in zip(zip(arc.nodes[:-1], arc.nodes[1:]), arc.edge_lengths):
        nu[a] += d / 2
        nu[b] += d / 2
    return nu


def line_integral(f, arc):
    """Trapezoid integral ``Σ d(v_{j-1}, v_j) (f(v_{j-1}) + f(v_j)) / 2``."""
    f = np.asarray(f, dtype=float)
    v = np.asarray(arc.nodes)
    if v.size < 2:
        return 0.0
    return float(np.dot(arc.edge_lengths, (f[v[:-1]] + f[v[1:]]) / 2))


def normalize(arc):
    """Drop stationary steps and put the smaller endpoint first."""
    keep = [0] + [k for k in range(1, len(arc.nodes)) if arc.nodes[k] != arc.nodes[k - 1]]
    nodes = tuple(arc.nodes[k] for k in keep)
    lengths = tuple(d for d, k in zip(arc.edge_lengths, range(1, len(arc.nodes)))
                    if arc.nodes[k] != arc.nodes[k - 1])
    if nodes[-1] < nodes[0] or (nodes[-1] == nodes[0] and nodes[::-1] < nodes):
        nodes, lengths = nodes[::-1], lengths[::-1]
    return Arc(nodes, lengths)


def concatenate(a, b):
    if a.end != b.start:
        raise ValueError("arcs do not join")
    return Arc(a.nodes + b.nodes[1:], a.edge_lengths + b.edge_lengths)


def restrict(arc, s, t):
    """Sub-arc between length fractions ``s < t``, snapped to breakpoints.

    Fractions snap to the nearest cumulative-length breakpoint (ties go to
    the earlier one).
    """
    if not 0 <= s < t <= 1:
        raise ValueError("need 0 <= s < t <= 1")
    V = arc.variation()
    total = V[-1]
    if total == 0:
        raise DegenerateWindow("constant arc has no proper window")
    i = int(np.argmin(np.abs(V - s * total)))
    j = int(np.argmin(np.abs(V - t * total)))
    if i >= j:
        raise DegenerateWindow(f"window ({s}, {t}) collapses to breakpoint {i}")
    return Arc(arc.nodes[i:j + 1], arc.edge_lengths[i:j])


# ------------------------------------------------------------------- families

@dataclass(frozen=True)
class ExplicitFamily:
    arcs: tuple

    kind = "explicit"


@dataclass(frozen=True)
class ConnectorFamily:
    """All simple paths from ``source`` to ``target`` with ``<= max_edges`` edges."""

    source: frozenset
    target: frozenset
    max_edges: int

    kind = "connector"

    def __init__(self, source, target, max_edges):
        object.__setattr__(self, "source", frozenset(int(v) for v in source))
        object.__setattr__(self, "target", frozenset(int(v) for v in target))
        object.__setattr__(self, "max_edges", int(max_edges))
        if self.max_edges < 0:
            raise ValueError("maxEdges must be nonnegative")


def explicit(space, paths):
    return ExplicitFamily(tuple(Arc.on(space, p) for p in paths))


def family_from_json(obj, space):
    """Parse the family JSON format, mapping node identifiers to indices."""
    if not isinstance(obj, dict) or obj.get("kind") not in ("explicit", "connector"):
        raise SpaceError('family.kind must be "explicit" or "connector"', "/kind")
    idx = {(_key(v)): k for k, v in enumerate(space.nodes)}

    def ids(seq, where):
        try:
            return [idx[_key(v)] for v in seq]
        except (KeyError, TypeError):
            raise SpaceError("unknown node identifier", where) from None

    if obj["kind"] == "explicit":
        paths = []
        for k, p in enumerate(obj.get("paths", [])):
            try:
                paths.append(Arc.on(space, ids(p, f"/paths/{k}")))
            except ValueError as exc:
                if isinstance(exc, SpaceError):
                    raise
                raise SpaceError(str(exc), f"/paths/{k}") from None
        return ExplicitFamily(tuple(paths))
    try:
        k = int(obj["maxEdges"])
    except (KeyError, TypeError, ValueError):
        raise SpaceError("connector needs integer maxEdges", "/maxEdges") from None
    return ConnectorFamily(ids(obj.get("source", []), "/source"),
                           ids(obj.get("target", []), "/target"), k)


def _key(v):
    return tuple(v) if isinstance(v, list) else v


def enumerate_family(family, space, limit=MAX_PATHS, max_edges_guard=MAX_CONNECTOR_EDGES):
    """List the arcs of a family in lexicographic node order.

    Duplicates (same normal form) are dropped, keeping the first occurrence.
    Connector paths keep their source-to-target orientation.
    """
    if isinstance(family, ExplicitFamily):
        arcs = list(family.arcs)
    else:
        if family.max_edges > max_edges_guard:
            raise FamilyTooLarge(f"maxEdges {family.max_edges} exceeds guard {max_edges_guard}")
        indptr, indices = space.csr()
        is_s = np.zeros(space.n, dtype=np.bool_)
        is_t = np.zeros(space.n, dtype=np.bool_)
        is_s[list(family.source)] = True
        is_t[list(family.target)] = True
        flat, offsets, count = _kernels.simple_paths(indptr, indices, is_s, is_t,
                                                     np.int64(family.max_edges), np.int64(limit))
        if count < 0:
            raise FamilyTooLarge(f"connector family has more than {limit} paths")
        arcs = [Arc.on(space, flat[offsets[k]:offsets[k + 1]]) for k in range(count)]
    seen = set()
    out = []
    for a in sorted(arcs, key=lambda a: a.nodes):
        key = normalize(a).nodes
        if key not in seen:
            seen.add(key)
            out.append(a)
    return out


# Public alias; ``enumerate`` would shadow the builtin inside the package.
enumerate_arcs = enumerate_family


def measure_matrix(arcs, n, tilde=False):
    """Rows ``ν_γ`` (plus endpoint diracs when ``tilde``) for a list of arcs."""
    A = np.zeros((len(arcs), n))
    for r, a in enumerate(arcs):
        A[r] = arc_measure(a, n)
        if tilde:
            A[r, a.start] += 1.0
            A[r, a.end] += 1.0
    return A


def is_member(arc, family):
    """Whether ``arc`` belongs to ``family`` (normal forms for explicit lists)."""
    if isinstance(family, ExplicitFamily):
        key = normalize(arc).nodes
        return any(normalize(a).nodes == key for a in family.arcs)
    return (arc.start in family.source and arc.end in family.target
            and len(arc.nodes) - 1 <= family.max_edges
            and len(set(arc.nodes)) == len(arc.nodes))


__all__ = ["Arc", "ExplicitFamily", "ConnectorFamily", "FamilyTooLarge", "DegenerateWindow",
           "length", "line_integral", "arc_measure", "normalize", "restrict", "concatenate",
           "enumerate_family", "enumerate_arcs", "explicit", "family_from_json",
           "measure_matrix", "is_member", "DiscreteSpace"]
