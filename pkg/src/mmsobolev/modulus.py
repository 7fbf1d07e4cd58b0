"""p-Modulus of path families by cutting planes.

The program ``min Σ m f^p  s.t.  ∫_γ f >= 1 (γ ∈ Γ)`` is solved on a growing
set of active arcs.  Each round solves the restricted problem with the barrier
method and asks a separation oracle for the arcs the current density violates
most.  For explicit families the oracle scans the list.  For connector families
it runs a hop-limited shortest path in the edge weights
``d(x,y) (f(x) + f(y)) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _barrier, _kernels
from ._barrier import NonConvergence
from .arcs import Arc, ConnectorFamily, ExplicitFamily, arc_measure, measure_matrix

INNER_TOL = 1e-9
VIOLATION_TOL = 1e-8
BATCH = 24
MAX_ROUNDS = 500


class UnboundedFamily(ValueError):
    pass


def check_p(p):
    p = float(p)
    if not 1 < p < np.inf:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    return p


@dataclass
class ModulusSolution:
    """Result of a modulus solve.

    ``value`` is the objective at a feasible density (an upper bound) and
    ``lower`` a Lagrangian dual bound, so ``gap`` is a certified relative gap.
    ``multipliers`` are the dual weights on ``active`` arcs.
    """

    value: float
    density: np.ndarray | None
    iterations: int = 0
    gap: float = 0.0
    lower: float = 0.0
    active: list = field(default_factory=list)
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_json(self, space):
        return {
            "value": _num(self.value),
            "density": None if self.density is None else self.density.tolist(),
            "gap": self.gap,
            "activePaths": [[_plain(space.nodes[v]) for v in a.nodes] for a, lam
                            in zip(self.active, self.multipliers) if lam > 0],
        }


def _num(x):
    return x if np.isfinite(x) else "inf"


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def dual_bound(A, b, m, p, lam):
    """Lagrangian lower bound ``λ·b + Σ_j min_{z>=0} m_j z^p - (Aᵀλ)_j z``."""
    cvec = A.T @ lam
    z = np.where(cvec > 0, (np.maximum(cvec, 0) / (p * m)) ** (1 / (p - 1)), 0.0)
    return float(lam @ b - np.sum(cvec * z) / (p / (p - 1)))


def density_from_multipliers(A, lam, m, p):
    """Primal density ``((Aᵀλ)_+ / (p m))^{1/(p-1)}`` minimising the Lagrangian."""
    c = np.maximum(A.T @ lam, 0.0)
    return (c / (p * m)) ** (1 / (p - 1))


def newton_polish(A, b, m, p, lam, rel=1e-7, iters=40):
    """Dual Newton ascent on the rows whose barrier multipliers are clearly positive.

    Barrier multipliers ``1/(t s)`` inherit the cancellation error of tiny
    slacks and the primal density is only accurate to the square root of the
    objective gap in flat directions.  On the identified active set the
    optimality system ``A_J f(λ) = b_J`` is smooth in ``λ`` and Newton
    converges quadratically.  Returns ``None`` when the polish leaves the
    nonnegative orthant (active set misidentified).
    """
    if lam.size == 0 or lam.max() <= 0:
        return None
    J = lam > rel * lam.max()
    AJ, bJ = A[J], b[J]
    x = lam[J].copy()
    r1 = 1 / (p - 1)

    def dual(x):
        return dual_bound(AJ, bJ, m, p, x)

    best = dual(x)
    for _ in range(iters):
        c = AJ.T @ x
        pos = c > 0
        f = np.where(pos, (np.maximum(c, 0) / (p * m)) ** r1, 0.0)
        resid = bJ - AJ @ f
        if np.max(np.abs(resid)) <= 1e-15 * max(1.0, np.abs(bJ).max()):
            break
        df = np.where(pos, r1 * f / np.where(pos, c, 1.0), 0.0)
        Jac = (AJ * df) @ AJ.T
        step = np.linalg.lstsq(Jac, resid, rcond=None)[0]
        a = 1.0
        while a > 1e-8:
            xn = x + a * step
            if np.all(xn >= 0):
                val = dual(xn)
                if val >= best - 1e-15 * abs(best):
                    break
            a *= 0.5
        else:
            break
        x, best = xn, max(best, val)
    out = np.zeros_like(lam)
    out[J] = x
    return out


def edge_cost(W, f):
    """Trapezoid edge weights ``W(x,y) (f(x) + f(y)) / 2``; ``inf`` stays ``inf``."""
    fin = np.isfinite(W)
    return np.where(fin, np.where(fin, W, 0.0) * (f[:, None] + f[None, :]) / 2, np.inf)


class _Separator:
    """Most violated arcs for a density ``f``.

    ``scan`` returns ``(min ratio, [(ratio, arc, row, rhs), ...])`` where
    ``ratio = row·f / rhs`` and ``row`` is ``ν_γ`` (plus endpoint diracs for
    the tilde variant).  A density is admissible iff every ratio is >= 1.
    """

    def __init__(self, family, space, tilde, level=1.0):
        self.space = space
        self.tilde = tilde
        self.family = family
        self.level = float(level)
        if isinstance(family, ExplicitFamily):
            self.arcs = list(family.arcs)
            self.A = measure_matrix(self.arcs, space.n, tilde)
        else:
            self.arcs = None
            self.src = sorted(family.source)
            self.is_t = np.zeros(space.n, dtype=bool)
            self.is_t[sorted(family.target)] = True
            self.W = space.edge_weights
            self.k = family.max_edges

    def empty(self):
        if self.arcs is not None:
            return not self.arcs
        if not self.src or not self.is_t.any():
            return True
        R, _ = self._tables(np.zeros(self.space.n))
        return not np.any(np.isfinite(R[-1][self.src]))

    def has_constant_arc(self):
        if self.arcs is not None:
            return any(a.is_constant for a in self.arcs)
        return any(self.is_t[s] for s in self.src)

    def _init(self, f):
        return np.where(self.is_t, f if self.tilde else 0.0, np.inf)

    def _tables(self, f):
        Wf = edge_cost(self.W, f)
        return _kernels.hop_tables(Wf, self._init(f), np.int64(self.k)), Wf

    def scan(self, f, count):
        lv = self.level
        if self.arcs is not None:
            vals = self.A @ f / lv
            order = np.argsort(vals, kind="stable")[:count]
            return float(vals[order[0]]), [(float(vals[i]), self.arcs[i], self.A[i], lv) for i in order]
        R, Wf = self._tables(f)
        n = self.space.n
        out = []
        for s in self.src:
            if not np.isfinite(R[self.k, s]):
                continue
            walk = _greedy_walk(R, Wf, self.is_t, self._init(f), s, self.k)
            arc = Arc.on(self.space, _loop_erase(walk))
            row = arc_measure(arc, n)
            if self.tilde:
                row[arc.start] += 1
                row[arc.end] += 1
            out.append((float(row @ f) / lv, arc, row, lv))
        out.sort(key=lambda t: (t[0], t[1].nodes))
        return (out[0][0] if out else np.inf), out[:count]


def _greedy_walk(R, W, is_t, init, s, hops):
    """Lexicographically smallest optimal walk read off Bellman-Ford tables."""
    walk = [s]
    u, h = s, hops
    target = R[h, u]
    tol = lambda v: v * (1 + 1e-12) + 1e-300
    while True:
        if is_t[u] and init[u] <= tol(target):
            return walk
        nxt = None
        for v in np.flatnonzero(np.isfinite(W[u])):
            if W[u, v] + R[h - 1, v] <= tol(target):
                nxt = int(v)
                break
        if nxt is None:  # rounding: fall back to the arg-min
            cand = W[u] + R[h - 1]
            nxt = int(np.argmin(cand))
        target = R[h - 1, nxt]
        u, h = nxt, h - 1
        walk.append(u)


def _loop_erase(walk):
    out = []
    pos = {}
    for v in walk:
        if v in pos:
            cut = pos[v]
            for w in out[cut + 1:]:
                del pos[w]
            out = out[:cut + 1]
        else:
            pos[v] = len(out)
            out.append(v)
    return out


def covering_solve(sep, m, p, rng=None, batch=BATCH):
    """Cutting planes for ``min Σ m f^p  s.t.  row_γ·f >= rhs_γ`` over a separator.

    Returns a :class:`ModulusSolution` whose ``value`` is attained by the
    returned (admissible) density and whose ``lower`` is a Lagrangian bound.
    """
    n = m.size
    f = np.ones(n) if rng is None else rng.uniform(0.5, 1.5, n)
    _, seeds = sep.scan(f, batch)
    rows = [r for _, _, r, _ in seeds]
    rhs = [c for _, _, _, c in seeds]
    arcs = [a for _, a, _, _ in seeds]
    keys = {a.nodes for a in arcs}
    for it in range(1, MAX_ROUNDS + 1):
        A = np.array(rows)
        b = np.array(rhs)
        # strictly feasible start: scaled positive vector
        base = np.ones(n) if rng is None else rng.uniform(0.5, 1.5, n)
        scale = 2 * np.max(b / (A @ base))
        res = _barrier.solve(m, p, np.zeros(n), -A, -b, scale * base, n, rel_tol=INNER_TOL)
        f = res.z
        _, worst = sep.scan(f, batch)
        new = [w for w in worst if w[0] < 1 - VIOLATION_TOL and w[1].nodes not in keys]
        if not new:
            break
        for _, a, r, c in new:
            rows.append(r)
            rhs.append(c)
            arcs.append(a)
            keys.add(a.nodes)
    else:
        raise NonConvergence("cutting-plane round cap reached")
    A = np.array(rows)
    b = np.array(rhs)
    cands = [(f, res.lam)]
    polished = newton_polish(A, b, m, p, res.lam)
    if polished is not None:
        cands.append((density_from_multipliers(A, polished, m, p), polished))
    upper, fz, lower, lam = np.inf, None, -np.inf, res.lam
    for fc, lc in cands:
        rmin = sep.scan(fc, 1)[0]
        if rmin > 0:
            fs = fc / rmin
            u = float(m @ fs ** p)
            if u < upper:
                upper, fz = u, fs
        lo = dual_bound(A, b, m, p, lc)
        if lo > lower:
            lower, lam = lo, lc
    if fz is None:
        raise NonConvergence("separation found a zero-mass arc")
    gap = max(upper - lower, 0.0) / max(upper, 1e-12)
    return ModulusSolution(upper, fz, it, gap, lower, arcs, lam)


def _solve(family, space, p, tilde, level=1.0, rng=None):
    p = check_p(p)
    sep = _Separator(family, space, tilde, level)
    n = space.n
    if sep.empty() or level <= 0:
        return ModulusSolution(0.0, np.zeros(n), 0, 0.0, 0.0)
    if sep.has_constant_arc() and not tilde:
        return ModulusSolution(np.inf, None, 0, 0.0, np.inf)
    return covering_solve(sep, space.measure, p, rng)


def modulus_p(family, space, p, *, level=1.0, rng=None):
    """``Mod_p(Γ) = inf { Σ m f^p : ∫_γ f >= 1 for γ ∈ Γ }``.

    Parameters
    ----------
    family : ExplicitFamily or ConnectorFamily
    space : DiscreteSpace
    p : float in (1, inf)
    level : float, optional
        Right-hand side of every constraint (the value scales as ``level**p``).
    rng : numpy Generator, optional
        Randomises the starting density and initial cuts; the optimum is
        unique so the result must not depend on it.
    """
    return _solve(family, space, p, False, level, rng)


def modulus_tilde_p(family, space, p, *, level=1.0, rng=None):
    """Same as :func:`modulus_p` with constraint ``f(γ_0) + f(γ_1) + ∫_γ f >= 1``."""
    return _solve(family, space, p, True, level, rng)


@dataclass
class FugledeReport:
    residuals: list
    bounds: list
    passed: bool


def fuglede_check(space, p, f_sequence, f_limit, family):
    """Per-arc residuals ``max_γ ∫_γ |f_k - f|`` against their tail bounds."""
    p = check_p(p)
    arcs = list(family.arcs) if isinstance(family, ExplicitFamily) else None
    if arcs is None:
        from .arcs import enumerate_family
        arcs = enumerate_family(family, space)
    f = np.asarray(f_limit, dtype=float)
    seq = [np.asarray(fk, dtype=float) for fk in f_sequence]
    if not arcs or not seq:
        return FugledeReport([0.0] * len(seq), [0.0] * len(seq), True)
    A = measure_matrix(arcs, space.n)
    m = space.measure
    norms = np.array([(m @ np.abs(fk - f) ** p) ** (1 / p) for fk in seq])
    tails = np.cumsum(norms[::-1])[::-1]
    factor = max(a.length for a in arcs) * float(np.max(m ** (-1 / p)))
    residuals = [float(np.max(A @ np.abs(fk - f))) for fk in seq]
    bounds = [float(t * factor) for t in tails]
    passed = all(r <= bd * (1 + 1e-12) + 1e-15 for r, bd in zip(residuals, bounds))
    return FugledeReport(residuals, bounds, passed)
