"""Discrete Lipschitz constants, Cheeger energies and their duals.

The dual Cheeger energy of a zero-mean ``h`` is computed three ways:

* ``dual_cheeger_primal``: the Legendre transform of ``pCE_p`` (barrier
  method on an epigraph form with ``G >= lip f``);
* ``dual_cheeger_plans``: the transport cost ``D_q(h_+ m, h_- m)`` of plans
  with prescribed endpoint marginals (barrier method on its Lagrangian dual,
  paths priced by shortest paths);
* ``dual_cheeger_conformal``: ``q sup_g K_{d_g}(h_+ m, h_- m) - (1/p) Σ m g^p``
  (supergradient warm start, then a Kelley bundle over transport plans with
  exact KR evaluations).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _barrier, _kernels
from ._barrier import NonConvergence
from ._report import Check, SuiteReport
from .arcs import Arc, ExplicitFamily, arc_measure, measure_matrix
from .conformal import conformal_distance, length_distance
from .modulus import (BATCH, VIOLATION_TOL, _greedy_walk, _loop_erase, check_p,
                      covering_solve, edge_cost)
from .plans import _project_simplex, _spg, conjugate
from .transport import kr_primal

G_FLOOR = 1e-6


# ------------------------------------------------------------------ lip / pCE

def lip(f, space):
    """``lip f(x) = max_{y ~ x} |f(x) - f(y)| / d(x, y)``; 0 at isolated nodes."""
    f = np.asarray(f, dtype=float)
    A = space.adjacency
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(A, np.abs(f[:, None] - f[None, :]) / np.where(A, space.dist, 1.0), 0.0)
    return q.max(axis=1) if f.size else q


def pre_cheeger(f, space, p):
    """``pCE_p(f) = Σ m (lip f)^p`` (equal to the relaxed energy on finite spaces)."""
    p = check_p(p)
    return float(space.measure @ lip(f, space) ** p)


def _star_sup(v, space):
    """``max_{y ∈ {x} ∪ N(x)} v(y)`` per node."""
    A = space.adjacency | np.eye(space.n, dtype=bool)
    return np.where(A, v[None, :], -np.inf).max(axis=1)


def _star_inf(v, space):
    A = space.adjacency | np.eye(space.n, dtype=bool)
    return np.where(A, v[None, :], np.inf).min(axis=1)


def lip_calculus_suite(space, samples=100, rng=None, tol=1e-9):
    """Calculus rules for ``lip`` on random ``f, g, χ``.

    ``sublinear``      ``lip(αf + βg) <= |α| lip f + |β| lip g``
    ``product``        ``lip(fg)(x) <= |f(x)| lip g(x) + sup_{star x} |g| lip f(x)``
    ``interpolation``  ``lip((1-χ)f + χg)(x) <= (1-χ(x)) lip f + χ(x) lip g + lip χ sup_{star x}|f-g|``
    ``chain``          ``inf |φ'| lip f <= lip(φ∘f) <= sup |φ'| lip f``, with the
                       extrema of ``φ'`` over the range of ``f`` on the star
    ``contraction``    ``ψ(lip f̃) + ψ(lip g̃) <= ψ(lip f) + ψ(lip g)`` for
                       ``ζ(r) = a + c r`` with ``c ∈ [0, 1]`` and convex
                       nondecreasing ``ψ(r) = r^s``, ``s >= 1``
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n = space.n
    worst = dict.fromkeys(["sublinear", "product", "interpolation", "chain", "contraction"], -np.inf)
    for _ in range(samples):
        f, g = rng.normal(size=(2, n))
        chi = rng.uniform(size=n)
        a, b = rng.normal(size=2)
        Lf, Lg = lip(f, space), lip(g, space)
        scale = 1 + Lf + Lg
        r = lip(a * f + b * g, space) - abs(a) * Lf - abs(b) * Lg
        worst["sublinear"] = max(worst["sublinear"], np.max(r / scale))
        r = lip(f * g, space) - (np.abs(f) * Lg + _star_sup(np.abs(g), space) * Lf)
        worst["product"] = max(worst["product"], np.max(r / (scale * (1 + np.abs(f).max() + np.abs(g).max()))))
        u = (1 - chi) * f + chi * g
        r = lip(u, space) - ((1 - chi) * Lf + chi * Lg + lip(chi, space) * _star_sup(np.abs(f - g), space))
        worst["interpolation"] = max(worst["interpolation"], np.max(r / scale))
        # φ(r) = exp(κ r): φ' increasing, extremes at the ends of the star range
        kappa = rng.uniform(0.1, 1.0)
        lo, hi = _star_inf(f, space), _star_sup(f, space)
        Lphi = lip(np.exp(kappa * f), space)
        r1 = Lphi - kappa * np.exp(kappa * hi) * Lf
        r2 = kappa * np.exp(kappa * lo) * Lf - Lphi
        worst["chain"] = max(worst["chain"], np.max(np.maximum(r1, r2) / (scale * np.exp(kappa * np.abs(f).max()))))
        c = rng.uniform()
        shift = rng.normal()
        ft = f + shift + c * (g - f)
        gt = g + shift + c * (f - g)
        s = rng.uniform(1, 3)
        r = (lip(ft, space) ** s + lip(gt, space) ** s) - (Lf ** s + Lg ** s)
        worst["contraction"] = max(worst["contraction"], np.max(r / scale ** s))
    return SuiteReport([Check(k, v <= tol, v) for k, v in worst.items()])


# ------------------------------------------------------------ weak gradients

@dataclass
class WeakGradientSolution:
    density: np.ndarray | None
    value: float
    gap: float = 0.0
    active: list = field(default_factory=list)

    def feasibility_residual(self, f, arcs):
        """``max_γ |Δf_γ| - ∫_γ g`` over ``arcs`` (nonpositive when admissible)."""
        f = np.asarray(f, dtype=float)
        if not arcs:
            return -np.inf
        A = measure_matrix(arcs, f.size)
        b = np.array([abs(f[a.end] - f[a.start]) for a in arcs])
        return float(np.max(b - A @ self.density))


class _WugSeparator:
    """Arcs maximising ``|Δf_γ| / ∫_γ g`` misfit; ratio is ``∫_γ g / |Δf_γ|``."""

    def __init__(self, f, family, space, weight=None):
        self.f = f
        self.space = space
        self.w = np.ones(space.n) if weight is None else np.asarray(weight, dtype=float)
        self.nu = lambda arc: self.w * arc_measure(arc, space.n)
        scale = max(1.0, float(np.abs(f).max()) if f.size else 1.0)
        self.floor = 1e-13 * scale
        if isinstance(family, ExplicitFamily):
            arcs = [a for a in family.arcs if abs(f[a.end] - f[a.start]) > self.floor]
            self.arcs = arcs
            self.A = np.array([self.nu(a) for a in arcs]) if arcs else np.zeros((0, space.n))
            self.b = np.array([abs(f[a.end] - f[a.start]) for a in arcs])
        else:
            self.arcs = None
            self.src = sorted(family.source)
            self.tgt = sorted(family.target)
            self.k = family.max_edges
            self.W = space.edge_weights
            self.pairs = [(s, t) for t in self.tgt for s in self.src
                          if s != t and abs(f[t] - f[s]) > self.floor]

    def empty(self):
        if self.arcs is not None:
            return not self.arcs
        if not self.pairs:
            return True
        D = _kernels.floyd_warshall(self.W)
        return not any(np.isfinite(D[s, t]) for s, t in self.pairs)

    def scan(self, g, count):
        f = self.f
        if self.arcs is not None:
            ratios = (self.A @ g) / self.b
            order = np.argsort(ratios, kind="stable")[:count]
            return float(ratios[order[0]]), [(float(ratios[i]), self.arcs[i], self.A[i], float(self.b[i]))
                                             for i in order]
        Wg = edge_cost(self.W, self.w * g)
        cands = []
        tables = {}
        for s, t in self.pairs:
            if t not in tables:
                init = np.full(self.space.n, np.inf)
                init[t] = 0.0
                tables[t] = _kernels.hop_tables(Wg, init, np.int64(self.k))
            val = tables[t][self.k, s]
            if np.isfinite(val):
                cands.append((val / abs(f[t] - f[s]), s, t))
        cands.sort()
        out = []
        for ratio, s, t in cands[:count]:
            is_t = np.zeros(self.space.n, bool)
            is_t[t] = True
            init = np.where(is_t, 0.0, np.inf)
            arc = Arc.on(self.space, _loop_erase(_greedy_walk(tables[t], Wg, is_t, init, s, self.k)))
            row = self.nu(arc)
            b = abs(f[t] - f[s])
            out.append((float(row @ g) / b, arc, row, b))
        out.sort(key=lambda w: (w[0], w[1].nodes))
        return (out[0][0] if out else np.inf), out


def minimal_wug(f, family, space, p, *, rng=None, batch=BATCH, measure=None, arc_weight=None):
    """Minimal ``Σ m g^p`` over ``g >= 0`` with ``|f(γ_1) - f(γ_0)| <= ∫_γ g`` on the family.

    Parameters
    ----------
    measure : ndarray, optional
        Replaces ``space.measure`` in the objective.
    arc_weight : ndarray, optional
        Node weights ``w`` turning the arc integral into ``∫_γ w g`` (the
        conformally reweighted arc length).
    """
    p = check_p(p)
    f = np.asarray(f, dtype=float)
    m = space.measure if measure is None else np.asarray(measure, dtype=float)
    sep = _WugSeparator(f, family, space, arc_weight)
    if sep.empty():
        return WeakGradientSolution(np.zeros(space.n), 0.0)
    sol = covering_solve(sep, m, p, rng, batch)
    return WeakGradientSolution(sol.density, sol.value, sol.gap, sol.active)


def edge_family(space):
    """All single-edge arcs; their constraints imply every path constraint."""
    return ExplicitFamily(tuple(Arc.on(space, e) for e in space.edges()))


# ------------------------------------------------------------- dual energies

@dataclass
class DualCheegerResult:
    value: float
    gap: float = 0.0
    potential: np.ndarray | None = None
    density: np.ndarray | None = None
    plan: list | None = None
    extra: dict = field(default_factory=dict)


def _components(space):
    return connected_components(csr_matrix(space.adjacency), directed=False)[1]


def _mean_ok(h, space):
    comp = _components(space)
    mh = space.measure * h
    scale = max(float(np.abs(mh).sum()), 1e-300)
    sums = np.bincount(comp, weights=mh)
    return bool(np.all(np.abs(sums) <= 1e-10 * scale)), comp


def _epigraph(h, space, p, rows_fn):
    """``sup_f Σ m f h - (1/p) Σ m G^p`` under the rows built by ``rows_fn``."""
    n = space.n
    m = space.measure
    ok, comp = _mean_ok(h, space)
    if not ok:
        return DualCheegerResult(np.inf, extra={"flag": "NonzeroMean"})
    if not np.any(h):
        return DualCheegerResult(0.0, potential=np.zeros(n), density=np.zeros(n))
    first = {}
    for x in range(n):
        first.setdefault(comp[x], x)
    free = np.array([x for x in range(n) if first[comp[x]] != x], dtype=np.int64)
    col = np.full(n, -1)
    col[free] = n + np.arange(free.size)
    rows, rhs = rows_fn(col, n + free.size)
    c = np.zeros(n + free.size)
    c[n:] = -(m * h)[free]
    z0 = np.concatenate([np.ones(n), np.zeros(free.size)])
    res = _barrier.solve(m / p, p, c, rows, rhs, z0, n, rel_tol=1e-12)
    fpot = np.zeros(n)
    fpot[free] = res.z[n:]
    return res, fpot


def dual_cheeger_primal(h, space, p):
    """``CE*_p(h) = q sup_f Σ m f h - (1/p) pCE_p(f)``.

    ``+inf`` (flag ``NonzeroMean``) unless ``h`` has zero mean on every
    connected component.
    """
    p = check_p(p)
    q = conjugate(p)
    h = np.asarray(h, dtype=float)
    D = space.dist

    def rows_fn(col, nvar):
        out = []
        for x, y in zip(*np.nonzero(space.adjacency)):
            for sgn in (1.0, -1.0):
                r = np.zeros(nvar)
                r[x] -= D[x, y]
                if col[x] >= 0:
                    r[col[x]] += sgn
                if col[y] >= 0:
                    r[col[y]] -= sgn
                out.append(r)
        return np.array(out).reshape(-1, nvar), np.zeros(len(out))

    res = _epigraph(h, space, p, rows_fn)
    if isinstance(res, DualCheegerResult):
        return res
    res, fpot = res
    sup = float(space.measure @ (fpot * h)) - pre_cheeger(fpot, space, p) / p
    return DualCheegerResult(q * sup, res.gap / max(abs(res.value), 1e-300), fpot, lip(fpot, space))


def dual_cheeger_weak(h, space, p):
    """``q sup_f Σ m f h - (1/p) wCE_p(f)`` with the edge (trapezoid) weak gradient.

    Diagnostic: by LP duality this equals the plan cost ``D_q``.
    """
    p = check_p(p)
    q = conjugate(p)
    h = np.asarray(h, dtype=float)
    D = space.dist

    def rows_fn(col, nvar):
        out = []
        for x, y in space.edges():
            for sgn in (1.0, -1.0):
                r = np.zeros(nvar)
                r[x] -= D[x, y] / 2
                r[y] -= D[x, y] / 2
                if col[x] >= 0:
                    r[col[x]] += sgn
                if col[y] >= 0:
                    r[col[y]] -= sgn
                out.append(r)
        return np.array(out).reshape(-1, nvar), np.zeros(len(out))

    res = _epigraph(h, space, p, rows_fn)
    if isinstance(res, DualCheegerResult):
        return res
    res, fpot = res
    return DualCheegerResult(q * -res.value, res.gap / max(abs(res.value), 1e-300), fpot, res.z[:space.n])


def _marginals(h, space):
    mu = space.measure * h
    return np.maximum(mu, 0.0), np.maximum(-mu, 0.0)


def dual_cheeger_plans(h, space, p, max_edges=None, max_rounds=500):
    """``D_q(h_+ m, h_- m) = inf br_q^q(π)`` over plans with the given endpoint marginals.

    Solved through its Lagrangian dual
    ``sup_{g>=0, ψ} Σ ψ_0 μ_0 - Σ ψ_1 μ_1 - (1/p) Σ m g^p`` subject to
    ``ψ_0(γ_0) - ψ_1(γ_1) <= ∫_γ g`` for simple paths with at most
    ``max_edges`` edges (default ``n - 1``).  Paths enter by shortest-path
    pricing; the multipliers of the path constraints are the optimal plan.
    """
    p = check_p(p)
    q = conjugate(p)
    h = np.asarray(h, dtype=float)
    n = space.n
    m = space.measure
    ok, comp = _mean_ok(h, space)
    if not ok:
        return DualCheegerResult(np.inf, extra={"flag": "NonzeroMean"})
    if not np.any(h):
        return DualCheegerResult(0.0, plan=[])
    mu0, mu1 = _marginals(h, space)
    if not np.isfinite(kr_primal(mu0, mu1, length_distance(space))[0]):
        return DualCheegerResult(np.inf, extra={"flag": "Disconnected"})
    k = n - 1 if max_edges is None else int(max_edges)
    S0 = np.flatnonzero(mu0 > 0)
    S1 = np.flatnonzero(mu1 > 0)
    # one ψ_1 per component is pinned to zero (shift invariance)
    pinned = {}
    for b in S1:
        pinned.setdefault(comp[b], b)
    col0 = {a: n + i for i, a in enumerate(S0)}
    free1 = [b for b in S1 if pinned[comp[b]] != b]
    col1 = {b: n + S0.size + i for i, b in enumerate(free1)}
    nvar = n + S0.size + len(free1)
    c = np.zeros(nvar)
    for a in S0:
        c[col0[a]] = -mu0[a]
    for b in free1:
        c[col1[b]] = mu1[b]
    W = space.edge_weights

    def row(arc):
        r = np.zeros(nvar)
        r[:n] = -arc_measure(arc, n)
        r[col0[arc.start]] += 1.0
        if arc.end in col1:
            r[col1[arc.end]] -= 1.0
        return r

    def psi(z):
        p0 = {a: z[col0[a]] for a in S0}
        p1 = {b: (z[col1[b]] if b in col1 else 0.0) for b in S1}
        return p0, p1

    def price(z, count):
        g = z[:n]
        Wg = edge_cost(W, g)
        p0, p1 = psi(z)
        cands = []
        tables = {}
        for b in S1:
            init = np.full(n, np.inf)
            init[b] = 0.0
            R = _kernels.hop_tables(Wg, init, np.int64(k))
            tables[b] = R
            for a in S0:
                if comp[a] == comp[b] and np.isfinite(R[k, a]):
                    cands.append((p0[a] - p1[b] - R[k, a], a, b))
        cands.sort(key=lambda t: (-t[0], t[1], t[2]))
        out = []
        for viol, a, b in cands[:count]:
            is_t = np.zeros(n, bool)
            is_t[b] = True
            arc = Arc.on(space, _loop_erase(_greedy_walk(tables[b], Wg, is_t,
                                                         np.where(is_t, 0.0, np.inf), a, k)))
            out.append((viol, arc))
        return out

    z = np.concatenate([np.ones(n), np.zeros(nvar - n)])
    arcs = [a for _, a in price(z, 10 ** 9)]
    keys = {a.nodes for a in arcs}
    scale = float(m @ np.abs(h)) + 1.0
    for _ in range(max_rounds):
        G = np.array([row(a) for a in arcs])
        res = _barrier.solve(m / p, p, c, G, np.zeros(len(arcs)), z, n, rel_tol=1e-12)
        new = [(v, a) for v, a in price(res.z, BATCH)
               if v > VIOLATION_TOL * scale and a.nodes not in keys]
        if not new:
            break
        for _, a in new:
            arcs.append(a)
            keys.add(a.nodes)
    else:
        raise NonConvergence("plan pricing round cap reached")
    w = res.lam
    e0 = np.zeros(n)
    e1 = np.zeros(n)
    for a, wa in zip(arcs, w):
        e0[a.start] += wa
        e1[a.end] += wa
    mu_pi = measure_matrix(arcs, n).T @ w
    entropy = float(m @ (mu_pi / m) ** q)
    marg = float(max(np.abs(e0 - mu0).max(), np.abs(e1 - mu1).max()))
    value = -q * res.value
    return DualCheegerResult(value, res.gap / max(abs(res.value), 1e-300), density=res.z[:n],
                             plan=list(zip(arcs, w)),
                             extra={"planEntropy": entropy, "marginalResidual": marg})


def _transport_barycenter(g, mu0, mu1, space):
    """Exact ``K_{d_g}`` and the barycenter of an optimal plan along shortest paths."""
    n = space.n
    gg = np.maximum(g, G_FLOOR)
    D = conformal_distance(space, gg)
    value, C = kr_primal(mu0, mu1, D)
    Wg = edge_cost(space.edge_weights, gg)
    bary = np.zeros(n)
    for x, y in zip(*np.nonzero(C > 0)):
        u = x
        while u != y:
            nb = np.flatnonzero(np.isfinite(Wg[u]))
            cost = Wg[u, nb] + D[nb, y]
            v = int(nb[np.flatnonzero(cost <= D[u, y] * (1 + 1e-12) + 1e-300)[0]]) \
                if np.any(cost <= D[u, y] * (1 + 1e-12) + 1e-300) else int(nb[np.argmin(cost)])
            half = C[x, y] * space.dist[u, v] / 2
            bary[u] += half
            bary[v] += half
            u = v
    return value, bary


def dual_cheeger_conformal(h, space, p, *, rng=None, starts=5, warm_steps=25, tol=1e-11,
                           max_rounds=2000):
    """``q sup_{g >= 1e-6} K_{d_g}(h_+ m, h_- m) - (1/p) Σ m g^p``.

    The objective is concave in ``g`` with supergradient ``μ_π - m g^{p-1}``
    where ``π`` is an optimal transport plan routed along ``d_g``-shortest
    paths.  A few projected supergradient steps over ``log g`` from
    ``starts`` seeded points collect plans.  A Kelley bundle then alternates
    between exact KR evaluations (lower bounds) and the restricted master
    ``min_{λ ∈ simplex} (1/q) Σ m (μ_λ / m)^q`` (upper bounds).
    """
    p = check_p(p)
    q = conjugate(p)
    h = np.asarray(h, dtype=float)
    n = space.n
    m = space.measure
    ok, _ = _mean_ok(h, space)
    if not ok:
        return DualCheegerResult(np.inf, extra={"flag": "NonzeroMean"})
    if not np.any(h):
        return DualCheegerResult(0.0, density=np.full(n, G_FLOOR))
    mu0, mu1 = _marginals(h, space)
    if not np.isfinite(kr_primal(mu0, mu1, length_distance(space))[0]):
        return DualCheegerResult(np.inf, extra={"flag": "Disconnected"})
    rng = np.random.default_rng(0) if rng is None else rng

    def J(g):
        K, bary = _transport_barycenter(g, mu0, mu1, space)
        gg = np.maximum(g, G_FLOOR)
        return K - float(m @ gg ** p) / p, bary

    bundle = []
    best, best_g = -np.inf, None
    for s in range(starts):
        logg = np.log(np.full(n, 0.5)) if s == 0 else rng.normal(np.log(0.5), 0.7, n)
        for it in range(1, warm_steps + 1):
            g = np.maximum(np.exp(logg), G_FLOOR)
            val, bary = J(g)
            bundle.append(bary)
            if val > best:
                best, best_g = val, g
            sg = g * (bary - m * g ** (p - 1))
            norm = np.abs(sg).max()
            if norm == 0:
                break
            logg = np.log(np.maximum(np.exp(logg + 0.5 / np.sqrt(it) * sg / norm), G_FLOOR))

    def master(B, lam0):
        def fun_grad(lam):
            mu = lam @ B
            hq = (mu / m) ** (q - 1)
            return float(m @ (hq * mu / m)) / q, B @ hq

        last = {"f": np.inf}

        def certify(lam):
            f, gr = fun_grad(lam)
            fw = float(gr @ lam - gr.min())
            scale = max(abs(f), 1e-300)
            # stagnation only counts once the Frank-Wolfe gap is already small
            done = fw <= 1e-14 * scale or (fw <= 1e-10 * scale and abs(last["f"] - f) <= 1e-17 * scale)
            last["f"] = f
            return done
        lam, _ = _spg(fun_grad, _project_simplex, lam0, certify, max_iter=20000)
        return fun_grad(lam)[0], lam

    B = np.unique(np.array(bundle), axis=0)
    lam = np.full(B.shape[0], 1.0 / B.shape[0])
    upper = np.inf
    for rounds in range(max_rounds):
        upper, lam = master(B, lam)
        g = (lam @ B / m) ** (q - 1)
        val, bary = J(g)
        if val > best:
            best, best_g = val, np.maximum(g, G_FLOOR)
        if upper - best <= tol * max(abs(upper), 1e-300):
            break
        if np.any(np.all(np.isclose(B, bary, rtol=1e-13, atol=1e-15), axis=1)):
            break
        B = np.vstack([B, bary])
        lam = np.append(lam, 0.0)
    gap = max(upper - best, 0.0) / max(abs(upper), 1e-300)
    return DualCheegerResult(q * best, gap, density=best_g,
                             extra={"upper": q * upper, "bundle": int(B.shape[0]),
                                    "rounds": rounds + 1})


@dataclass
class TripleReport:
    primal: float
    plans: float
    conformal: float
    gap: float
    weak: float = np.nan

    @property
    def values(self):
        return (self.primal, self.plans, self.conformal)


def _rel(a, b):
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b), 1e-12)


def triple_agreement(h, space, p, seed=0, concurrent=True):
    """Three independent dual Cheeger values and their largest pairwise relative gap.

    Also reports the edge weak-gradient dual (``weak``) as a diagnostic.
    """
    jobs = {
        "primal": lambda: dual_cheeger_primal(h, space, p).value,
        "plans": lambda: dual_cheeger_plans(h, space, p).value,
        "conformal": lambda: dual_cheeger_conformal(h, space, p, rng=np.random.default_rng(seed)).value,
        "weak": lambda: dual_cheeger_weak(h, space, p).value,
    }
    if concurrent:
        with ThreadPoolExecutor(max_workers=4) as ex:
            futs = {k: ex.submit(fn) for k, fn in jobs.items()}
            vals = {k: futs[k].result() for k in jobs}
    else:
        vals = {k: fn() for k, fn in jobs.items()}
    trio = [vals["primal"], vals["plans"], vals["conformal"]]
    gap = max(_rel(a, b) for i, a in enumerate(trio) for b in trio[i + 1:])
    return TripleReport(*trio, gap, vals["weak"])


# ------------------------------------------------------------------- H = W

@dataclass
class HWRow:
    N: int
    pce: float
    wce: float

    @property
    def gap(self):
        return self.pce - self.wce


def hw_refinement(f_fn, N_list, p=2.0, g_fn=None):
    """``pCE_p`` against the minimal weak-gradient energy on refined interval graphs.

    The W-side family is every sub-interval path of the path graph; its
    constraints are implied by the single-edge ones, so the edge family is
    used.  ``g_fn`` optionally reweights the reference measure.
    """
    from .generators import interval_path

    p = check_p(p)
    rows = []
    for N in N_list:
        space, x = interval_path(N)
        if g_fn is not None:
            space = space.with_measure(space.measure * g_fn(x))
        f = f_fn(x)
        pce = pre_cheeger(f, space, p)
        wce = minimal_wug(f, edge_family(space), space, p, batch=N).value
        rows.append(HWRow(N, pce, wce))
    return rows


# ---------------------------------------------------------- wug calculus suite

def wug_calculus_suite(space, family, p, samples=100, rng=None, tol=1e-6):
    """Checks on the weak upper gradient program over random ``f``.

    ``convexity``        convex combinations of admissible ``g`` stay admissible
    ``lipschitz_comp``   ``wCE(φ∘f) <= Lip(φ)^p wCE(f)`` for ``Lip(φ) <= 1``
    ``conformal``        minimal gradient on the reweighted arc length ``∫_γ w g``
                         equals ``w^{-1}`` times the minimal gradient on the
                         original space, same measure (literal rescaling identity)
    ``conformal_feasible`` ``G`` admissible for the reweighted length iff
                         ``wG`` admissible originally (exact correspondence)
    ``conformal_measure`` the identity above with measure ``m w^p`` on the
                         reweighted side (exact analogue)
    ``stability``        limits of admissible pairs ``(f_k, g_k)`` are admissible
    """
    p = check_p(p)
    rng = np.random.default_rng(0) if rng is None else rng
    arcs = list(family.arcs) if isinstance(family, ExplicitFamily) else None
    if arcs is None:
        from .arcs import enumerate_family
        arcs = enumerate_family(family, space)
    n = space.n
    A = measure_matrix(arcs, n) if arcs else np.zeros((0, n))
    ends = np.array([[a.start, a.end] for a in arcs], dtype=int).reshape(-1, 2)

    def rhs(f):
        return np.abs(f[ends[:, 1]] - f[ends[:, 0]])

    worst = {k: -np.inf for k in ("convexity", "lipschitz_comp", "conformal", "conformal_feasible",
                                  "conformal_measure", "stability")}
    for _ in range(samples):
        f = rng.normal(size=n)
        sol = minimal_wug(f, family, space, p)
        g1 = sol.density + rng.uniform(0, 1, n)
        g2 = lip(f, space) * (1 + rng.uniform(0, 1, n)) + sol.density
        lam = rng.uniform()
        gc = lam * g1 + (1 - lam) * g2
        r = float(np.max(rhs(f) - A @ gc, initial=-np.inf))
        worst["convexity"] = max(worst["convexity"], r)

        amp, freq = rng.uniform(0.2, 1.0), rng.uniform(0.5, 2.0)
        phi_f = amp * np.sin(freq * f) / freq            # Lip φ = amp <= 1
        comp = minimal_wug(phi_f, family, space, p).value
        r = comp - amp ** p * sol.value
        worst["lipschitz_comp"] = max(worst["lipschitz_comp"], r / max(sol.value, 1e-12) - sol.gap)

        w = rng.uniform(0.5, 2.0, n)
        resc = minimal_wug(f, family, space, p, arc_weight=w)
        if sol.value > 0:
            lit = float(np.max(np.abs(resc.density - sol.density / w)))
            worst["conformal"] = max(worst["conformal"], lit / max(1.0, np.abs(sol.density).max()))
            G = rng.uniform(0, 2, n)
            feas_resc = np.all(rhs(f) <= (A * w) @ G + 1e-12)
            feas_orig = np.all(rhs(f) <= A @ (w * G) + 1e-12)
            worst["conformal_feasible"] = max(worst["conformal_feasible"], float(feas_resc != feas_orig))
            resm = minimal_wug(f, family, space, p, arc_weight=w, measure=space.measure * w ** p)
            r = float(np.max(np.abs(resm.density - sol.density / w))) / max(1.0, np.abs(sol.density).max())
            worst["conformal_measure"] = max(worst["conformal_measure"], r)
        else:
            for k in ("conformal", "conformal_feasible", "conformal_measure"):
                worst[k] = max(worst[k], 0.0)

        # stability: f_k -> f with admissible g_k -> g
        ks = 2.0 ** -np.arange(1, 12)
        lim_g = lip(f, space)
        r = -np.inf
        for e in ks:
            fk = f + e * rng.normal(size=n)
            gk = lip(fk, space)
            r = max(r, float(np.max(rhs(fk) - A @ gk, initial=-np.inf)))
        r = max(r, float(np.max(rhs(f) - A @ lim_g, initial=-np.inf)))
        worst["stability"] = max(worst["stability"], r)
    thresholds = {"convexity": 1e-12, "lipschitz_comp": tol, "conformal": tol,
                  "conformal_feasible": 0.0, "conformal_measure": tol, "stability": 1e-12}
    return SuiteReport([Check(k, v <= thresholds[k], v) for k, v in worst.items()])
