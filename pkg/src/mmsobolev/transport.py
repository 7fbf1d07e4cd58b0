"""Kantorovich-Rubinstein distance: primal coupling LP and dual potential LP.

The two LPs are solved by unrelated methods so their agreement is a real
check: the primal by a network simplex on the bipartite support graph, the
dual by a dense tableau simplex over Lipschitz potentials.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._barrier import NonConvergence

MASS_TOL = 1e-10


class MassMismatch(ValueError):
    pass


def _check(mu0, mu1, delta):
    mu0 = np.asarray(mu0, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    delta = np.asarray(delta, dtype=float)
    n = delta.shape[0]
    if mu0.shape != (n,) or mu1.shape != (n,):
        raise ValueError("measures must match the size of delta")
    if np.any(mu0 < 0) or np.any(mu1 < 0):
        raise ValueError("measures must be nonnegative")
    if abs(mu0.sum() - mu1.sum()) > MASS_TOL * max(1.0, mu0.sum()):
        raise MassMismatch(f"masses differ: {mu0.sum()} vs {mu1.sum()}")
    return mu0, mu1, delta


def kr_primal(mu0, mu1, delta, max_pivots=1_000_000):
    """Minimal coupling cost ``Σ δ(x,y) μ(x,y)`` over couplings of ``μ_0, μ_1``.

    Returns
    -------
    value : float
        ``inf`` when every coupling must charge a pair at infinite distance.
    coupling : ndarray (n, n) or None
    """
    mu0, mu1, delta = _check(mu0, mu1, delta)
    n = delta.shape[0]
    S0 = np.flatnonzero(mu0 > 0)
    S1 = np.flatnonzero(mu1 > 0)
    if S0.size == 0:
        return 0.0, np.zeros((n, n))
    sub = delta[np.ix_(S0, S1)]
    ti, hj = np.nonzero(np.isfinite(sub))
    costs = sub[ti, hj].astype(float)
    a = S0.size
    supply = np.concatenate([mu0[S0], -mu1[S1]])
    cmax = float(costs.max()) if costs.size else 1.0
    big_m = (a + S1.size + 2) * max(cmax, 1.0) + 1.0
    flow, _, art, status = _kernels.network_simplex(
        np.int64(a + S1.size), ti.astype(np.int64), (hj + a).astype(np.int64), costs,
        supply, float(big_m), np.int64(max_pivots))
    if status != 0:
        raise NonConvergence("network simplex pivot cap reached")
    if art > 1e-9 * max(1.0, mu0.sum()):
        return np.inf, None
    coupling = np.zeros((n, n))
    np.add.at(coupling, (S0[ti], S1[hj]), flow)
    return float(costs @ flow), coupling


def _tableau_max(c, A, b, max_iter=100_000, tol=1e-11):
    """``max c·x  s.t.  A x <= b, x >= 0`` with ``b >= 0`` (origin feasible).

    Dantzig pricing, switching to Bland's rule after a run of degenerate
    pivots.  Returns ``(x, status)`` with status 0 optimal, 1 unbounded.
    """
    r, k = A.shape
    T = np.zeros((r + 1, k + r + 1))
    T[:r, :k] = A
    T[:r, k:k + r] = np.eye(r)
    T[:r, -1] = b
    T[r, :k] = -c
    basis = np.arange(k, k + r)
    degenerate = 0
    for _ in range(max_iter):
        red = T[r, :-1]
        if degenerate > 20:
            cand = np.flatnonzero(red < -tol)
            if cand.size == 0:
                break
            e = int(cand[0])
        else:
            e = int(np.argmin(red))
            if red[e] >= -tol:
                break
        col = T[:r, e]
        pos = col > tol
        if not pos.any():
            return None, 1
        ratios = np.full(r, np.inf)
        ratios[pos] = T[:r, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, best))
        leave = int(ties[np.argmin(basis[ties])])
        degenerate = degenerate + 1 if best <= tol else 0
        T[leave] /= T[leave, e]
        others = np.arange(r + 1) != leave
        T[others] -= np.outer(T[others, e], T[leave])
        basis[leave] = e
    else:
        raise NonConvergence("tableau simplex iteration cap reached")
    # re-solve the final basis against the original data to shed pivot drift
    full = np.hstack([A, np.eye(r)])
    try:
        xb = np.linalg.solve(full[:, basis], b)
    except np.linalg.LinAlgError:
        xb = T[:r, -1]
    x = np.zeros(k + r)
    x[basis] = xb
    return np.maximum(x[:k], 0.0), 0


def kr_dual(mu0, mu1, delta):
    """``sup ∫ φ d(μ_0 - μ_1)`` over ``φ`` with ``|φ(x) - φ(y)| <= δ(x, y)``.

    The LP lives on the union of the supports, with ``φ >= 0`` (potentials
    are shift invariant).  The optimum is extended to every node by the
    McShane formula ``φ(z) = min_x φ(x) + δ(z, x)``.

    Returns
    -------
    value : float
        ``inf`` if the LP is unbounded (mass cannot be matched at finite cost).
    potential : ndarray (n,) or None
    """
    mu0, mu1, delta = _check(mu0, mu1, delta)
    n = delta.shape[0]
    U = np.flatnonzero((mu0 > 0) | (mu1 > 0))
    if U.size == 0:
        return 0.0, np.zeros(n)
    c = (mu0 - mu1)[U]
    sub = delta[np.ix_(U, U)]
    ii, jj = np.nonzero(np.isfinite(sub) & ~np.eye(U.size, dtype=bool))
    A = np.zeros((ii.size, U.size))
    A[np.arange(ii.size), ii] = 1.0
    A[np.arange(ii.size), jj] = -1.0
    b = sub[ii, jj]
    x, status = _tableau_max(c, A, b)
    if status == 1:
        return np.inf, None
    phi = np.full(n, np.inf)
    phi[U] = x
    with np.errstate(invalid="ignore"):
        ext = np.min(x[None, :] + delta[:, U], axis=1)
    rest = np.setdiff1d(np.arange(n), U)
    phi[rest] = np.where(np.isfinite(ext[rest]), ext[rest], 0.0)
    return float(c @ x), phi


def lipschitz_violation(phi, delta):
    """Largest ``φ(x) - φ(y) - δ(x, y)`` over finite pairs."""
    fin = np.isfinite(delta)
    diff = phi[:, None] - phi[None, :]
    return float(np.max(np.where(fin, diff - np.where(fin, delta, 0.0), -np.inf)))


@dataclass
class MonotoneLimitReport:
    values: list
    nondecreasing: bool
    final: float
    target: float
    final_gap: float

    @property
    def passed(self):
        return self.nondecreasing and self.final_gap <= 1e-8


def kr_monotone_limit(mu0, mu1, family, dist=None):
    """``K_{d_i}`` along a monotone family, compared with ``K`` for ``dist``."""
    values = [kr_primal(mu0, mu1, d)[0] for d in family.members]
    target = kr_primal(mu0, mu1, dist)[0] if dist is not None else values[-1]
    nondec = all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(values[:-1], values[1:]))
    if np.isfinite(target):
        gap = abs(values[-1] - target)
    else:
        gap = 0.0 if values[-1] == target else np.inf
    return MonotoneLimitReport(values, nondec, values[-1], target, gap)
