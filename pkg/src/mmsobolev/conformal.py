"""Length, conformal and chain distances on a finite space.

Three per-edge rules for a conformal weight ``g`` give three distances that
are ordered edge by edge, hence as shortest-path values:

* dual Lipschitz:  ``dist(x,y) * min(g(x), g(y))``
* trapezoid:       ``dist(x,y) * (g(x) + g(y)) / 2``
* chain:           ``d_i(x,y) * max(g(x), g(y))`` on steps with ``d_i < eps``
"""
import numpy as np

from . import _kernels


def _positive(g, n):
    g = np.asarray(g, dtype=float)
    if g.shape != (n,):
        raise ValueError(f"g must have {n} entries")
    if np.any(~(g > 0)) or np.any(~np.isfinite(g)):
        raise ValueError("conformal weight must be finite and strictly positive")
    return g


def _apsp(W):
    W = np.array(W, dtype=float)
    np.fill_diagonal(W, 0.0)
    return _kernels.floyd_warshall(W)


def _edge_rule(space, g, rule):
    W = space.edge_weights
    fin = np.isfinite(W)
    pair = rule(g[:, None], g[None, :])
    return np.where(fin, np.where(fin, W, 0.0) * pair, np.inf)


def length_distance(space):
    """Infimal arc length ``d_ℓ``: shortest paths over the adjacency."""
    return _apsp(space.edge_weights)


def conformal_distance(space, g):
    """``d_g(x, y) = inf_γ ∫_γ g`` with the trapezoid arc integral."""
    g = _positive(g, space.n)
    return _apsp(_edge_rule(space, g, lambda a, b: (a + b) / 2))


def dual_lipschitz_distance(space, g):
    """``sup f(x) - f(y)`` over ``f`` with ``|f(u) - f(v)| <= dist(u,v) min(g(u), g(v))`` on edges."""
    g = _positive(g, space.n)
    return _apsp(_edge_rule(space, g, np.minimum))


def chain_distance(space, g, d_i=None, eps=np.inf):
    """Chain approximant with max-weights, capped at ``M_g sup d_i``.

    Chains step along adjacent pairs with ``d_i(x_{k-1}, x_k) < eps`` and pay
    ``max(g(x_{k-1}), g(x_k)) d_i(x_{k-1}, x_k)`` per step.

    Parameters
    ----------
    d_i : ndarray (n, n), optional
        Finite semidistance, defaults to ``space.dist`` (infinite entries
        simply admit no step).
    eps : float
        Step threshold.
    """
    g = _positive(g, space.n)
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = space.dist if d_i is None else np.asarray(d_i, dtype=float)
    ok = space.adjacency & np.isfinite(d) & (d < eps)
    W = np.where(ok, np.where(ok, d, 0.0) * np.maximum(g[:, None], g[None, :]), np.inf)
    D = _apsp(W)
    finite = d[np.isfinite(d)]
    cap = g.max() * (finite.max() if finite.size else 0.0)
    out = np.minimum(D, cap)
    np.fill_diagonal(out, 0.0)
    return out


def sandwich_residual(space, g, eps=np.inf):
    """Worst violation of ``dual <= trapezoid <= chain`` over pairs with finite ``d_ℓ``.

    Zero means the ordering holds exactly.
    """
    lo = dual_lipschitz_distance(space, g)
    mid = conformal_distance(space, g)
    hi = chain_distance(space, g, None, eps)
    fin = np.isfinite(length_distance(space))
    r1 = np.where(fin, lo - mid, -np.inf).max()
    r2 = np.where(fin, mid - hi, -np.inf).max()
    return float(max(r1, r2, 0.0))


def refinement_gaps(g_fn, N_list):
    """Endpoint distances on the interval path graph for each ``N``.

    Returns a list of dicts with the three endpoint values and the largest
    pairwise gap.
    """
    from .generators import interval_path

    rows = []
    for N in N_list:
        space, x = interval_path(N)
        g = g_fn(x)
        vals = (dual_lipschitz_distance(space, g)[0, -1],
                conformal_distance(space, g)[0, -1],
                chain_distance(space, g)[0, -1])
        rows.append({"N": N, "dual": float(vals[0]), "trapezoid": float(vals[1]),
                     "chain": float(vals[2]), "gap": float(max(vals) - min(vals))})
    return rows
