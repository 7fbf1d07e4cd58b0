"""Hopf-Lax flow ``Q_t f(x) = min_{y ∈ K} f(y) + δ(x,y)^q / (q t^{q-1})``.

``q`` is always the conjugate exponent of the global ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._report import Check, SuiteReport
from .modulus import check_p

TIE_TOL = 1e-12


class EmptyK(ValueError):
    pass


@dataclass
class HopfLaxState:
    """Flow values with minimiser sets and their extreme distances ``D^-, D^+``."""

    t: float
    values: np.ndarray
    minimizers: list
    dminus: np.ndarray
    dplus: np.ndarray


def _setup(f, space, K, delta):
    f = np.asarray(f, dtype=float)
    D = space.dist if delta is None else np.asarray(delta, dtype=float)
    n = D.shape[0]
    if f.shape != (n,):
        raise ValueError(f"f must have {n} entries")
    K = np.arange(n) if K is None else np.unique(np.asarray(list(K), dtype=np.int64))
    if K.size == 0:
        raise EmptyK("K must be nonempty")
    DK = D[:, K]
    if not np.all(np.isfinite(DK).any(axis=1)):
        raise ValueError("every node needs a finite distance to some point of K")
    return f, D, K, DK


def _eval(fK, DK, q, t):
    """Values, tie masks and D^± for one time (vectorised over nodes)."""
    with np.errstate(invalid="ignore"):
        F = fK[None, :] + DK ** q / (q * t ** (q - 1))
    val = F.min(axis=1)
    tie = F <= val[:, None] + TIE_TOL * np.maximum(1.0, np.abs(val))[:, None]
    dk = np.where(tie, DK, np.nan)
    return val, tie, np.nanmin(dk, axis=1), np.nanmax(dk, axis=1)


def qt(f, t, space, K=None, delta=None, p=2.0):
    """Hopf-Lax value at time ``t > 0`` with exact minimiser sets.

    Parameters
    ----------
    f : array_like (n,)
    t : float
    space : DiscreteSpace
    K : iterable of node indices, optional
        Candidate set, default all nodes.
    delta : ndarray (n, n), optional
        Semidistance, default ``space.dist``.
    p : float
        Global exponent; the flow uses ``q = p / (p - 1)``.
    """
    p = check_p(p)
    q = p / (p - 1)
    if not t > 0:
        raise ValueError("t must be positive")
    f, D, K, DK = _setup(f, space, K, delta)
    val, tie, dmin, dmax = _eval(f[K], DK, q, t)
    mins = [K[row] for row in tie]
    return HopfLaxState(float(t), val, mins, dmin, dmax)


def flow(f, times, space, K=None, delta=None, p=2.0):
    return [qt(f, t, space, K, delta, p) for t in times]


def parse_times(spec):
    """``"a:b:logN"`` (geometric) or ``"a:b:linN"`` or comma-separated values."""
    if ":" not in spec:
        return np.array(sorted(float(s) for s in spec.split(",")))
    a, b, how = spec.split(":")
    a, b = float(a), float(b)
    if how.startswith("log"):
        return np.geomspace(a, b, int(how[3:]))
    if how.startswith("lin"):
        return np.linspace(a, b, int(how[3:]))
    raise ValueError(f"bad time grid {spec!r}")


def write_trace(states, fh):
    fh.write("t,node,Q,Dminus,Dplus\n")
    for s in states:
        for x in range(s.values.size):
            fh.write(f"{float(s.t)!r},{x},{float(s.values[x])!r},{float(s.dminus[x])!r},{float(s.dplus[x])!r}\n")


# ------------------------------------------------------------------ estimates

def switch_times(fK, dK, q, t_max):
    """Times in ``(0, t_max)`` where two candidate costs cross.

    With ``u = t^{1-q}`` every candidate is the line ``f(y) + u δ^q / q``, so
    the minimiser set can only change at pairwise crossings.
    """
    b = dK ** q / q
    fin = np.isfinite(b)
    fK, b = fK[fin], b[fin]
    da = fK[None, :] - fK[:, None]
    db = b[:, None] - b[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = da / db
    u = u[np.isfinite(u) & (u > 0)]
    ts = u ** (-1 / (q - 1))
    return np.unique(ts[(ts > 0) & (ts < t_max)])


def slope_integral(fK, dK, q, t):
    """``∫_0^t (D_s / s)^q ds`` for one node, piecewise between switch times."""
    cuts = np.concatenate([[0.0], switch_times(fK, dK, q, t), [t]])
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        _, _, _, dplus = _eval(fK, dK[None, :], q, mid)
        D = float(dplus[0])
        if D == 0.0:
            continue
        # D is constant on the open piece and a > 0 because D vanishes near 0,
        # so the piece integrates in closed form
        total += D ** q * (a ** (1 - q) - b ** (1 - q)) / (q - 1)
    return total


def estimate_suite(f, space, times, delta=None, K=None, p=2.0):
    """Quantitative Hopf-Lax estimates on a time grid.

    Checks (each with worst residual, positive means violated):

    ``bounds``       ``min f <= Q_t f <= max f + S^q / (q t^{q-1})``
    ``d_monotone``   ``D_s^+ <= D_t^-`` for consecutive grid times; strict
                     violations counted, passes if at most ``n |K|``
    ``slope_cap``    ``(D_t^+ / t)^q <= min(q Osc f / t, (q Lip f)^p)``
    ``identity``     ``f - Q_t f = (1/p) ∫_0^t (D_s / s)^q ds``, residual
                     relative to ``1 + |f|``, tolerance 1e-6
    ``upper_slope``  ``(f - Q_t f) / t <= (1/p) L(x)^p`` at the smallest time,
                     ``L(x) = max_y (f(x) - f(y))_+ / δ(x, y)``
    ``squeeze``      ``(1/p)(D_s^+/t)^q (t-s) <= Q_s - Q_t <= (1/p)(D_t^-/s)^q (t-s)``
    ``time_lipschitz`` ``0 <= (Q_s - Q_t)/(t - s) <= (1/p)(q Lip f)^p``

    Checks other than ``bounds`` and ``d_monotone`` are evaluated at nodes of
    ``K`` (where ``Q_t f -> f`` as ``t -> 0``).
    """
    p = check_p(p)
    q = p / (p - 1)
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be positive and ascending")
    f, D, K, DK = _setup(f, space, K, delta)
    n = f.size
    fK = f[K]
    S = float(np.max(np.min(DK, axis=1)))
    inK = np.zeros(n, bool)
    inK[K] = True
    idx = np.flatnonzero(inK)
    states = [_eval(fK, DK, q, t) for t in times]
    Q = np.array([s[0] for s in states])
    Dm = np.array([s[2] for s in states])
    Dp = np.array([s[3] for s in states])

    checks = []
    lo = f.min() - Q
    hi = Q - (f.max() + S ** q / (q * times[:, None] ** (q - 1)))
    r = float(max(lo.max(), hi.max()))
    checks.append(Check("bounds", r <= 0, r))

    viol = Dp[:-1] - Dm[1:]
    count = int(np.sum(viol > 0))
    worst = float(max(viol.max(), 0.0)) if viol.size else 0.0
    checks.append(Check("d_monotone", count <= n * K.size, worst,
                        {"violations": count, "allowed": n * K.size}))

    fin = np.isfinite(D) & (D > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = np.where(fin, np.abs(f[:, None] - f[None, :]) / np.where(fin, D, 1.0), 0.0)
    lip = float(quot.max())
    osc = float(f.max() - f.min())
    cap = np.minimum(q * osc / times, (q * lip) ** p)
    lhs = (Dp[:, idx] / times[:, None]) ** q
    r = float(np.max(lhs - cap[:, None] * (1 + 1e-12) - 1e-300))
    checks.append(Check("slope_cap", r <= 0, r))

    worst = 0.0
    for x in idx:
        for k, t in enumerate(times):
            lhs = f[x] - Q[k, x]
            rhs = slope_integral(fK, DK[x], q, t) / p
            worst = max(worst, abs(lhs - rhs) / (1 + abs(f[x])))
    checks.append(Check("identity", worst <= 1e-6, worst))

    t0 = times[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.where(fin[:, K], np.maximum(f[:, None] - fK[None, :], 0) / np.where(fin[:, K], DK, 1.0), 0.0)
    L = pos.max(axis=1)
    r = float(np.max(((f - Q[0]) / t0 - L ** p / p * (1 + 1e-12))[idx]))
    checks.append(Check("upper_slope", r <= 1e-15, r))

    if times.size > 1:
        dt = np.diff(times)[:, None]
        dQ = (Q[:-1] - Q[1:])[:, idx]
        low = (Dp[:-1, idx] / times[1:, None]) ** q * dt / p
        high = (Dm[1:, idx] / times[:-1, None]) ** q * dt / p
        scale = 1e-12 * (1 + np.abs(Q[:-1, idx]))
        r_sq = float(max(np.max(low - dQ - scale), np.max(dQ - high - scale)))
        rate = dQ / dt
        r_lip = float(max(np.max(-rate), np.max(rate - (q * lip) ** p / p * (1 + 1e-9))))
    else:
        r_sq = r_lip = 0.0
    checks.append(Check("squeeze", r_sq <= 0, r_sq))
    checks.append(Check("time_lipschitz", r_lip <= 0, r_lip))
    return SuiteReport(checks)


@dataclass
class ChainReport:
    values: list
    passed: bool
    residual: float


def monotone_in_K(f, space, K_chain, t, delta=None, p=2.0):
    """Values along nested candidate sets are nonincreasing; last set gives ``Q_t f``."""
    chain = [np.unique(np.asarray(list(K), dtype=np.int64)) for K in K_chain]
    for a, b in zip(chain[:-1], chain[1:]):
        if not set(a.tolist()) <= set(b.tolist()):
            raise ValueError("K_chain must be nested")
    values = [qt(f, t, space, K, delta, p).values for K in chain]
    full = qt(f, t, space, None, delta, p).values
    inc = max((float(np.max(b - a)) for a, b in zip(values[:-1], values[1:])), default=0.0)
    covers = chain[-1].size == space.n
    final = float(np.max(np.abs(values[-1] - full))) if covers else np.inf
    res = max(inc, final)
    return ChainReport(values, covers and inc <= 0 and final == 0.0, res)


def monotone_in_delta(f, space, family, t, K=None, p=2.0):
    """``Q^{d_i}_t f`` nondecreasing in ``i``; top member reproduces ``Q_t f``."""
    states = [qt(f, t, space, K, d, p) for d in family.members]
    values = [s.values for s in states]
    full = qt(f, t, space, K, None, p)
    dec = max((float(np.max(a - b)) for a, b in zip(values[:-1], values[1:])), default=0.0)
    final = float(np.max(np.abs(values[-1] - full.values)))
    dexcess = float(np.max(states[-1].dplus - full.dplus - 1e-12))
    res = max(dec, final, dexcess)
    return ChainReport(values, dec <= 0 and final == 0.0 and dexcess <= 0, res)
