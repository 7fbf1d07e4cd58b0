"""Certified Bernstein approximants: truncations ``P_ε`` and the smooth max ``Q_ε``.

Polynomials are stored by their Bernstein coefficients on ``[-c, c]``,

    P(r) = Σ_{k=-n}^{n} φ(c k / n) C(2n, k+n) (r + c)^{n+k} (c - r)^{n-k} / (2c)^{2n},

and evaluated with binomial weights computed in log space, which is stable
up to the degree cap.  Exact monomial coefficients are available as
rationals via :meth:`Poly.to_monomial`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from scipy.special import gammaln, xlogy

MAX_DEGREE = 2 ** 12
AUDIT_POINTS = 10_000
TOL = 1e-12  # floating slack on bound audits
FD_STEP = 1e-4


class DegreeCapExceeded(ValueError):
    pass


class CertificationError(RuntimeError):
    pass


def _weights(u, N, chunk_bytes=2 ** 25):
    """Rows ``C(N, j) u^j (1-u)^{N-j}``, ``j = 0..N``, yielded per chunk."""
    j = np.arange(N + 1)
    logc = gammaln(N + 1) - gammaln(j + 1) - gammaln(N - j + 1)
    step = max(1, chunk_bytes // (8 * (N + 1)))
    for a in range(0, u.size, step):
        uu = u[a:a + step, None]
        B = np.exp(logc + xlogy(j, uu) + xlogy(N - j, 1 - uu))
        # the weights sum to one exactly; renormalising keeps P a convex
        # combination of its coefficients in floating point
        yield a, B / B.sum(axis=1, keepdims=True)


def _bern_eval(coef, c, r):
    N = coef.size - 1
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    if N == 0:
        return np.full(r.shape, coef[0])
    u = np.clip((flat + c) / (2 * c), 0.0, 1.0)
    out = np.empty(flat.size)
    for a, B in _weights(u, N):
        out[a:a + B.shape[0]] = B @ coef
    return out.reshape(r.shape)


@dataclass(frozen=True)
class Poly:
    """Polynomial of degree ``2n`` on ``[-c, c]`` in Bernstein form.

    Attributes
    ----------
    coef : ndarray (2n + 1,)
        Bernstein coefficients (the samples ``φ(c k / n)``).
    c : float
        Half-width of the interval of validity.
    odd : bool
        Evaluate as ``(P(r) - P(-r)) / 2`` so ``P(0) = 0`` exactly.
    audit : dict
        Residuals recorded by the certifying constructor.
    """

    coef: np.ndarray
    c: float
    odd: bool = False
    audit: dict = field(default_factory=dict, compare=False)
    bound: int = MAX_DEGREE

    @property
    def degree(self):
        return self.coef.size - 1

    def __call__(self, r):
        if self.odd:
            r = np.asarray(r, dtype=float)
            return 0.5 * (_bern_eval(self.coef, self.c, r) - _bern_eval(self.coef, self.c, -r))
        return _bern_eval(self.coef, self.c, r)

    def derivative(self, r):
        """Exact derivative: ``N / (2c)`` times the Bernstein form of the coefficient differences."""
        N = self.degree
        if N == 0:
            return np.zeros(np.shape(r))
        d = np.diff(self.coef) * (N / (2 * self.c))
        if self.odd:
            r = np.asarray(r, dtype=float)
            return 0.5 * (_bern_eval(d, self.c, r) + _bern_eval(d, self.c, -r))
        return _bern_eval(d, self.c, r)

    def to_monomial(self):
        """Exact monomial coefficients ``a_0, ..., a_N`` in ``r`` (as ``Fraction``).

        Cost is quadratic in the degree with growing rationals; intended
        for moderate degrees.
        """
        N = self.degree
        phi = [Fraction(float(v)) for v in self.coef]
        if self.odd:
            phi = [(phi[j] - phi[N - j]) / 2 for j in range(N + 1)]
        # power basis in u = (r + c) / 2c: a_k = C(N, k) Δ^k φ_0
        diffs = phi[:]
        a = []
        for k in range(N + 1):
            a.append(comb(N, k) * diffs[0])
            diffs = [diffs[i + 1] - diffs[i] for i in range(len(diffs) - 1)]
        # substitute u = α r + β by Horner on polynomials
        c = Fraction(float(self.c))
        al, be = 1 / (2 * c), Fraction(1, 2)
        out = [Fraction(0)]
        for coeff in reversed(a):
            nxt = [Fraction(0)] * (len(out) + 1)
            for i, v in enumerate(out):
                nxt[i] += v * be
                nxt[i + 1] += v * al
            nxt[0] += coeff
            out = nxt
        return out[:N + 1]

    def eval_exact(self, r, coeffs=None):
        """Horner evaluation of the exact monomial form at a rational point."""
        coeffs = self.to_monomial() if coeffs is None else coeffs
        r = Fraction(r)
        acc = Fraction(0)
        for a in reversed(coeffs):
            acc = acc * r + a
        return acc

    def to_json(self):
        return {"basis": "bernstein", "c": float(self.c), "degree": int(self.degree),
                "odd": bool(self.odd), "coefficients": [float(v) for v in self.coef],
                "audit": {k: float(v) for k, v in self.audit.items()}}


def bernstein(phi, c, n, odd=False):
    """Bernstein approximant of degree ``2n`` on ``[-c, c]``.

    Parameters
    ----------
    phi : callable or array_like (2n + 1,)
        Function, or its samples at ``c k / n`` for ``k = -n..n``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    if 2 * n > MAX_DEGREE:
        raise DegreeCapExceeded(f"degree {2 * n} exceeds {MAX_DEGREE}")
    c = float(c)
    if not c > 0:
        raise ValueError("c must be positive")
    if callable(phi):
        coef = np.asarray(phi(c * np.arange(-n, n + 1) / n), dtype=float)
    else:
        coef = np.asarray(phi, dtype=float)
        if coef.shape != (2 * n + 1,):
            raise ValueError(f"expected {2 * n + 1} samples")
    if odd:
        coef = 0.5 * (coef - coef[::-1])
    return Poly(coef.copy(), c, odd)


def _search(build, audit_ok, start=1):
    """Smallest ``n`` (doubling, then bisection) whose approximant passes ``audit_ok``."""
    n = start
    while True:
        if 2 * n > MAX_DEGREE:
            raise DegreeCapExceeded(f"no certified approximant with degree <= {MAX_DEGREE}")
        P = build(n)
        if audit_ok(P):
            break
        n *= 2
    lo, hi, best = n // 2, n, P
    while hi - lo > 1:
        mid = (lo + hi) // 2
        cand = build(mid)
        if audit_ok(cand):
            hi, best = mid, cand
        else:
            lo = mid
    return best


def _trunc_audit(P, alpha, beta, eps, c):
    x = np.linspace(-c, c, AUDIT_POINTS)
    h = x[1] - x[0]
    v = P(x)
    dv = P.derivative(x)
    target = np.clip(x, alpha, beta)
    err = float(np.max(np.abs(v - target)))
    m = int(round(2 * c / FD_STEP))
    fv = P(np.linspace(-c, c, m + 1))
    fd = np.diff(fv) / (2 * c / m)
    # difference quotients carry rounding of order eps |P| / step
    fd_slack = 64 * np.finfo(float).eps * max(1.0, float(np.abs(fv).max())) * m / (2 * c)
    return {
        "grid_error": err,
        "certified_error": err + h,  # |P - clamp| is 1-Lipschitz
        "lower": float(alpha - v.min()),
        "upper": float(v.max() - beta),
        "dmin": float(max(-dv.min(), -fd.min() - fd_slack)),
        "dmax": float(max(dv.max() - 1, fd.max() - 1 - fd_slack)),
        "origin": float(abs(P(np.array([0.0]))[0])) if P.odd else 0.0,
    }


def trunc_poly(c, alpha, beta, eps):
    """Certified ``P`` with ``|P - α∨r∧β| <= ε``, ``α <= P <= β``, ``0 <= P' <= 1`` on ``[-c, c]``.

    The degree is the smallest ``2n`` whose 10⁴-point audit shows grid error
    ``<= ε/2`` and grid error plus spacing ``<= ε``.  For ``α = -β`` the
    result is odd.
    """
    c, alpha, beta, eps = float(c), float(alpha), float(beta), float(eps)
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if c < max(abs(alpha), abs(beta)):
        raise ValueError("need c >= max(|alpha|, |beta|)")
    odd = alpha == -beta
    phi = lambda r: np.clip(r, alpha, beta)

    def ok(P):
        a = _trunc_audit(P, alpha, beta, eps, c)
        P.audit.update(a)
        return (a["grid_error"] <= eps / 2 and a["certified_error"] <= eps and a["lower"] <= TOL
                and a["upper"] <= TOL and a["dmin"] <= TOL and a["dmax"] <= TOL and a["origin"] == 0.0)

    return _search(lambda n: bernstein(phi, c, n, odd), ok)


@dataclass(frozen=True)
class SmoothMax:
    """``Q(r, s) = r + P(s - r) - P(0)`` with ``P`` the ``r_+`` approximant on ``[-4c, 4c]``."""

    P: Poly
    c: float
    eps: float
    audit: dict = field(default_factory=dict, compare=False)

    def __call__(self, r, s):
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        return r + (self.P(s - r) - self.P(np.zeros(1))[0])

    def partials(self, r, s):
        d = self.P.derivative(np.asarray(s, dtype=float) - np.asarray(r, dtype=float))
        return 1 - d, d

    @property
    def degree(self):
        return self.P.degree

    def to_json(self):
        return {"form": "r + P(s - r) - P(0)", "c": float(self.c), "eps": float(self.eps),
                "P": self.P.to_json(), "audit": {k: float(v) for k, v in self.audit.items()}}


def _osc_audit(P, c):
    x = np.linspace(-2 * c, 2 * c, AUDIT_POINTS)
    e = P(x) - np.maximum(x, 0.0)
    d = P.derivative(x)
    return {"osc": float(e.max() - e.min() + (x[1] - x[0])), "dmin": float(-d.min()),
            "dmax": float(d.max() - 1)}


def joint_lipschitz_audit(Q, rng, pairs=100_000):
    """Largest ``|Q(r2,s2) - Q(r1,s1)| / max(|Δr|, |Δs|)`` over random pairs in ``[-c, c]²``."""
    c = Q.c
    a = rng.uniform(-c, c, size=(pairs, 4))
    dq = np.abs(Q(a[:, 2], a[:, 3]) - Q(a[:, 0], a[:, 1]))
    den = np.maximum(np.abs(a[:, 2] - a[:, 0]), np.abs(a[:, 3] - a[:, 1]))
    return float(np.max(dq / den))


def smooth_max(c, eps, rng=None, pairs=100_000):
    """Certified smooth max ``Q_ε`` on ``[-c, c]²``.

    Since ``Q - r∨s = (P - r_+)(s - r) - (P - r_+)(0)``, the degree is the
    smallest one whose ``P - r_+`` oscillates by at most ``ε`` on
    ``[-2c, 2c]`` (grid value plus spacing).  The result is then audited on a
    256² grid (bounds, error, partials) and on random pairs (joint 1-Lipschitz).
    """
    c, eps = float(c), float(eps)
    if not c > 0 or not eps > 0:
        raise ValueError("c and eps must be positive")
    rng = np.random.default_rng(0) if rng is None else rng
    big = 4 * c

    def ok(P):
        a = _osc_audit(P, c)
        P.audit.update(a)
        return a["osc"] <= eps and a["dmin"] <= TOL and a["dmax"] <= TOL

    P = _search(lambda n: bernstein(lambda r: np.maximum(r, 0.0), big, n), ok)
    Q = SmoothMax(P, c, eps)
    g = np.linspace(-c, c, 256)
    R, S = np.meshgrid(g, g, indexing="ij")
    V = Q(R, S)
    dr, ds = Q.partials(R, S)
    audit = {
        "lower": float(np.max(np.minimum(R, S) - V)),
        "upper": float(np.max(V - np.maximum(R, S))),
        "error": float(np.max(np.abs(V - np.maximum(R, S)))),
        "partial_min": float(-min(dr.min(), ds.min())),
        "partial_max": float(max(dr.max(), ds.max()) - 1),
        "diagonal": float(np.max(np.abs(Q(g, g) - g))),
        "joint_lipschitz": joint_lipschitz_audit(Q, rng, pairs),
    }
    Q.audit.update(audit)
    scale = TOL * max(1.0, c)
    if not (audit["lower"] <= scale and audit["upper"] <= scale and audit["error"] <= eps
            and audit["partial_min"] <= TOL and audit["partial_max"] <= TOL
            and audit["joint_lipschitz"] <= 1 + 1e-9):
        raise CertificationError(f"smooth max audit failed: {audit}")
    return Q
