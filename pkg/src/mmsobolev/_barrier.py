"""Log-barrier Newton method for power objectives under linear inequalities.

Solves::

    minimize    Σ_{j<k} w_j z_j^p  +  c·z
    subject to  G z <= h,   z_j > 0 for j < k

where the first ``k`` coordinates carry the power term and a sign constraint
and the remaining coordinates are free.  The caller supplies a strictly
feasible start.
"""
from dataclasses import dataclass

import numpy as np


class NonConvergence(RuntimeError):
    """Iteration cap reached; ``best`` carries whatever bounds are available."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass
class BarrierResult:
    z: np.ndarray
    lam: np.ndarray      # multipliers of G z <= h
    nu: np.ndarray       # multipliers of z_j >= 0, j < k
    value: float
    gap: float           # barrier duality-gap bound (constraints / t)
    newton_steps: int


def solve(w, p, c, G, h, z0, k, rel_tol=1e-11, abs_tol=1e-15, mu=16.0, max_newton=4000):
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    z = np.array(z0, dtype=float)
    nrow = G.shape[0]
    ncon = nrow + k

    def F(z):
        return float(w @ z[:k] ** p + c @ z)

    def slack(z):
        return h - G @ z

    s = slack(z)
    if np.any(s <= 0) or np.any(z[:k] <= 0):
        raise ValueError("barrier start is not strictly feasible")
    if ncon == 0:
        raise ValueError("barrier problem without constraints")

    def phi(z, t):
        s = slack(z)
        zk = z[:k]
        if np.any(s <= 0) or np.any(zk <= 0):
            return np.inf
        return t * F(z) - np.log(s).sum() - np.log(zk).sum()

    t = ncon / max(abs(F(z)), 1.0)
    steps = 0
    while True:
        # centering
        for _ in range(100):
            s = slack(z)
            zk = z[:k]
            g = t * c.copy()
            g[:k] += t * w * p * zk ** (p - 1) - 1.0 / zk
            g += G.T @ (1.0 / s)
            H = (G.T * (1.0 / s ** 2)) @ G
            diag = np.zeros(z.size)
            diag[:k] = t * w * p * (p - 1) * zk ** (p - 2) + 1.0 / zk ** 2
            H[np.diag_indices_from(H)] += diag
            try:
                dz = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                dz = -np.linalg.lstsq(H, g, rcond=None)[0]
            dec = -float(g @ dz)
            steps += 1
            if dec / 2 <= 1e-11 or not np.isfinite(dec):
                break
            # largest step keeping strict feasibility
            Gd = G @ dz
            amax = 1.0
            pos = Gd > 0
            if np.any(pos):
                amax = min(amax, 0.99 * float(np.min(s[pos] / Gd[pos])))
            neg = dz[:k] < 0
            if np.any(neg):
                amax = min(amax, 0.99 * float(np.min(-zk[neg] / dz[:k][neg])))
            a = amax
            if dec > 0.2:
                # damped phase; inside the quadratic region the full step is
                # taken because t*F swamps the Armijo test in floating point
                f0 = phi(z, t)
                while phi(z + a * dz, t) > f0 - 0.25 * a * dec:
                    a *= 0.5
                    if a < 1e-16:
                        break
                if a < 1e-16:
                    break
            z = z + a * dz
            if steps > max_newton:
                raise NonConvergence("barrier Newton cap reached",
                                     best=BarrierResult(z, 1 / (t * slack(z)), 1 / (t * z[:k]),
                                                        F(z), ncon / t, steps))
        if ncon / t <= rel_tol * abs(F(z)) + abs_tol:
            break
        t *= mu
    s = slack(z)
    return BarrierResult(z, 1.0 / (t * s), 1.0 / (t * z[:k]), F(z), ncon / t, steps)
