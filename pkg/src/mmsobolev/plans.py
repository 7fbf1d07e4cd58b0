"""Dynamic plans on finite arc sets, barycentric entropy and p-content."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._barrier import NonConvergence
from .arcs import ExplicitFamily, enumerate_family, measure_matrix
from .modulus import check_p, modulus_p, modulus_tilde_p

EPS = 1e-12
CONTENT_GAP = 1e-8
IDENTITY_TOL = 1e-5


class ConstantArcInFamily(ValueError):
    pass


@dataclass
class DynamicPlan:
    """Nonnegative weights on a finite list of arcs."""

    support: list
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.support),):
            raise ValueError("one weight per arc expected")
        if np.any(self.weights < 0):
            raise ValueError("plan weights must be nonnegative")

    @property
    def mass(self):
        """``π(Γ)``, the total weight."""
        return float(self.weights.sum())

    def scaled(self, c):
        return DynamicPlan(self.support, c * self.weights)


def conjugate(p):
    return p / (p - 1)


def barycenter(plan, space, tilde=False):
    """Barycenter masses ``μ_π`` and density ``h_π = μ_π / m``."""
    if not plan.support:
        mu = np.zeros(space.n)
    else:
        mu = measure_matrix(plan.support, space.n, tilde).T @ plan.weights
    return mu, mu / space.measure


def barycentric_entropy(plan, space, q, tilde=False):
    """``br_q(π) = ‖h_π‖_{L^q(m)}``."""
    _, h = barycenter(plan, space, tilde)
    return float((space.measure @ h ** q) ** (1 / q))


@dataclass
class TqReport:
    entropy: float
    initial: float
    final: float

    def as_tuple(self):
        return (self.entropy, self.initial, self.final)


def tq_membership(plan, space, q):
    """``(br_q(π), ‖d(e_0)_♯π/dm‖_q, ‖d(e_1)_♯π/dm‖_q)``; finite on finite spaces."""
    m = space.measure
    e0 = np.zeros(space.n)
    e1 = np.zeros(space.n)
    for a, w in zip(plan.support, plan.weights):
        e0[a.start] += w
        e1[a.end] += w
    norm = lambda mu: float((m @ (mu / m) ** q) ** (1 / q))
    return TqReport(barycentric_entropy(plan, space, q), norm(e0), norm(e1))


# --------------------------------------------------------------------- content

@dataclass
class ContentResult:
    """``value`` is ``Cont_p``; ``plan`` attains the Legendre supremum."""

    value: float
    plan: DynamicPlan | None
    legendre: float = 0.0          # sup π(Γ) - br_q^q / q
    gap: float = 0.0               # certified relative gap on Cont_p^p
    upper: float = 0.0             # Mod-side bound from h^{q-1}
    identity_residual: float = 0.0
    iterations: int = 0
    history: list = field(default_factory=list)   # (lower, upper) per check


def _arcs_of(family, space):
    return list(family.arcs) if isinstance(family, ExplicitFamily) else enumerate_family(family, space)


def _spg(fun_grad, project, x0, certify, max_iter=20000, memory=10):
    """Spectral projected gradient (nonmonotone Armijo) for minimisation.

    ``certify(x)`` is called every few iterations and returns ``True`` to stop.
    """
    x = project(x0)
    f, g = fun_grad(x)
    hist = [f]
    alpha = 1.0 / max(np.abs(g).max(), 1e-12)
    for it in range(1, max_iter + 1):
        d = project(x - alpha * g) - x
        if not np.any(d):
            if certify(x) or np.max(np.abs(project(x - g) - x)) == 0:
                return x, it
            alpha = 1.0
            continue
        gd = float(g @ d)
        fmax = max(hist[-memory:])
        lam = 1.0
        while True:
            xn = x + lam * d
            fn, gn = fun_grad(xn)
            if fn <= fmax + 1e-4 * lam * gd or lam < 1e-12:
                break
            lam *= 0.5
        s = xn - x
        y = gn - g
        x, f, g = xn, fn, gn
        hist.append(f)
        sy = float(s @ y)
        alpha = float(s @ s) / sy if sy > 0 else 1e6 * alpha
        alpha = min(max(alpha, 1e-14), 1e14)
        if it % 5 == 0 and certify(x):
            return x, it
    return x, max_iter


def content_p(family, space, p, *, tilde=False, gap_tol=CONTENT_GAP, max_iter=50000):
    """``Cont_p(Γ)`` through ``(1/p) Cont_p^p = sup_w π(Γ) - (1/q) br_q^q(π)``.

    The concave maximisation over ``w >= 0`` runs spectral projected gradient.
    It stops when ``f = h^{q-1}``, rescaled to satisfy every arc constraint,
    certifies a relative gap below ``gap_tol``.
    """
    p = check_p(p)
    q = conjugate(p)
    arcs = _arcs_of(family, space)
    m = space.measure
    if not arcs:
        return ContentResult(0.0, DynamicPlan([], np.zeros(0)))
    A = measure_matrix(arcs, space.n, tilde)
    if np.any(A.sum(axis=1) == 0):
        return ContentResult(np.inf, None)

    def fun_grad(w):
        h = (A.T @ w) / m
        hq1 = h ** (q - 1)
        return float(-(w.sum() - (m @ (hq1 * h)) / q)), -(1.0 - A @ hq1)

    def rescale(w):
        # optimal multiple of w for the Legendre objective
        s = w.sum()
        br_q = m @ ((A.T @ w) / m) ** q
        return w * (s / br_q) ** (1 / (q - 1)) if s > 0 else w

    state = {"lower": 0.0, "upper": np.inf, "history": []}

    def certify(w):
        w = rescale(w)
        h = (A.T @ w) / m
        s = w.sum()
        br = (m @ h ** q) ** (1 / q)
        lower = (s / br) ** p if br > 0 else 0.0
        f = h ** (q - 1)
        low_int = float(np.min(A @ f))
        upper = float(m @ (f / low_int) ** p) if low_int > 0 else np.inf
        state["lower"] = max(state["lower"], lower)
        state["upper"] = min(state["upper"], upper)
        state["history"].append((lower, upper))
        return state["upper"] - state["lower"] <= gap_tol * max(state["upper"], EPS)

    w0 = rescale(np.ones(len(arcs)))
    w, iters = _spg(fun_grad, lambda w: np.maximum(w, 0.0), w0, certify, max_iter=max_iter)
    w = rescale(w)
    certify(w)
    lower, upper = state["lower"], state["upper"]
    gap = (upper - lower) / max(upper, EPS)
    if gap > gap_tol * 100:
        raise NonConvergence(f"content gap {gap:.3g} above tolerance",
                             best=(lower, upper))
    h = (A.T @ w) / m
    brq = float(m @ h ** q)
    cont_pp = lower
    legendre = float(w.sum() - brq / q)
    ident = max(abs(w.sum() - cont_pp), abs(brq - cont_pp)) / max(cont_pp, EPS)
    return ContentResult(cont_pp ** (1 / p), DynamicPlan(arcs, w), legendre, gap, upper,
                         ident, iters, state["history"])


def _project_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def content_ratio_form(family, space, p, *, tilde=False, tol=1e-12, max_iter=50000):
    """``Cont_p = sup_{π ≠ 0} π(Γ) / br_q(π) = 1 / min_{w ∈ simplex} br_q(w)``.

    Independent of :func:`content_p`: minimises ``br_q^q`` over the
    probability simplex by spectral projected gradient.
    """
    p = check_p(p)
    q = conjugate(p)
    arcs = _arcs_of(family, space)
    m = space.measure
    if not arcs:
        return 0.0
    A = measure_matrix(arcs, space.n, tilde)
    if np.any(A.sum(axis=1) == 0):
        return np.inf

    def fun_grad(w):
        h = (A.T @ w) / m
        return float(m @ h ** q), q * (A @ h ** (q - 1))

    last = {"f": np.inf}

    def certify(w):
        f, g = fun_grad(w)
        # Frank-Wolfe gap bounds f - f* for the convex objective
        fw = float(g @ w - g.min())
        done = fw <= tol * max(f, EPS) or (fw <= 1e-9 * max(f, EPS) and abs(last["f"] - f) <= 1e-16 * f)
        last["f"] = f
        return done

    w, _ = _spg(fun_grad, _project_simplex, np.full(len(arcs), 1.0 / len(arcs)), certify,
                max_iter=max_iter)
    return float(fun_grad(w)[0] ** (-1 / q))


# --------------------------------------------------------------------- duality

@dataclass
class DualityReport:
    primal: float
    dual: float
    gap: float
    slackness: float = 0.0
    identity_residual: float = 0.0
    density: np.ndarray | None = None
    plan: DynamicPlan | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self, space=None):
        def num(x):
            return float(x) if np.isfinite(x) else "inf"
        out = {"primal": num(self.primal), "dual": num(self.dual), "gap": num(self.gap),
               "slackness": num(self.slackness), "identityResidual": num(self.identity_residual)}
        if self.density is not None:
            out["density"] = self.density.tolist()
        if self.plan is not None and space is not None:
            out["plan"] = [{"path": [_plain(space.nodes[v]) for v in a.nodes], "weight": float(w)}
                           for a, w in zip(self.plan.support, self.plan.weights) if w > 0]
        out.update(self.extra)
        return out


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


def support_mask(weights, rel=1e-6):
    return weights > rel * weights.max() if weights.size and weights.max() > 0 else np.zeros(weights.shape, bool)


def duality_certificate(family, space, p, *, tilde=False):
    """Independent ``Mod_p`` and ``Cont_p^p`` solves with slackness residual."""
    p = check_p(p)
    mod = (modulus_tilde_p if tilde else modulus_p)(family, space, p)
    cont = content_p(family, space, p, tilde=tilde)
    cpp = cont.value ** p
    if not np.isfinite(mod.value) or not np.isfinite(cpp):
        gap = 0.0 if mod.value == cpp else np.inf
        return DualityReport(mod.value, cpp, gap)
    gap = abs(mod.value - cpp) / max(mod.value, EPS)
    slack = 0.0
    if cont.plan is not None and cont.plan.support and mod.density is not None:
        A = measure_matrix(cont.plan.support, space.n, tilde)
        on = support_mask(cont.plan.weights)
        if on.any():
            slack = float(np.max(np.abs(A[on] @ mod.density - 1.0)))
    return DualityReport(mod.value, cpp, gap, slack, cont.identity_residual, mod.density, cont.plan,
                         {"modulusGap": mod.gap, "contentGap": cont.gap})


def weak_duality_residual(plan, density, space, p, tilde=False):
    """``π(Γ) - br_q(π) ‖f‖_{L^p(m)}``; nonpositive whenever ``f`` is admissible on the support."""
    q = conjugate(p)
    return plan.mass - barycentric_entropy(plan, space, q, tilde) * float(
        (space.measure @ np.abs(density) ** p) ** (1 / p))
