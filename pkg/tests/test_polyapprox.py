from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.interpolate import BPoly

from mmsobolev import polyapprox
from mmsobolev.polyapprox import (DegreeCapExceeded, bernstein, joint_lipschitz_audit, smooth_max,
                                  trunc_poly)


@pytest.fixture(scope="module")
def smax():
    return smooth_max(1.0, 0.05)


@pytest.fixture(scope="module")
def trunc():
    return trunc_poly(2.0, -1.0, 1.0, 0.1)


@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 200), c=st.floats(0.1, 10))
def test_matches_scipy_bernstein(seed, n, c):
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=2 * n + 1)
    P = bernstein(coef, c, n)
    x = rng.uniform(-c, c, 50)
    ref = BPoly(coef[:, None], [-c, c])
    assert np.allclose(P(x), ref(x), atol=1e-9 * max(1, np.abs(coef).max()))
    assert np.allclose(P.derivative(x), ref.derivative()(x), atol=1e-7 * n * max(1, np.abs(coef).max()) / c)


@given(a=st.floats(-5, 5), b=st.floats(-5, 5), n=st.integers(1, 300), c=st.floats(0.1, 10))
def test_affine_reproduction(a, b, n, c):
    P = bernstein(lambda r: a * r + b, c, n)
    x = np.linspace(-c, c, 101)
    assert np.max(np.abs(P(x) - (a * x + b))) <= 1e-12 * max(1, abs(a) * c + abs(b)) * 8


def test_positive_part_error_small_degree():
    P = bernstein(lambda r: np.maximum(r, 0), 4.0, 32)   # degree 64
    assert P.degree == 64
    x = np.linspace(-4, 4, 4096)
    assert np.max(np.abs(P(x) - np.maximum(x, 0))) <= 0.25


@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 60))
def test_shape_preservation(seed, n):
    rng = np.random.default_rng(seed)
    coef = np.cumsum(rng.random(2 * n + 1))
    P = bernstein(coef, 1.0, n)
    x = np.linspace(-1, 1, 301)
    v = P(x)
    assert np.all(P.derivative(x) >= -1e-12)
    assert v.min() >= coef[0] - 1e-12 and v.max() <= coef[-1] + 1e-12


def test_monomial_exact():
    P = bernstein(lambda r: np.maximum(r, 0), 2.0, 5)
    coeffs = P.to_monomial()
    assert all(isinstance(a, Fraction) for a in coeffs)
    for r in (Fraction(-3, 2), Fraction(0), Fraction(1, 3), Fraction(2)):
        assert float(P.eval_exact(r, coeffs)) == pytest.approx(float(P(np.array([float(r)]))[0]), abs=1e-13)
    Q = bernstein(lambda r: 3 * r - 1, 1.0, 3)
    assert Q.to_monomial() == [Fraction(-1), Fraction(3), 0, 0, 0, 0, 0]
    odd = bernstein(lambda r: np.clip(r, -1, 1), 2.0, 4, odd=True)
    assert odd.eval_exact(0) == 0


def test_bernstein_argument_checks():
    with pytest.raises(ValueError):
        bernstein([1.0, 2.0], 1.0, 1)
    with pytest.raises(ValueError):
        bernstein(np.abs, -1.0, 2)
    with pytest.raises(DegreeCapExceeded):
        bernstein(np.abs, 1.0, polyapprox.MAX_DEGREE)


def test_trunc_certificate(trunc):
    P = trunc
    a = P.audit
    assert P.odd and P(np.array([0.0]))[0] == 0.0
    assert a["grid_error"] <= 0.05 and a["certified_error"] <= 0.1
    x = np.random.default_rng(1).uniform(-2, 2, 20000)
    v = P(x)
    assert np.all(v >= -1 - 1e-12) and np.all(v <= 1 + 1e-12)
    assert np.max(np.abs(v - np.clip(x, -1, 1))) <= 0.1
    d = P.derivative(x)
    assert d.min() >= -1e-12 and d.max() <= 1 + 1e-12


def test_trunc_asymmetric_not_odd():
    P = trunc_poly(1.0, 0.0, 1.0, 0.2)
    assert not P.odd and P.audit["certified_error"] <= 0.2


def test_trunc_rejects():
    with pytest.raises(ValueError):
        trunc_poly(2.0, 1.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        trunc_poly(0.5, -1.0, 1.0, 0.1)
    with pytest.raises(DegreeCapExceeded):
        trunc_poly(2.0, -1.0, 1.0, 1e-4)


def test_failed_audit_never_returns(monkeypatch):
    def bad(*args):
        return {"grid_error": 1.0, "certified_error": 1.0, "lower": 0, "upper": 0, "dmin": 0,
                "dmax": 0, "origin": 0}
    monkeypatch.setattr(polyapprox, "_trunc_audit", bad)
    with pytest.raises(DegreeCapExceeded):
        trunc_poly(2.0, -1.0, 1.0, 0.5)


def test_smooth_max_certificate(smax):
    Q = smax
    rng = np.random.default_rng(3)
    r, s = rng.uniform(-1, 1, (2, 20000))
    v = Q(r, s)
    assert np.all(v >= np.minimum(r, s) - 1e-12) and np.all(v <= np.maximum(r, s) + 1e-12)
    assert np.max(np.abs(v - np.maximum(r, s))) <= 0.05
    assert np.max(np.abs(Q(r, r) - r)) <= 1e-12
    dr, ds = Q.partials(r, s)
    assert np.all(dr >= -1e-12) and np.all(ds >= -1e-12) and np.allclose(dr + ds, 1)
    assert joint_lipschitz_audit(Q, rng, 100_000) <= 1 + 1e-9
    assert Q.to_json()["P"]["degree"] == Q.degree


def test_smooth_max_rejects():
    with pytest.raises(ValueError):
        smooth_max(0.0, 0.1)
