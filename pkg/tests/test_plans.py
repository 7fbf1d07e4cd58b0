import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmsobolev.arcs import Arc, ConnectorFamily, ExplicitFamily, enumerate_family
from mmsobolev.generators import connector_instance, random_connected_graph
from mmsobolev.modulus import modulus_p
from mmsobolev.plans import (DynamicPlan, barycenter, barycentric_entropy, content_p,
                             content_ratio_form, duality_certificate, tq_membership,
                             weak_duality_residual)


def test_unit_plan_on_edge(two_node):
    arc = Arc.on(two_node, [0, 1])
    plan = DynamicPlan([arc], [1.0])
    mu, h = barycenter(plan, two_node)
    assert np.allclose(mu, [0.5, 0.5]) and np.allclose(h, [0.5, 0.5])
    for q in (1.5, 2.0, 3.0):
        assert barycentric_entropy(plan, two_node, q) == pytest.approx(2 ** (1 / q) / 2)
    assert tq_membership(plan, two_node, 2.0).as_tuple() == pytest.approx((2 ** -0.5, 1.0, 1.0))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_two_node_content(two_node, p):
    fam = ExplicitFamily([Arc.on(two_node, [0, 1])])
    assert content_p(fam, two_node, p).value == pytest.approx(2 ** (1 / p), rel=1e-6)
    assert content_ratio_form(fam, two_node, p) == pytest.approx(2 ** (1 / p), rel=1e-6)
    rep = duality_certificate(fam, two_node, p)
    assert rep.gap <= 1e-6 and rep.slackness <= 1e-6


def test_path_duality(path3):
    rep = duality_certificate(ConnectorFamily([0], [2], 2), path3, 2.0)
    assert rep.primal == pytest.approx(2 / 3, rel=1e-6)
    assert rep.dual == pytest.approx(2 / 3, rel=1e-6)
    assert rep.identity_residual <= 1e-5


def test_empty_and_constant(two_node):
    assert content_p(ExplicitFamily([]), two_node, 2).value == 0.0
    const = ExplicitFamily([Arc.on(two_node, [1])])
    assert content_p(const, two_node, 2).value == np.inf
    rep = duality_certificate(const, two_node, 2)
    assert rep.primal == rep.dual == np.inf and rep.gap == 0.0


@given(seed=st.integers(0, 10 ** 6), c=st.floats(0.1, 10.0))
def test_entropy_homogeneous_and_convex(seed, c):
    rng = np.random.default_rng(seed)
    sp = random_connected_graph(rng, 6)
    arcs = enumerate_family(connector_instance(rng, sp, 30), sp)
    w1, w2 = rng.random((2, len(arcs)))
    q = float(rng.choice([1.5, 2.0, 3.0]))
    b = lambda w: barycentric_entropy(DynamicPlan(arcs, w), sp, q)
    assert b(c * w1) == pytest.approx(c * b(w1), rel=1e-10)
    assert b(0.5 * (w1 + w2)) <= 0.5 * (b(w1) + b(w2)) * (1 + 1e-12)


@given(seed=st.integers(0, 10 ** 6), p=st.sampled_from([1.5, 2.0, 3.0]))
def test_weak_duality_for_admissible_densities(seed, p):
    rng = np.random.default_rng(seed)
    sp = random_connected_graph(rng, 6)
    fam = connector_instance(rng, sp, 30)
    arcs = enumerate_family(fam, sp)
    plan = DynamicPlan(arcs, rng.random(len(arcs)))
    f = modulus_p(fam, sp, p).density * (1 + rng.random(sp.n))
    assert weak_duality_residual(plan, f, sp, p) <= 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_content_routes_agree(seed):
    rng = np.random.default_rng(seed)
    sp = random_connected_graph(rng, 7)
    fam = connector_instance(rng, sp, 60)
    for p in (1.5, 3.0):
        a = content_p(fam, sp, p).value
        b = content_ratio_form(fam, sp, p)
        assert a == pytest.approx(b, rel=1e-6)
        assert a ** p == pytest.approx(modulus_p(fam, sp, p).value, rel=1e-5)


def test_scaled_measure(path3):
    fam = ConnectorFamily([0], [2], 2)
    base = content_p(fam, path3, 2.0).value
    from mmsobolev.space import DiscreteSpace
    scaled = DiscreteSpace.from_edges([(0, 1, 1.0), (1, 2, 1.0)], 4.0 * path3.measure)
    assert content_p(fam, scaled, 2.0).value == pytest.approx(2.0 * base, rel=1e-6)


def test_plan_validation(two_node):
    with pytest.raises(ValueError):
        DynamicPlan([Arc.on(two_node, [0, 1])], [-1.0])
    with pytest.raises(ValueError):
        DynamicPlan([Arc.on(two_node, [0, 1])], [1.0, 2.0])
