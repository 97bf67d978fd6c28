import numpy as np
import pytest

import oracles
from metastable import (
    IsotropicGaussian,
    Kind,
    StateDependentGaussian,
    TruncatedGaussian,
    build_graph,
    chain_closure,
    find_critical_points,
    get_objective,
    interpretable_bounds,
    saddle_connections,
)
from graphutil import make_graph
from metastable.errors import StillInfinite, UnsupportedModel
from metastable.graph import emit_dot, graph_csv, target_nodes

SIGMA2 = 2500.0


def test_target_nodes_tolerance_and_override():
    assert target_nodes([1.0, 0.0, 0.0 + 1e-12, 2.0]) == frozenset({1, 2})
    assert target_nodes([1.0, 0.0], override=[0]) == frozenset({0})
    with pytest.raises(ValueError):
        target_nodes([1.0, 0.0], override=[])


def test_camel_direct_costs(camel, camel_roles):
    g = camel.graph
    r = camel_roles
    f = camel.values
    # uphill: 2 * (f_j - f_i) / sigma^2; downhill: 0
    assert g.q[r["mid"], r["s_t"]] == pytest.approx(
        2.0 * (f[r["s_t"]] - f[r["mid"]]) / SIGMA2
    )
    assert g.q[r["s_t"], r["mid"]] == 0.0
    assert g.q[r["low"], r["s_mid"]] == pytest.approx(
        2.0 * (f[r["s_mid"]] - f[r["low"]]) / SIGMA2
    )
    # non-adjacent pairs are infinite before closure
    assert np.isinf(g.q[r["t"], r["low"]])
    assert g.target_set == frozenset({r["t"]})
    np.testing.assert_allclose(np.diag(g.q), 0.0)


def test_direct_edge_finiteness_symmetry(camel, styblinski, himmelblau):
    for scene in (camel, styblinski, himmelblau):
        q = scene.graph.q
        for (i, j) in scene.graph.edges:
            assert (j, i) in scene.graph.edges
            assert np.isfinite(q[i, j]) and np.isfinite(q[j, i])


def test_downhill_edges_cost_zero(camel, styblinski, himmelblau):
    for scene in (camel, styblinski, himmelblau):
        g = scene.graph
        for (i, j) in g.edges:
            if scene.values[j] <= scene.values[i]:
                assert g.q[i, j] == 0.0
            else:
                assert g.q[i, j] > 0.0


def test_himmelblau_targets_and_costs(himmelblau):
    g = himmelblau.graph
    minima = {p.index for p in himmelblau.cps if p.kind == Kind.MINIMUM}
    assert g.target_set == frozenset(minima)
    for (i, j) in g.edges:
        if i in minima and himmelblau.cps[j].kind == Kind.SADDLE:
            assert g.q[i, j] == pytest.approx(
                2.0 * himmelblau.values[j] / SIGMA2
            )


def test_build_graph_rejects_non_gaussian(camel):
    with pytest.raises(UnsupportedModel):
        build_graph(camel.cps, camel.conns, TruncatedGaussian(1.0, 16.0, 2))


def test_single_node_graph():
    obj = get_objective("quadratic_bowl")
    cps = find_critical_points(obj, 5)
    g = build_graph(cps, saddle_connections(obj, cps),
                    IsotropicGaussian(SIGMA2, 2))
    assert g.n == 1
    assert g.edges == set()
    closed = chain_closure(g)
    assert closed.q[0, 0] == 0.0


def test_closure_three_node_line():
    g = make_graph(
        [[0.0, 1.0, np.inf], [np.inf, 0.0, 2.0], [np.inf, np.inf, 0.0]],
        targets=[0],
    )
    closed = chain_closure(g)
    assert closed.q[0, 2] == 3.0


def test_closure_idempotent(camel, styblinski, himmelblau):
    for scene in (camel, styblinski, himmelblau):
        again = chain_closure(scene.closed)
        np.testing.assert_array_equal(again.q, scene.closed.q)


def test_closure_triangle_property(camel, styblinski):
    for scene in (camel, styblinski):
        q = scene.closed.q
        for k in scene.closed.nontarget():
            assert np.all(q <= q[:, k][:, None] + q[k, :][None, :] + 1e-15)


def test_closure_composition_pays_both_climbs(camel, camel_roles):
    # low ~> t composes the two uphill hops: q[low->s_mid] + q[mid->s_t]
    r = camel_roles
    q = camel.closed.q
    expect = (
        camel.graph.q[r["low"], r["s_mid"]]
        + camel.graph.q[r["mid"], r["s_t"]]
    )
    assert q[r["low"], r["t"]] == pytest.approx(expect, rel=1e-14)


def test_closure_matches_chain_enumeration_oracle(camel):
    expect = oracles.brute_chain_costs(camel.graph.q, camel.graph.target_set)
    np.testing.assert_allclose(camel.closed.q, expect, rtol=1e-14)


def test_closure_disconnected_raises():
    g = make_graph(
        [[0.0, 1.0, np.inf], [1.0, 0.0, np.inf], [np.inf, np.inf, 0.0]],
        targets=[0],
    )
    with pytest.raises(StillInfinite):
        chain_closure(g)


def test_closure_allows_infinite_across_targets(himmelblau):
    # with several targets, pairs separated by targets legally stay infinite
    q = himmelblau.closed.q
    assert np.isinf(q).any()
    for i in himmelblau.closed.nontarget():
        assert np.isfinite(
            [q[i, t] for t in himmelblau.closed.target_set]
        ).any()


def test_state_dependent_costs_match_constant_variance(camel):
    noise = StateDependentGaussian(lambda z: SIGMA2, 2,
                                   f_range=(-10.0, 10.0))
    g = build_graph(camel.cps, camel.conns, noise)
    np.testing.assert_allclose(g.q, camel.graph.q, rtol=1e-9)


def test_interpretable_bounds_gaussian_collapse(camel, camel_roles):
    r = camel_roles
    noise = IsotropicGaussian(SIGMA2, 2)
    bounds = interpretable_bounds(camel.obj, camel.graph, noise)
    lo, hi = bounds[(r["mid"], r["s_t"])]
    expect = camel.graph.q[r["mid"], r["s_t"]]
    assert lo == pytest.approx(expect, rel=1e-12)
    assert hi == pytest.approx(expect, rel=1e-12)
    # downhill edge: zero lower bound
    lo_down, _ = bounds[(r["s_t"], r["t"])]
    assert lo_down == 0.0
    # lower <= direct cost <= upper everywhere
    for (i, j), (lo, hi) in bounds.items():
        q = camel.graph.q[i, j]
        assert lo <= q + 1e-15
        assert q <= hi + 1e-15


def test_emit_dot(camel, himmelblau):
    dot = emit_dot(camel.graph)
    assert dot.count("doublecircle") == 1
    assert dot.count("circle") == 5  # 4 plain + the doublecircle substring
    assert dot == emit_dot(camel.graph)  # deterministic
    dot9 = emit_dot(himmelblau.graph)
    assert sum(f"n{i} [" in dot9 for i in range(9)) == 9


def test_graph_csv(camel):
    text = graph_csv(camel.closed)
    lines = text.strip().split("\n")
    assert lines[0] == "i,j,cost,is_direct_edge"
    # every non-diagonal finite pair appears
    finite = np.isfinite(camel.closed.q).sum() - camel.closed.n
    assert len(lines) - 1 == finite
