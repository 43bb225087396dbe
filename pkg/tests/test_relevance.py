import random

import pytest

from conftest import SCHEMA, random_log, random_mag
from magpath.mag import Mag, aggregate_digraph, build_mag
from magpath.relevance import (CentralityBundle, RelevanceParams,
                               base_relevance, base_relevance_map,
                               compute_bundle, final_relevance,
                               mining_digraph, parameter_sweep,
                               propagation_graph, relevance)

ASPECTS = (*SCHEMA, "Sequence")


def bundle(clo, bet, pgr):
    return CentralityBundle(clo, bet, pgr)


def random_bundle(rng):
    return bundle({i: rng.random() for i in ("a", "b", "c")},
                  {o: rng.random() for o in ("x", "y")},
                  {u: rng.random() for u in ("u1", "u2")})


# -- parameters ------------------------------------------------------


def test_params_validated():
    with pytest.raises(ValueError):
        RelevanceParams(w1=1.2)
    with pytest.raises(ValueError):
        RelevanceParams(alpha_final=1.0)
    with pytest.raises(ValueError):
        RelevanceParams(r0_scope="global")
    with pytest.raises(ValueError, match="unknown"):
        RelevanceParams.from_dict({"w1": 0.5, "beta": 1})


# -- base relevance --------------------------------------------------


def test_base_relevance_worked_value():
    b = bundle({"i": 0.6}, {"o": 0.9}, {"u": 0.3})
    p = RelevanceParams(w1=1 / 3, w2=0.5)
    got = base_relevance(("i", "o", "u", 4), b, p, ASPECTS)
    # by hand: 1/3 * 0.3 + 2/3 * (0.5*0.6 + 0.5*0.9)
    assert got == pytest.approx(0.6, abs=1e-12)


def test_base_relevance_boundaries():
    rng = random.Random(1)
    for _ in range(20):
        b = random_bundle(rng)
        node = (rng.choice("abc"), rng.choice("xy"), rng.choice(["u1", "u2"]), 1)
        unit_only = base_relevance(node, b, RelevanceParams(w1=1.0, w2=rng.random()),
                                   ASPECTS)
        assert unit_only == b.pagerank[node[2]]
        clo_only = base_relevance(node, b, RelevanceParams(w1=0.0, w2=1.0), ASPECTS)
        assert clo_only == b.closeness[node[0]]


def test_base_relevance_ignores_extra_aspects():
    b = bundle({"i": 0.4}, {"o": 0.5}, {"u": 0.6})
    p = RelevanceParams(w1=0.3, w2=0.7)
    early = base_relevance(("i", "o", "u", 1), b, p, ASPECTS)
    late = base_relevance(("i", "o", "u", 9), b, p, ASPECTS)
    assert early == late
    with_diag = base_relevance(("i", "o", "u", "E66", 2), b, p,
                               (*SCHEMA, "diagnosis", "Sequence"))
    assert with_diag == early


def test_base_relevance_affine_in_weights():
    rng = random.Random(7)
    for _ in range(10):
        b = random_bundle(rng)
        node = ("a", "x", "u1", 1)
        w2 = rng.random()
        lo = base_relevance(node, b, RelevanceParams(w1=0.0, w2=w2), ASPECTS)
        hi = base_relevance(node, b, RelevanceParams(w1=1.0, w2=w2), ASPECTS)
        mid = base_relevance(node, b, RelevanceParams(w1=0.5, w2=w2), ASPECTS)
        assert mid == pytest.approx((lo + hi) / 2, abs=1e-12)
        w1 = rng.random()
        lo = base_relevance(node, b, RelevanceParams(w1=w1, w2=0.0), ASPECTS)
        hi = base_relevance(node, b, RelevanceParams(w1=w1, w2=1.0), ASPECTS)
        mid = base_relevance(node, b, RelevanceParams(w1=w1, w2=0.5), ASPECTS)
        assert mid == pytest.approx((lo + hi) / 2, abs=1e-12)


def test_base_relevance_stays_at_one_when_both_components_max():
    # with w1=0, a node pairing the best intervention with the best
    # occupation keeps score 1 no matter how w2 splits them
    b = bundle({"best": 1.0, "other": 0.4}, {"top": 1.0, "rest": 0.2}, {"u": 1.0})
    for w2 in (0.0, 0.25, 0.5, 0.75, 1.0):
        p = RelevanceParams(w1=0.0, w2=w2)
        assert base_relevance(("best", "top", "u", 1), b, p, ASPECTS) == 1.0


def test_base_relevance_missing_component():
    b = bundle({"i": 0.5}, {"o": 0.5}, {"u": 0.5})
    with pytest.raises(ValueError, match="closeness"):
        base_relevance(("nope", "o", "u", 1), b, RelevanceParams(), ASPECTS)
    with pytest.raises(ValueError, match="absent"):
        base_relevance(("i", "o", "u"), b, RelevanceParams(), ("a", "b", "c"))


def test_base_relevance_bounded_by_unit_interval():
    rng = random.Random(5)
    for _ in range(30):
        b = random_bundle(rng)
        p = RelevanceParams(w1=rng.random(), w2=rng.random())
        r = base_relevance(("a", "x", "u1", 1), b, p, ASPECTS)
        assert 0.0 <= r <= 1.0


# -- centrality bundle and digraphs ----------------------------------


def test_mining_digraph_matches_endpointless_build():
    log = random_log(random.Random(13), n_cases=10)
    with_ends = build_mag(log, list(SCHEMA), add_virtual_endpoints=True)
    without = build_mag(log, list(SCHEMA), add_virtual_endpoints=False)
    mined = mining_digraph(with_ends)
    direct = aggregate_digraph(without)
    assert set(mined.nodes) == set(direct.nodes)
    assert {k: e.weight for k, e in mined.edges.items()} \
        == {k: e.weight for k, e in direct.edges.items()}


def test_compute_bundle_keys_and_range():
    mag = random_mag(random.Random(23), n_cases=12)
    b = compute_bundle(mag)
    assert all(isinstance(k, str) for k in b.closeness)
    for scores in (b.closeness, b.betweenness, b.pagerank):
        assert scores
        assert all(0.0 <= v <= 1.0 for v in scores.values())
        assert max(scores.values()) == pytest.approx(1.0)
    assert "__start__" not in b.closeness and "__end__" not in b.pagerank


def test_propagation_graph_symmetric():
    for seed in range(5):
        mag = random_mag(random.Random(seed), n_cases=6)
        mined = mining_digraph(mag)
        prop = propagation_graph(mag)
        for (a, c), e in mined.edges.items():
            assert prop.weight(c, a) >= e.weight
        for (a, c) in prop.edges:
            assert prop.weight(a, c) == prop.weight(c, a)


# -- final relevance -------------------------------------------------


def test_alpha_zero_preserves_base_ranking():
    rng = random.Random(31)
    mag = random_mag(rng, n_cases=10)
    b = compute_bundle(mag)
    r0 = base_relevance_map(mag, b, RelevanceParams(w1=0.4, w2=0.6))
    out = final_relevance(mag, r0, alpha_final=0.0)
    nodes = sorted(r0, key=lambda n: r0[n])
    got = sorted(out, key=lambda n: out[n])
    assert [r0[n] for n in nodes] == sorted(r0.values())
    # argsort equality up to ties in r0
    for a, c in zip(nodes, got):
        assert r0[a] == pytest.approx(r0[c], abs=1e-12)


def test_final_relevance_requires_full_r0():
    mag = random_mag(random.Random(2), n_cases=4)
    r0 = {n: 1.0 for n in mag.real_nodes}
    r0.pop(next(iter(r0)))
    with pytest.raises(ValueError, match="base score missing"):
        final_relevance(mag, r0, alpha_final=0.5)


def mirror_mag():
    a, b, c = ("A",), ("B",), ("C",)
    return Mag(("intervention",),
               {"p1": ((a, b, c), (1.0, 1.0)), "p2": ((c, b, a), (1.0, 1.0))})


def test_mirror_pathways_score_equally():
    mag = mirror_mag()
    r0 = {("A",): 1.0, ("B",): 1.0, ("C",): 1.0}
    out = final_relevance(mag, r0, alpha_final=0.85)
    assert out[("A",)] == pytest.approx(out[("C",)], abs=1e-9)
    assert out[("B",)] == pytest.approx(1.0)


def context_mag():
    """Two nodes sharing the intervention but in different contexts."""
    paths = {
        "p1": ((("X", 1), ("V", 2)), (1.0,)),
        "p2": ((("Y", 1), ("Y", 2), ("V", 3)), (1.0, 1.0)),
        "p3": ((("Y", 1), ("Y", 2), ("V", 3)), (1.0, 1.0)),
    }
    return Mag(("intervention", "Sequence"), paths)


def test_context_differentiates_equal_base_scores():
    mag = context_mag()
    r0 = {n: 1.0 for n in mag.real_nodes}
    same_alpha0 = final_relevance(mag, r0, alpha_final=0.0)
    assert same_alpha0[("V", 2)] == pytest.approx(same_alpha0[("V", 3)])
    shifted = final_relevance(mag, r0, alpha_final=0.85)
    assert abs(shifted[("V", 2)] - shifted[("V", 3)]) > 1e-6


def test_scope_field_does_not_change_single_mag_result():
    mag = random_mag(random.Random(9), n_cases=8)
    b = compute_bundle(mag)
    cohort = relevance(mag, b, RelevanceParams(w1=0.5, w2=0.5, alpha_final=0.3))
    cluster = relevance(mag, b, RelevanceParams(w1=0.5, w2=0.5, alpha_final=0.3,
                                                r0_scope="per-cluster"))
    assert cohort == cluster


# -- sweeps ----------------------------------------------------------


def test_sweep_single_point_equals_pipeline():
    mag = random_mag(random.Random(17), n_cases=8)
    b = compute_bundle(mag)
    table = parameter_sweep(mag, b, [0.4], [0.6], [0.2])
    assert len(table.entries) == 1
    direct = relevance(mag, b, RelevanceParams(w1=0.4, w2=0.6, alpha_final=0.2))
    assert table.entries[0]["scores"] == [direct[n] for n in table.nodes]


def test_sweep_grid_shape_and_workers():
    mag = random_mag(random.Random(21), n_cases=6)
    b = compute_bundle(mag)
    nodes = sorted(mag.real_nodes)[:3]
    seq = parameter_sweep(mag, b, [0.0, 0.5], [0.25, 0.75], [0.0, 0.5],
                          nodes=nodes, workers=1)
    par = parameter_sweep(mag, b, [0.0, 0.5], [0.25, 0.75], [0.0, 0.5],
                          nodes=nodes, workers=4)
    assert len(seq.entries) == 8
    assert seq.entries == par.entries
    assert seq.nodes == par.nodes
    with pytest.raises(ValueError, match="empty"):
        parameter_sweep(mag, b, [], [0.5], [0.5])


def test_sweep_json_round_trip():
    import json
    mag = random_mag(random.Random(3), n_cases=5)
    b = compute_bundle(mag)
    table = parameter_sweep(mag, b, [0.5], [0.5], [0.1, 0.9])
    data = json.loads(table.to_json())
    assert [tuple(n) for n in data["nodes"]] == list(table.nodes)
    assert len(data["entries"]) == 2
