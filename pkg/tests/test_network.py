import json

import networkx as nx
import numpy as np
import pytest

import netgen
from gasflow.errors import InconsistentBoundary, MalformedInput, SchemaViolation
from gasflow.models import EdgeKind
from gasflow.network import (
    incidence,
    non_pipe_graph,
    parse_instance,
    perturb_instance,
    promote_largest_injector,
    validate,
    with_slacks,
)


def test_parse_path_instance():
    net = parse_instance(netgen.dumps(netgen.path3()).encode("utf-8"))
    assert [j.id for j in net.junctions] == ["1", "2", "3"]
    assert net.slack_ids == ["1"]
    assert [e.id for e in net.edges] == ["p12", "p23"]
    assert all(e.kind is EdgeKind.PIPE for e in net.edges)


@pytest.mark.parametrize("payload", [b"{not json", b"\xff\xfe\x00", "[1, 2"])
def test_malformed_input(payload):
    with pytest.raises(MalformedInput):
        parse_instance(payload)


def _mutated(mutate):
    doc = netgen.path3()
    mutate(doc)
    return json.dumps(doc)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(units="imperial"),
        lambda d: d.update(extra=1),
        lambda d: d["pipes"][0].update(length_m=-1.0),
        lambda d: d["pipes"][0].update(to="missing"),
        lambda d: d["pipes"][0].update(to="1"),
        lambda d: d["nodes"].append(netgen.node("2", injection=-1.0)),
        lambda d: d["pipes"].append(netgen.pipe("p12", "1", "3")),
        lambda d: d.update(nodes=[]),
        lambda d: d["nodes"][1].pop("injection_kg_s"),
        lambda d: d["pipes"][0].update(length_m=float("inf")),
        lambda d: d["nodes"][1].update(injection_kg_s=float("nan")),
        lambda d: d["nodes"][0].update(slack_pressure_pa=float("inf")),
    ],
)
def test_schema_violations(mutate):
    with pytest.raises(SchemaViolation):
        parse_instance(_mutated(mutate))


def test_both_pressure_and_injection_is_inconsistent():
    text = _mutated(lambda d: d["nodes"][1].update(slack_pressure_pa=4e6))
    with pytest.raises(InconsistentBoundary):
        parse_instance(text)


def test_valves_default_closed_and_other_pass_throughs_open():
    net = netgen.to_network(netgen.mixed_fixture())
    ids = [e.id for e in net.edges]
    assert "tCE" in ids
    assert "vBD" not in ids
    assert [e.kind for e in net.edges][-2:] == [EdgeKind.COMPRESSOR, EdgeKind.PASS_THROUGH]

    doc = netgen.mixed_fixture()
    doc["pass_throughs"][1]["open"] = True
    assert "vBD" in [e.id for e in netgen.to_network(doc).edges]


def test_validation_passes_on_regular_network():
    report = validate(netgen.to_network(netgen.mixed_fixture()))
    assert report.ok
    assert set(report.checks) == {"A1", "A2", "A3", "A4", "connectivity"}


def test_validation_flags_each_assumption():
    no_slack = netgen.instance([netgen.node("a", injection=1.0), netgen.node("b", injection=-1.0)], [netgen.pipe("p", "a", "b")])
    assert "A1" in validate(netgen.to_network(no_slack)).failures()

    missing_ratio = netgen.compressor_chain()
    missing_ratio["compressors"][0]["ratio"] = None
    assert validate(netgen.to_network(missing_ratio)).failures()["A2"] == ("cSA",)

    joined = netgen.instance(
        [netgen.node("s1", pressure=5e6), netgen.node("s2", pressure=6e6)],
        compressors=[netgen.compressor("c", "s1", "s2", 1.2)],
    )
    assert validate(netgen.to_network(joined)).failures()["A3"] == ("s1", "s2")

    cycle = validate(netgen.to_network(netgen.compressor_cycle()))
    assert cycle.failures()["A4"] == ("cAB", "cBC", "tCA")
    assert not cycle.to_document().ok

    island = netgen.path3()
    island["nodes"].append(netgen.node("x", injection=-1.0))
    island["nodes"].append(netgen.node("y", injection=1.0))
    island["pipes"].append(netgen.pipe("pxy", "x", "y"))
    assert validate(netgen.to_network(island)).failures()["connectivity"] == ("x", "y")


def test_incidence_matrices():
    inc = incidence(netgen.to_network(netgen.path3()))
    expected = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]])
    np.testing.assert_array_equal(inc.full.toarray(), expected)
    np.testing.assert_array_equal(inc.reduced.toarray(), expected[1:])
    assert inc.reduced_row_order == ("2", "3")
    assert inc.column_order == ("p12", "p23")


def test_incidence_columns_sum_to_zero():
    rng = np.random.default_rng(3)
    net = netgen.to_network(netgen.random_cyclic(rng, 25))
    full = incidence(net).full.toarray()
    np.testing.assert_array_equal(full.sum(axis=0), np.zeros(len(net.edges)))
    assert np.all(np.abs(full).sum(axis=0) == 2)


def test_perturbation_is_deterministic_and_order_independent():
    doc = netgen.mixed_fixture()
    net = netgen.to_network(doc)
    first = perturb_instance(net, 7)
    second = perturb_instance(net, 7)
    assert first == second

    doc["nodes"] = list(reversed(doc["nodes"]))
    shuffled = perturb_instance(netgen.to_network(doc), 7)
    by_id = {j.id: j.injection for j in shuffled.junctions}
    for junction in first.junctions:
        assert by_id[junction.id] == junction.injection

    assert perturb_instance(net, 8) != first


def test_perturbation_ranges():
    net = netgen.to_network(netgen.mixed_fixture())
    base = {j.id: j.injection for j in net.junctions}
    for seed in range(20):
        out = perturb_instance(net, seed)
        for j in out.junctions:
            if not j.is_slack:
                assert 0.9 * abs(base[j.id]) <= abs(j.injection) <= 1.1 * abs(base[j.id])
        assert all(1.1 <= c.ratio <= 1.4 for c in out.compressors)

    kept = perturb_instance(net, 1, withdrawal_range=None, ratio_range=None)
    assert kept == net
    with pytest.raises(ValueError):
        perturb_instance(net, 1, withdrawal_range=(1.2, 1.1))


def test_slack_designation():
    net = netgen.to_network(netgen.reversed_compressor())
    promoted = promote_largest_injector(net, 4.5e6)
    assert promoted.slack_ids == ["S", "B"]
    assert promoted.junctions[2].slack_pressure == 4.5e6

    extra = with_slacks(net, {"A": 4.9e6})
    assert extra.slack_ids == ["S", "A"]
    with pytest.raises(ValueError):
        with_slacks(net, {"nope": 1e6})


def test_degenerate_intervals_fix_the_perturbation():
    net = netgen.to_network(netgen.mixed_fixture())
    for seed in range(5):
        same = perturb_instance(net, seed, withdrawal_range=(1.0, 1.0), ratio_range=None)
        assert same == net
        fixed = perturb_instance(net, seed, withdrawal_range=None, ratio_range=(1.25, 1.25))
        assert [c.ratio for c in fixed.compressors] == [1.25]
        assert fixed.junctions == net.junctions


def test_closing_a_compressor_path_breaks_a4():
    rng = np.random.default_rng(17)
    checked = 0
    for _ in range(30):
        doc = netgen.random_tree(rng, int(rng.integers(6, 25)), compressor_share=0.5)
        net = netgen.to_network(doc)
        assert validate(net).checks["A4"].passed
        components = [c for c in nx.connected_components(non_pipe_graph(net)) if len(c) >= 2]
        if not components:
            continue
        u, v = sorted(components[0])[:2]
        doc["compressors"].append(netgen.compressor("closing", v, u, 1.1))
        report = validate(netgen.to_network(doc))
        assert not report.checks["A4"].passed
        assert "closing" in report.checks["A4"].offenders
        checked += 1
    assert checked >= 20
