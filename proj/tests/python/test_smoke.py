import os

import numpy as np
import pytest

import hydrocla

SOURCE_DIR = os.environ.get("HYDROCLA_SOURCE_DIR", os.path.join(os.path.dirname(__file__), "..", ".."))


def fixture_path(name):
    return os.path.join(SOURCE_DIR, "fixtures", name)


def test_fixture_names():
    assert "net34" in hydrocla.fixture_names()
    assert "net65_case3" in hydrocla.fixture_names()


def test_simulate_net65_balances_mass():
    net, _ = hydrocla.load_fixture("net65")
    assert net.node_count == 65
    result = hydrocla.simulate(net)
    heads = np.asarray(result["heads"])
    assert heads.shape == (65,)
    inflow = np.asarray(result["boundary_flows"]).sum()
    assert inflow == pytest.approx(np.asarray(net.demands()).sum(), abs=1e-12)
    assert len(result["state_vector"]) == 70


def test_simulate_with_demands_matches_default():
    net, _ = hydrocla.load_fixture("net34")
    a = hydrocla.simulate(net)
    b = hydrocla.simulate(net, demands=net.demands())
    np.testing.assert_array_equal(a["heads"], b["heads"])


def test_parse_round_trip():
    with open(fixture_path("net34.net")) as f:
        net = hydrocla.parse_network(f.read())
    again = hydrocla.parse_network(net.serialize())
    assert again.node_ids == net.node_ids
    with pytest.raises(hydrocla.ParseError):
        hydrocla.parse_network("[NODES]\nA zero\n")


def test_estimate_without_meters_is_simulation():
    net, meas = hydrocla.load_fixture("net65")
    est = hydrocla.estimate(net, meas)
    sim = hydrocla.simulate(net)
    assert np.max(np.abs(np.asarray(est["delta_d"]))) <= 1e-12
    np.testing.assert_allclose(est["heads"], sim["heads"], atol=1e-6)


def test_confidence_limits():
    net, meas = hydrocla.load_fixture("net65_case2")
    esm = np.asarray(hydrocla.esm_confidence_limits(net, meas)["cl"])
    em_result = hydrocla.em_confidence_limits(net, meas, bound="upper")
    assert em_result["estimator_runs"] == 2
    em = np.asarray(em_result["upper"])
    labels = hydrocla.state_labels(net)
    assert esm.shape == em.shape == (len(labels),)
    assert em[labels.index("H 5")] == 0.0
    assert np.all(esm >= 0.0)


def test_cli_entry_point():
    code, out, err = hydrocla.run_cli(["dump-topology", fixture_path("net65.net")])
    assert code == 0
    assert out.startswith("root 64")
    code, _, err = hydrocla.run_cli(["frobnicate"])
    assert code == 1
    assert err
