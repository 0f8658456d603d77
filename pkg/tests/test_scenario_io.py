import json

import pytest

from infrasim import (
    ValidationError,
    fingerprint,
    generate_predefined,
    ingest_road_network,
    parse_road_network,
    parse_scenario,
    sample_network_path,
    scenario_from_dict,
    serialize_scenario,
)
from infrasim.scenario_io import NetworkParseError, ScenarioParseError

MINIMAL = """
{
  "budget": {"kind": "fixed", "amount": 500.0},
  "components": [{"id": "c0"}, {"id": "c1", "shape": 1.5}]
}
"""


class TestParseScenario:
    def test_minimal_file_gets_defaults(self):
        config = parse_scenario(MINIMAL)
        assert config.horizon == 100
        assert config.termination == "horizon"
        assert config.reward.kind == "threshold_margin"
        assert config.components[0].shape == 2.0  # dynamics default
        assert config.components[1].shape == 1.5
        assert config.components[0].failure_threshold == 40.0
        assert config.master_seed == 0

    def test_defaults_echoed_on_serialization(self):
        config = parse_scenario(MINIMAL)
        text = serialize_scenario(config)
        obj = json.loads(text)
        assert obj["components"][0]["failure_threshold"] == 40.0
        assert obj["dynamics"]["repair_gain"] == 30.0
        assert obj["horizon"] == 100

    def test_serialize_parse_fixpoint(self):
        for name in ("simple5", "cyclic", "catastrophic", "intermittent"):
            config = generate_predefined(name, seed=3)
            text = serialize_scenario(config)
            again = serialize_scenario(parse_scenario(text))
            assert text == again

    def test_fixpoint_with_groups(self):
        config = generate_predefined("largesys", seed=1)
        text = serialize_scenario(config)
        back = parse_scenario(text)
        assert serialize_scenario(back) == text
        assert back.n_components == 100_000
        assert fingerprint(back) == fingerprint(config)

    def test_group_file_is_compact(self):
        config = generate_predefined("largesys", seed=1)
        text = serialize_scenario(config)
        assert len(text) < 100_000  # groups, not 100k component entries

    def test_validation_error_names_field(self):
        bad = json.loads(MINIMAL)
        bad["components"][0]["failure_threshold"] = 100.0
        with pytest.raises(ValidationError) as err:
            scenario_from_dict(bad)
        assert "failure_threshold" in str(err.value)

    def test_unknown_top_key_rejected(self):
        bad = json.loads(MINIMAL)
        bad["surprise"] = 1
        with pytest.raises(ValidationError) as err:
            scenario_from_dict(bad)
        assert "surprise" in str(err.value)

    def test_unknown_component_key_rejected(self):
        bad = json.loads(MINIMAL)
        bad["components"][0]["color"] = "red"
        with pytest.raises(ValidationError) as err:
            scenario_from_dict(bad)
        assert "color" in str(err.value)

    def test_parse_error_carries_line_and_column(self):
        with pytest.raises(ScenarioParseError) as err:
            parse_scenario('{\n  "budget": {,}\n}')
        assert err.value.line == 2

    def test_future_version_rejected(self):
        bad = json.loads(MINIMAL)
        bad["format"] = "scenario/9"
        with pytest.raises(ValidationError) as err:
            scenario_from_dict(bad)
        assert "scenario/9" in str(err.value)

    def test_file_round_trip(self, tmp_path):
        config = generate_predefined("simple5", seed=9)
        path = tmp_path / "s.json"
        path.write_text(serialize_scenario(config), encoding="utf-8")
        back = parse_scenario(path)
        assert fingerprint(back) == fingerprint(config)

    def test_fingerprint_tracks_changes(self):
        a = generate_predefined("simple5", seed=1)
        b = generate_predefined("simple5", seed=2)
        assert fingerprint(a) != fingerprint(b)
        assert fingerprint(a) == fingerprint(generate_predefined("simple5", seed=1))

    def test_hierarchy_round_trip(self):
        obj = json.loads(MINIMAL)
        obj["hierarchy"] = [
            {"id": "root", "label": "site", "parent": None, "members": []},
            {"id": "g1", "label": "", "parent": "root", "members": ["c0", "c1"]},
        ]
        config = scenario_from_dict(obj)
        assert len(config.hierarchy) == 2
        back = scenario_from_dict(json.loads(serialize_scenario(config)))
        assert back.hierarchy == config.hierarchy

    def test_hierarchy_unknown_member_rejected(self):
        obj = json.loads(MINIMAL)
        obj["hierarchy"] = [{"id": "g1", "members": ["ghost"]}]
        with pytest.raises(ValidationError):
            scenario_from_dict(obj)

    def test_component_and_group_metadata_round_trip(self):
        obj = json.loads(MINIMAL)
        obj["components"][0]["metadata"] = {"material": "steel", "zone": "north"}
        obj["hierarchy"] = [
            {"id": "g1", "members": ["c0"], "metadata": {"facility": "plant-2"}}
        ]
        config = scenario_from_dict(obj)
        assert dict(config.components[0].metadata) == {"material": "steel", "zone": "north"}
        assert dict(config.hierarchy[0].metadata) == {"facility": "plant-2"}
        text = serialize_scenario(config)
        again = serialize_scenario(parse_scenario(text))
        assert text == again

    def test_non_string_metadata_rejected(self):
        obj = json.loads(MINIMAL)
        obj["components"][0]["metadata"] = {"depth": 3}
        with pytest.raises(ValidationError):
            scenario_from_dict(obj)


NETWORK = """#format=road-network/1
V,v0,0.0,0.0
V,v1,1.0,0.0
V,v2,1.0,1.0
E,e0,v0,v1,100.0,20.0,1.0
E,e1,v1,v2,200.0,40.0,2.5
"""


class TestRoadNetwork:
    def test_parse_small_network(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK, encoding="utf-8")
        net = parse_road_network(path)
        assert len(net.vertices) == 3
        assert len(net.edges) == 2
        assert net.edges[0].length == 100.0

    def test_speed_maps_linearly_to_scale(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK, encoding="utf-8")
        config = ingest_road_network(path, scale_base=60.0, speed_ref=40.0)
        scales = {c.id: c.scale for c in config.components}
        assert scales["e0"] == 30.0  # 60 * 20/40
        assert scales["e1"] == 60.0

    def test_cost_proportional_to_length(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK, encoding="utf-8")
        config = ingest_road_network(path, cost_rate=5.0)
        costs = {c.id: c.replace_cost for c in config.components}
        assert costs["e0"] == 500.0
        assert costs["e1"] == 1000.0

    def test_importance_carried_through(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK, encoding="utf-8")
        config = ingest_road_network(path)
        importance = {c.id: c.importance for c in config.components}
        assert importance["e1"] == 2.5

    def test_rehab_cap_in_metadata(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK, encoding="utf-8")
        config = ingest_road_network(path, max_rehabs_per_step=7)
        assert config.metadata["max_rehabs_per_step"] == "7"

    def test_bundled_sample_counts(self):
        net = parse_road_network(sample_network_path())
        assert len(net.vertices) == 1024
        assert len(net.edges) == 2118
        config = ingest_road_network(net)
        assert config.n_components == 2118

    def test_malformed_row_reports_number(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK + "E,broken\n", encoding="utf-8")
        with pytest.raises(NetworkParseError) as err:
            parse_road_network(path)
        assert err.value.row == 7

    def test_unknown_vertex_rejected(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK + "E,e9,v0,ghost,10.0,10.0,1.0\n", encoding="utf-8")
        with pytest.raises(NetworkParseError):
            parse_road_network(path)

    def test_future_version_rejected(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK.replace("road-network/1", "road-network/3"), encoding="utf-8")
        with pytest.raises(NetworkParseError):
            parse_road_network(path)

    def test_ingested_scenario_is_runnable(self, tmp_path):
        path = tmp_path / "net.csv"
        path.write_text(NETWORK, encoding="utf-8")
        config = ingest_road_network(path, horizon=5)
        from infrasim import Simulation

        sim = Simulation(config)
        obs = sim.reset()
        assert len(obs) == 2 * 2 + 1
        sim.step([0, 0])
