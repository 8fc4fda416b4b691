"""Scenario file parsing and round-tripping."""

import pytest

from sidelink_ledger.capacity import PhyConfig
from sidelink_ledger.harness import SimConfig
from sidelink_ledger.scenario import (
    ScenarioError,
    format_scenario,
    load_scenario,
    parse_scenario,
    write_scenario,
)

EXAMPLE = """
# paired experiment at a third of capacity
num_vehicles = 200
rri_ms = 100
numerology = 0
payload_bytes = 350
mcs_index = 1
num_rris = 40
seeds = 1,2,3
mode = both
keep_probability = 0.75
allow_overload = false
"""


class TestParse:
    def test_example(self):
        cfg = parse_scenario(EXAMPLE)
        assert cfg.num_vehicles == 200
        assert cfg.seeds == (1, 2, 3)
        assert cfg.keep_probability == 0.75
        assert cfg.mode == "both"
        assert cfg.phy == PhyConfig()

    def test_unknown_key_rejected_with_line(self):
        with pytest.raises(ScenarioError, match="line 2.*color"):
            parse_scenario("num_vehicles = 5\ncolor = red\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ScenarioError, match="duplicate"):
            parse_scenario("rri_ms = 100\nrri_ms = 50\n")

    def test_bad_int(self):
        with pytest.raises(ScenarioError, match="num_vehicles"):
            parse_scenario("num_vehicles = many\n")

    def test_bad_line(self):
        with pytest.raises(ScenarioError, match="key = value"):
            parse_scenario("just some words\n")

    def test_bad_bool(self):
        with pytest.raises(ScenarioError, match="allow_overload"):
            parse_scenario("allow_overload = yep\n")

    def test_invalid_config_value_surfaces_as_scenario_error(self):
        with pytest.raises(ScenarioError, match="num_rris"):
            parse_scenario("num_rris = 5\n")

    def test_phy_keys(self):
        cfg = parse_scenario("dmrs_re = 0\nsh_symbols = 14\nprbs_per_subchannel = auto\n")
        assert cfg.phy.dmrs_re == 0
        assert cfg.phy.sh_symbols == 14
        assert cfg.phy.prbs_per_subchannel is None
        cfg = parse_scenario("prbs_per_subchannel = 50\n")
        assert cfg.phy.prbs_per_subchannel == 50

    def test_defaults_when_empty(self):
        cfg = parse_scenario("# nothing but comments\n")
        assert cfg == SimConfig()


class TestRoundTrip:
    def test_effective_config_round_trips(self, tmp_path):
        cfg = parse_scenario(EXAMPLE)
        path = tmp_path / "scenario.cfg"
        write_scenario(cfg, path)
        assert load_scenario(path) == cfg

    def test_defaults_round_trip(self, tmp_path):
        cfg = SimConfig()
        path = tmp_path / "scenario.cfg"
        write_scenario(cfg, path)
        assert load_scenario(path) == cfg

    def test_every_written_key_is_parseable(self):
        text = format_scenario(SimConfig())
        assert parse_scenario(text) == SimConfig()
        keys = {
            line.split("=")[0].strip()
            for line in text.splitlines()
            if "=" in line and not line.startswith("#")
        }
        assert "num_vehicles" in keys and "dmrs_re" in keys and "seeds" in keys

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(tmp_path / "absent.cfg")
