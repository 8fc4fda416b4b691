"""Black-box CLI tests: flags, output files, and the exit-code contract."""

import subprocess
import sys

import pytest

from sidelink_ledger.cli import (
    EXIT_CAPACITY,
    EXIT_CONFIG,
    EXIT_ERROR,
    EXIT_IO,
    EXIT_OK,
    main,
)

SCENARIO_SMALL = """
num_vehicles = 12
rri_ms = 10
num_rris = 20
seeds = 1,2
mode = both
"""


def write_scenario(tmp_path, text=SCENARIO_SMALL, name="scenario.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestCapacityCommand:
    def test_reference_package_report(self, capsys):
        assert main(["capacity", "--mu", "0", "--payload", "350", "--mcs", "1", "--rri", "100"]) == EXIT_OK
        out = capsys.readouterr().out
        for value in ("132", "5973", "46", "277", "6", "600"):
            assert value in out
        assert "14.2857%" in out

    def test_baseline_package_report(self, capsys):
        assert main(["capacity", "--payload", "300", "--baseline-payload", "300"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "39" in out and "7" in out and "700" in out
        assert "0.0000%" in out

    def test_empty_payload_report(self, capsys):
        assert main(["capacity", "--payload", "0"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "PRBs per package:       0" in out
        assert "n/a" in out

    def test_invalid_numerology(self, capsys):
        assert main(["capacity", "--mu", "7"]) == EXIT_CONFIG
        assert "error" in capsys.readouterr().err

    def test_invalid_mcs(self, capsys):
        assert main(["capacity", "--mcs", "9"]) == EXIT_CONFIG
        assert "not in table" in capsys.readouterr().err


class TestSimulateCommand:
    def test_single_vehicle_all_zero_csv(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, "num_vehicles = 1\nrri_ms = 10\nnum_rris = 15\nseeds = 1\nmode = ledger\n")
        out = tmp_path / "trace.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "rri_index,mode,mean_collision_prob,min_prob,max_prob,n_seeds"
        assert len(lines) == 16
        assert all(",0.0,0.0,0.0,1" in line for line in lines[1:])

    def test_both_modes_share_first_five_rows(self, tmp_path):
        cfg = write_scenario(tmp_path)
        out = tmp_path / "trace.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()[1:]
        baseline = [l.split(",", 2)[2] for l in lines if l.split(",")[1] == "baseline"]
        ledger = [l.split(",", 2)[2] for l in lines if l.split(",")[1] == "ledger"]
        assert len(baseline) == len(ledger) == 20
        assert baseline[:5] == ledger[:5]

    def test_missing_config_exits_2_without_output(self, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        code = main(["simulate", "--config", str(tmp_path / "nope.cfg"), "--out", str(out)])
        assert code == EXIT_CONFIG
        assert not out.exists()
        assert "error" in capsys.readouterr().err

    def test_invalid_config_exits_2(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, "bogus_key = 1\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "t.csv")]) == EXIT_CONFIG

    def test_capacity_violation_exits_3(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, "num_vehicles = 601\nnum_rris = 15\nseeds = 1\nmode = ledger\n")
        out = tmp_path / "trace.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_CAPACITY
        assert not out.exists()

    def test_overload_flag_allows_it(self, tmp_path):
        cfg = write_scenario(
            tmp_path, "num_vehicles = 13\nrri_ms = 2\nnum_rris = 15\nseeds = 1\nmode = ledger\n"
        )
        out = tmp_path / "trace.csv"
        code = main(["simulate", "--config", str(cfg), "--out", str(out), "--allow-overload"])
        assert code == EXIT_OK and out.exists()

    def test_io_failure_exits_4(self, tmp_path, capsys):
        cfg = write_scenario(tmp_path, "num_vehicles = 1\nrri_ms = 10\nnum_rris = 15\nseeds = 1\nmode = ledger\n")
        out = tmp_path / "no_such_dir" / "trace.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_IO

    def test_seed_and_mode_overrides(self, tmp_path):
        cfg = write_scenario(tmp_path)
        out = tmp_path / "trace.csv"
        assert (
            main(
                ["simulate", "--config", str(cfg), "--out", str(out), "--mode", "ledger", "--seeds", "9"]
            )
            == EXIT_OK
        )
        lines = out.read_text().splitlines()[1:]
        assert all(line.split(",")[1] == "ledger" for line in lines)
        assert all(line.endswith(",1") for line in lines)

    def test_json_format(self, tmp_path):
        import json

        cfg = write_scenario(tmp_path)
        out = tmp_path / "trace.json"
        assert main(["simulate", "--config", str(cfg), "--out", str(out), "--format", "json"]) == EXIT_OK
        payload = json.loads(out.read_text())
        assert len(payload["traces"]) == 40
        row = payload["traces"][0]
        assert set(row) == {
            "rri_index",
            "mode",
            "mean_collision_prob",
            "min_prob",
            "max_prob",
            "n_seeds",
        }

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_scenario(tmp_path)
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out_a)]) == EXIT_OK
        assert main(["simulate", "--config", str(cfg), "--out", str(out_b)]) == EXIT_OK
        assert out_a.read_bytes() == out_b.read_bytes()


class TestReplayCommand:
    def run_simulation(self, tmp_path):
        cfg = write_scenario(tmp_path)
        trace = tmp_path / "trace.csv"
        events = tmp_path / "events.log"
        assert (
            main(
                [
                    "simulate",
                    "--config",
                    str(cfg),
                    "--out",
                    str(trace),
                    "--log-events",
                    str(events),
                ]
            )
            == EXIT_OK
        )
        return trace, events

    def test_untampered_is_consistent(self, tmp_path, capsys):
        trace, events = self.run_simulation(tmp_path)
        assert main(["replay", "--events", str(events), "--trace", str(trace)]) == EXIT_OK
        assert "consistent" in capsys.readouterr().out

    def test_edited_probability_reports_divergence(self, tmp_path, capsys):
        trace, events = self.run_simulation(tmp_path)
        lines = trace.read_text().splitlines()
        target = None
        for i, line in enumerate(lines[1:], start=1):
            parts = line.split(",")
            if float(parts[2]) > 0:
                parts[2] = repr(float(parts[2]) / 2)
                lines[i] = ",".join(parts)
                target = (parts[1], parts[0])
                break
        assert target is not None
        trace.write_text("\n".join(lines) + "\n")
        assert main(["replay", "--events", str(events), "--trace", str(trace)]) == EXIT_ERROR
        out = capsys.readouterr().out
        assert f"mode={target[0]} rri={target[1]}" in out

    def test_empty_log_with_nonzero_trace_diverges_at_first_nonzero(self, tmp_path, capsys):
        trace, events = self.run_simulation(tmp_path)
        kept = [
            line
            for line in events.read_text().splitlines()
            if line.startswith("#")
        ]
        events.write_text("\n".join(kept) + "\n")
        first_nonzero = None
        for line in trace.read_text().splitlines()[1:]:
            parts = line.split(",")
            if float(parts[2]) > 0:
                first_nonzero = (parts[1], parts[0])
                break
        assert first_nonzero is not None
        assert main(["replay", "--events", str(events), "--trace", str(trace)]) == EXIT_ERROR
        assert f"mode={first_nonzero[0]} rri={first_nonzero[1]}" in capsys.readouterr().out

    def test_malformed_log(self, tmp_path, capsys):
        trace, events = self.run_simulation(tmp_path)
        events.write_text("not an event log\n")
        assert main(["replay", "--events", str(events), "--trace", str(trace)]) == EXIT_CONFIG
        assert "error" in capsys.readouterr().err


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "sidelink_ledger.cli", "capacity", "--payload", "350"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "600" in result.stdout

    def test_bad_subcommand(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])
