import json
import logging
from pathlib import Path

import pytest

from hybrid_flight import __version__
from hybrid_flight.analysis.logs import VISION_COLUMNS
from hybrid_flight.analysis.report import REPORT_KEYS
from hybrid_flight.cli import EXIT_BAD_INPUT, EXIT_OK, main

from .factories import GAP_TABLE, write_csv

SCRIPTED_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "scripted_mission.json"
RUN_FILES = ("vision_pose_log.csv", "mission_log.csv", "resource_log.csv", "bridge_stats.json")


@pytest.fixture(autouse=True)
def reset_logging():
    """Drop the stderr handler the CLI installs."""
    yield
    logging.getLogger("hybrid_flight").handlers.clear()


@pytest.fixture
def config_path(tmp_path, mission_config):
    path = tmp_path / "mission.json"
    path.write_text(json.dumps(mission_config), encoding="utf-8")
    return path


class TestSimulateAndAnalyze:
    """Test the simulate and analyze commands end to end."""

    def test_simulate_then_analyze(self, config_path, tmp_path, capsys):
        """Test that analyze consumes exactly what simulate writes."""
        run_dir = tmp_path / "run"
        assert main(["simulate", str(config_path), "--output-dir", str(run_dir)]) == EXIT_OK
        assert "commands=15/15" in capsys.readouterr().out

        report_path = tmp_path / "out" / "report.json"
        code = main(
            [
                "analyze",
                str(run_dir / "vision_pose_log.csv"),
                "--mission",
                str(run_dir / "mission_log.csv"),
                "--resource",
                str(run_dir / "resource_log.csv"),
                "--bridge-stats",
                str(run_dir / "bridge_stats.json"),
                "--report",
                str(report_path),
                "--active-window",
                "0",
                "30",
            ]
        )
        assert code == EXIT_OK
        assert "success=100.0%" in capsys.readouterr().out

        document = json.loads(report_path.read_text(encoding="utf-8"))
        assert tuple(document) == REPORT_KEYS
        assert document["freshness_pct"] == 100.0
        assert document["mission_summary"]["commands"]["sent"] == 15
        assert document["mission_summary"]["active_window_s"] == [0.0, 30.0]
        assert document["mode_distribution"] is not None
        assert document["resource_summary"] is not None

        histogram = (tmp_path / "out" / "latency_hist.csv").read_text(encoding="utf-8").splitlines()
        assert histogram[0] == "bin_start_ms,bin_end_ms,count"
        assert histogram[-1].startswith("50,inf,")

    def test_bad_config(self, tmp_path, capsys):
        """Test that an invalid config exits with status 2 and names the problem."""
        path = tmp_path / "mission.json"
        path.write_text(json.dumps({"seed": 1}), encoding="utf-8")
        assert main(["simulate", str(path)]) == EXIT_BAD_INPUT
        err = capsys.readouterr().err
        assert err.startswith("simulate: error:")
        assert "duration_s" in err

    def test_malformed_row(self, tmp_path, capsys):
        """Test that a malformed vision row exits with status 2 and cites its line."""
        path = write_csv(
            tmp_path / "vision.csv",
            ",".join(VISION_COLUMNS),
            ["0.0,0,0,1,0,0,0,1", "0.01,0,0,1,0,0"],
        )
        assert main(["analyze", str(path), "--report", str(tmp_path / "r.json")]) == EXIT_BAD_INPUT
        assert "line 3" in capsys.readouterr().err
        assert not (tmp_path / "r.json").exists()

    def test_missing_log(self, tmp_path):
        """Test that a missing input file is a bad-input exit."""
        assert main(["analyze", str(tmp_path / "missing.csv")]) == EXIT_BAD_INPUT

    def test_version(self, capsys):
        """Test that --version prints the package version."""
        assert main(["--version"]) == EXIT_OK
        assert __version__ in capsys.readouterr().out

    def test_usage_error(self):
        """Test that an unknown command is a usage error."""
        assert main(["fly"]) == EXIT_BAD_INPUT


@pytest.mark.slow
class TestScriptedMission:
    """Test the shipped scripted mission against its reference figures."""

    def test_reference_figures(self, tmp_path, capsys):
        """Test sample count, continuity, rate and the five largest gaps of the scripted run."""
        for name in ("a", "b"):
            args = ["simulate", str(SCRIPTED_CONFIG), "--output-dir", str(tmp_path / name)]
            assert main(args) == EXIT_OK
        for name in RUN_FILES:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

        run_dir = tmp_path / "a"
        report_path = tmp_path / "report.json"
        code = main(
            [
                "analyze",
                str(run_dir / "vision_pose_log.csv"),
                "--mission",
                str(run_dir / "mission_log.csv"),
                "--bridge-stats",
                str(run_dir / "bridge_stats.json"),
                "--report",
                str(report_path),
            ]
        )
        assert code == EXIT_OK
        capsys.readouterr()

        document = json.loads(report_path.read_text(encoding="utf-8"))
        summary = document["mission_summary"]
        assert summary["vision_samples"] == 15_744
        assert summary["active_window_s"] == [0.0, 180.6]
        assert summary["commands"]["succeeded"] == summary["commands"]["sent"]
        assert document["continuity_pct"] == pytest.approx(99.90, abs=0.005)
        assert document["effective_rate_hz"] == pytest.approx(87.18, abs=0.01)
        assert document["dropouts_over_50ms"] == 16
        assert len(document["gaps"]) == 16

        for gap, (end, gap_ms, hz, phase) in zip(document["gaps"], GAP_TABLE):
            assert gap["t"] == pytest.approx(end, abs=1e-6)
            assert gap["gap_ms"] == pytest.approx(gap_ms, abs=1e-3)
            assert round(gap["effective_hz"], 2) == hz
            assert gap["phase"] == phase.value


class TestBenchCommand:
    """Test the bench command."""

    def test_sim_bench(self, capsys):
        """Test that a simulated bench reports zero round trip and the offered load."""
        assert main(["bench", "--frames", "200", "--rate", "100", "--transport", "sim"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "frames sent=200 returned=200 loss=0.0% frame_bytes=78" in out
        assert "offered=62.40 kbps" in out
        assert "p99=0.000" in out

    @pytest.mark.parametrize("option", [["--frames", "0"], ["--rate", "0"]])
    def test_invalid_arguments(self, option, capsys):
        """Test that a zero frame count or rate exits with status 2."""
        assert main(["bench", *option]) == EXIT_BAD_INPUT
        assert capsys.readouterr().err.startswith("bench:")
