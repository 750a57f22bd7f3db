"""
Tests for the frm-lab command line and the experiment runner

Covers config merging (settings < file < flags), exit statuses and the
artifacts each subcommand writes. Sample sizes are kept small so every run
finishes in seconds.
"""

import json
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

import frm_cli.main as cli
from app.errors import ConsistencyError
from app.models.analysis import ExperimentConfig, Turn
from app.services.experiment_runner import ExperimentRunner, run
from frm_cli.main import build_parser, main, merge_config, read_config_file

FAST = ["--identity-samples", "50", "--oracle-samples", "2000"]


def run_cli(*args: str) -> int:
    return main(list(args))


# ============================================================================
# Tests - Config merging
# ============================================================================


def test_experiment_config_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="qpt", colour="blue")
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="qpt", shots=-1)
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="teleport")


def test_experiment_config_normalizes_turn():
    assert ExperimentConfig(experiment="qpt", turn=" FRM ").turn is Turn.FRM


def test_merge_precedence(tmp_path):
    config_file = tmp_path / "run.cfg"
    config_file.write_text("SHOTS=500\nseed=3\nturn=mirror\n")
    args = build_parser().parse_args(["qpt", "--config", str(config_file), "--seed", "11"])
    config = merge_config(args)
    assert config.experiment == "qpt"
    assert config.shots == 500  # file over settings
    assert config.seed == 11  # flag over file
    assert config.turn is Turn.MIRROR


def test_flags_before_subcommand():
    config = merge_config(build_parser().parse_args(["--seed", "3", "--shots", "500", "-v", "qpt"]))
    assert config.seed == 3
    assert config.shots == 500


def test_flag_after_subcommand_wins():
    args = build_parser().parse_args(["--seed", "3", "--turn", "mirror", "qpt", "--seed", "11"])
    assert args.verbose is False
    config = merge_config(args)
    assert config.seed == 11
    assert config.turn is Turn.MIRROR


def test_compensate_maps_to_compensation_experiment():
    config = merge_config(build_parser().parse_args(["compensate", "--mode", "haar"]))
    assert config.experiment == "compensation"
    assert config.disturbance_mode == "haar"


def test_read_config_file_errors(tmp_path):
    with pytest.raises(cli.UsageError):
        read_config_file(tmp_path / "absent.cfg")

    bare = tmp_path / "bare.cfg"
    bare.write_text("shots\n")
    with pytest.raises(cli.UsageError):
        read_config_file(bare)


# ============================================================================
# Tests - Exit statuses
# ============================================================================


def test_usage_errors_exit_2(tmp_path):
    assert run_cli("qpt", "--shots", "-5", "--out", str(tmp_path)) == 2
    assert run_cli("qpt", "-p", "1.5", "--out", str(tmp_path)) == 2
    assert run_cli("qpt", "--config", str(tmp_path / "missing.cfg")) == 2
    assert run_cli("teleport") == 2
    assert run_cli("qpt", "--turn", "prism") == 2

    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour=blue\n")
    assert run_cli("qpt", "--config", str(unknown), "--out", str(tmp_path)) == 2


def test_help_exits_0(capsys):
    assert run_cli("--help") == 0
    assert "frm-lab" in capsys.readouterr().out


def test_consistency_failure_exits_1(tmp_path, monkeypatch):
    class Broken:
        def __init__(self, config):
            pass

        def run(self):
            raise ConsistencyError("U2- U3 U2+ drifted")

    monkeypatch.setattr(cli, "ExperimentRunner", Broken)
    assert run_cli("identities", "--out", str(tmp_path)) == 1


def test_unwritable_output_exits_1(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    assert run_cli("six-state", "--shots", "0", "--out", str(blocker)) == 1


# ============================================================================
# Tests - Subcommands
# ============================================================================


def test_identities_run(tmp_path, capsys):
    assert run_cli("identities", "--out", str(tmp_path), *FAST) == 0
    assert "checks passed" in capsys.readouterr().out

    report = json.loads((tmp_path / "identities.json").read_text())
    names = [c["name"] for c in report["checks"]]
    assert "frm_product" in names
    assert "compensation_haar" in names
    assert "mirror_not_compensated" in names
    assert all(c["passed"] for c in report["checks"])
    assert report["orthogonal_fidelities"]["H"] == pytest.approx(1.0, abs=1e-10)
    assert report["orthogonal_fidelities"]["L+"] == pytest.approx(0.0, abs=1e-10)
    assert len(report["trajectories"]["H"]) == 4


@pytest.mark.parametrize("turn", ["frm", "mirror"])
def test_six_state_run_writes_tables(tmp_path, turn):
    assert run_cli("six-state", "--turn", turn, "--shots", "0", "--out", str(tmp_path)) == 0
    mapping = (tmp_path / f"mapping_{turn}.csv").read_text().splitlines()
    assert mapping[0] == "input_label,predicted_label,observed_label,fidelity,right_fraction,herald_probability"
    assert len(mapping) == 7
    assert (tmp_path / f"counts_{turn}.csv").exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["turn"] == turn
    assert "output_dir" not in summary["config"]


def test_qpt_run_writes_sigma1_ptm(tmp_path):
    assert run_cli("qpt", "--shots", "0", "--out", str(tmp_path)) == 0
    rows = [[float(x) for x in line.split()] for line in (tmp_path / "ptm.txt").read_text().splitlines()]
    assert np.allclose(rows, np.diag([1.0, 1.0, -1.0, -1.0]), atol=1e-10)
    assert (tmp_path / "ptm_target.txt").read_text() == "1 0 0 0\n0 1 0 0\n0 0 -1 0\n0 0 0 -1\n"
    for name in ("rho_in.json", "rho_out.json", "qpt_repetitions.csv", "summary.json"):
        assert (tmp_path / name).exists()


def test_qpt_repetitions_with_counts(tmp_path):
    assert run_cli("qpt", "--shots", "2000", "--repetitions", "3", "--out", str(tmp_path)) == 0
    lines = (tmp_path / "qpt_repetitions.csv").read_text().splitlines()
    assert len(lines) == 4
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["summary"]["repetitions"] == 3
    assert summary["summary"]["mean_fidelity_to_sigma1"] > 0.9


def test_compensate_run(tmp_path, capsys):
    code = run_cli("compensate", "--steps", "5", "--shots", "100", "--out", str(tmp_path), *FAST)
    assert code == 0
    assert "compensation pockels_pair/frm" in capsys.readouterr().out
    steps = (tmp_path / "ergodic_steps.csv").read_text().splitlines()
    assert steps[0] == "step,thetas,axes,instantaneous_fidelity"
    assert len(steps) == 6
    scan = (tmp_path / "fidelity_vs_shots.csv").read_text().splitlines()
    assert scan[0] == "shots_per_setting,mean_fidelity,std_fidelity,seeds"
    assert len(scan) == 4
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["compensation_failures"] == 0
    assert summary["result"]["shots_per_setting"] == 100
    assert summary["result"]["events_per_setting"] == 500


@pytest.mark.parametrize(
    "command",
    [
        ["six-state", "--shots", "1000", "-p", "0.1"],
        ["qpt", "--shots", "1000", "--repetitions", "2", "-p", "0.1"],
        ["compensate", "--steps", "4", "--shots", "100", *FAST],
    ],
)
def test_reruns_are_byte_identical(tmp_path, command):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert run_cli(*command, "--seed", "5", "--out", str(out)) == 0
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    assert "summary.json" in names
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_global_flags_run(tmp_path):
    assert run_cli("--seed", "7", "--shots", "0", "--out", str(tmp_path), "qpt") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["seed"] == 7
    assert summary["config"]["shots"] == 0


# ============================================================================
# Tests - Runner API
# ============================================================================


def test_runner_reports_artifacts(tmp_path):
    config = ExperimentConfig(experiment="qpt", shots=0, output_dir=tmp_path)
    summary = run(config)
    assert summary.ok
    assert summary.experiment == "qpt"
    assert "ptm.txt" in summary.artifacts


def test_runner_identity_report_all_pass(tmp_path):
    config = ExperimentConfig(
        experiment="identities",
        identity_samples=100,
        oracle_samples=5000,
        output_dir=Path(tmp_path),
    )
    report = ExperimentRunner(config).identity_report()
    assert report.all_passed, [c for c in report.checks if not c.passed]
    assert len(report.checks) == 12
