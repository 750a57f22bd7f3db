"""
Experiment Runner - executes one configured experiment and writes its artifacts.

Every run re-verifies 𝕌₂₋𝕌₃𝕌₂₊ = iσ₁ before doing anything else and aborts
with ConsistencyError on failure. Artifacts go to config.output_dir under
fixed names:

    identities    identities.json
    six-state     mapping_<turn>.csv, counts_<turn>.csv, summary.json
    qpt           ptm.txt, ptm_target.txt, rho_in.json, rho_out.json,
                  qpt_repetitions.csv, summary.json
    compensation  ergodic_steps.csv, fidelity_vs_shots.csv, summary.json

Generators: the counting stream of a run is default_rng(config.seed); QPT
repetitions and ergodic steps split their own streams from the same seed.
"""

from __future__ import annotations

import logging
from itertools import permutations
from pathlib import Path

import numpy as np
import pandas as pd

from app.analysis.bench import (
    repeated_qpt,
    singlet_state,
    six_state_experiment,
)
from app.analysis.compensation import (
    COMPENSATION_TOL,
    compensation_check,
    ergodic_experiment,
    fidelity_vs_shots,
    mirror_control,
)
from app.analysis.elements import (
    FRM_TARGET,
    faraday_pass,
    frm_trajectory,
    frm_unitary,
    mirror_reflection,
)
from app.analysis.spin_core import (
    I2,
    PAULIS,
    PROBE_STATES,
    apply_local_unitary,
    identity_unitary,
    orthogonal_state,
    phase_distance,
)
from app.analysis.tomography import (
    SIGMA1_PTM,
    fidelity_to_sigma1,
    haar_average_fidelity,
    ptm_from_io_states,
)
from app.errors import ConsistencyError
from app.models.analysis import (
    ExperimentConfig,
    IdentityCheck,
    IdentityReport,
    RunSummary,
    Turn,
)
from app.models.quantum import ALGEBRA_TOL, BLOCH_TOL, PauliTransferMatrix, matrix_record
from app.services.exporter import export, export_json, export_records

logger = logging.getLogger(__name__)

# Shots per setting scanned by the compensation run
SHOTS_SCAN = (100, 1_000, 10_000)
SCAN_SEEDS = 5


class ExperimentRunner:
    """
    Runs the experiment named in an ExperimentConfig.

    Usage:
        summary = ExperimentRunner(config).run()
        print(summary.headline)
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.output_dir = Path(config.output_dir)

    def run(self) -> RunSummary:
        u = frm_unitary()
        logger.info(f"Verified U2- U3 U2+ = iσ₁ (max deviation {np.max(np.abs(u.u - FRM_TARGET.u)):.1e})")

        handlers = {
            "identities": self._run_identities,
            "six-state": self._run_six_state,
            "qpt": self._run_qpt,
            "compensation": self._run_compensation,
        }
        logger.info(f"Running {self.config.experiment} (seed {self.config.seed})")
        summary = handlers[self.config.experiment]()
        if not summary.ok:
            logger.error(summary.headline)
            raise ConsistencyError(summary.headline)
        return summary

    def _path(self, name: str) -> Path:
        return self.output_dir / name

    def _config_record(self) -> dict:
        # output_dir is left out so reruns into another directory stay identical
        return self.config.model_dump(mode="json", exclude={"output_dir"})

    # ========================================================================
    # identities
    # ========================================================================

    def _run_identities(self) -> RunSummary:
        report = self.identity_report()
        path = export_json(report, self._path("identities.json"))
        passed = sum(c.passed for c in report.checks)
        headline = f"identities: {passed}/{len(report.checks)} checks passed"
        return RunSummary(
            experiment="identities",
            headline=headline,
            artifacts=[path.name],
            ok=report.all_passed,
        )

    def identity_report(self) -> IdentityReport:
        cfg = self.config
        checks: list[IdentityCheck] = []

        def record(name: str, deviation: float, tolerance: float, passed: bool | None = None) -> None:
            ok = deviation <= tolerance if passed is None else passed
            checks.append(IdentityCheck(name=name, passed=bool(ok), deviation=float(deviation), tolerance=tolerance))

        frm = frm_unitary()
        record("frm_product", float(np.max(np.abs(frm.u - FRM_TARGET.u))), ALGEBRA_TOL)

        fwd, bwd = faraday_pass("forward"), faraday_pass("backward")
        record("faraday_inverse_pair", phase_distance(fwd @ bwd, identity_unitary()), ALGEBRA_TOL)

        worst = 0.0
        for i, j, k in permutations((1, 2, 3)):
            sign = 1 if (i, j, k) in {(1, 2, 3), (2, 3, 1), (3, 1, 2)} else -1
            worst = max(worst, float(np.max(np.abs(PAULIS[i] @ PAULIS[j] - sign * 1j * PAULIS[k]))))
        record("pauli_algebra", worst, ALGEBRA_TOL)

        u3 = mirror_reflection()
        record("double_mirror", float(np.max(np.abs((u3 @ u3).u + I2))), ALGEBRA_TOL)

        for mode in ("haar", "pockels_pair"):
            failures, deviation = compensation_check(cfg.identity_samples, mode=mode, seed=cfg.seed)
            record(f"compensation_{mode}", deviation, COMPENSATION_TOL, passed=failures == 0)

        lowest = mirror_control(cfg.identity_samples, seed=cfg.seed)
        record("mirror_not_compensated", lowest, 0.5, passed=lowest < 0.5)

        singlet = singlet_state()
        ptm = ptm_from_io_states(singlet, apply_local_unitary(singlet, frm))
        record("qpt_exact_sigma1", float(np.max(np.abs(ptm.m - SIGMA1_PTM.m))), BLOCH_TOL)
        record("fidelity_to_sigma1_exact", abs(fidelity_to_sigma1(ptm) - 1.0), BLOCH_TOL)

        identity_ptm = PauliTransferMatrix(m=np.eye(4))
        mean, stderr = haar_average_fidelity(
            identity_ptm, SIGMA1_PTM, cfg.oracle_samples, np.random.default_rng(cfg.seed)
        )
        record("oracle_identity_one_third", abs(mean - 1.0 / 3.0), 3.0 * stderr)
        record("closed_form_identity_one_third", abs(fidelity_to_sigma1(identity_ptm) - 1.0 / 3.0), ALGEBRA_TOL)

        orthogonal = {}
        trajectories = {}
        for label, psi in PROBE_STATES.items():
            out = frm.apply(psi)
            orthogonal[label] = float(abs(np.vdot(orthogonal_state(psi).vector, out.vector)) ** 2)
            trajectories[label] = [(p.r1, p.r2, p.r3) for p in frm_trajectory(psi)]

        expected = {"H": 1.0, "V": 1.0, "L+": 0.0, "L-": 0.0, "C+": 1.0, "C-": 1.0}
        record(
            "frm_non_universality",
            max(abs(orthogonal[k] - v) for k, v in expected.items()),
            BLOCH_TOL,
        )

        return IdentityReport(
            frm_unitary=matrix_record(frm.u),
            checks=checks,
            orthogonal_fidelities=orthogonal,
            trajectories=trajectories,
        )

    # ========================================================================
    # six-state
    # ========================================================================

    def _run_six_state(self) -> RunSummary:
        cfg = self.config
        output = six_state_experiment(cfg.turn, cfg.noise_model(), np.random.default_rng(cfg.seed))
        turn = cfg.turn.value

        mapping = pd.DataFrame(
            [row.model_dump() for row in output.rows],
            columns=[
                "input_label",
                "predicted_label",
                "observed_label",
                "fidelity",
                "right_fraction",
                "herald_probability",
            ],
        )
        artifacts = [
            export(mapping, self._path(f"mapping_{turn}.csv")),
            export_records(output.records, self._path(f"counts_{turn}.csv")),
            export_json(
                {"config": self._config_record(), "result": output.model_dump(mode="json")},
                self._path("summary.json"),
            ),
        ]

        matches = sum(row.observed_label == row.predicted_label for row in output.rows)
        headline = (
            f"six-state {turn}: {matches}/6 outputs match, "
            f"min fidelity {output.min_fidelity:.6f}"
        )
        return RunSummary(
            experiment="six-state",
            headline=headline,
            artifacts=[p.name for p in artifacts],
        )

    # ========================================================================
    # qpt
    # ========================================================================

    def _run_qpt(self) -> RunSummary:
        cfg = self.config
        summary, outputs = repeated_qpt(cfg.turn, cfg.noise_model(), cfg.repetitions)
        first = outputs[0]

        repetitions = pd.DataFrame(
            [
                {
                    "repetition": k,
                    "fidelity_to_sigma1": o.fidelity_to_sigma1,
                    "fidelity_to_target": o.fidelity_to_target,
                    "input_fidelity": o.input_fidelity,
                    "first_row_deviation": o.first_row_deviation,
                }
                for k, o in enumerate(outputs)
            ],
            columns=[
                "repetition",
                "fidelity_to_sigma1",
                "fidelity_to_target",
                "input_fidelity",
                "first_row_deviation",
            ],
        )
        artifacts = [
            export(first.ptm, self._path("ptm.txt")),
            export(first.target_ptm, self._path("ptm_target.txt")),
            export_json(first.input_tomography, self._path("rho_in.json")),
            export_json(first.output_tomography, self._path("rho_out.json")),
            export(repetitions, self._path("qpt_repetitions.csv")),
            export_json(
                {
                    "config": self._config_record(),
                    "summary": summary.model_dump(mode="json"),
                    "first_repetition": first.model_dump(mode="json"),
                },
                self._path("summary.json"),
            ),
        ]

        headline = (
            f"qpt {cfg.turn.value}: fidelity to σ₁ {summary.mean_fidelity_to_sigma1:.6f} "
            f"± {summary.std_fidelity_to_sigma1:.6f} over {summary.repetitions} repetition(s)"
        )
        return RunSummary(experiment="qpt", headline=headline, artifacts=[p.name for p in artifacts])

    # ========================================================================
    # compensation
    # ========================================================================

    def _run_compensation(self) -> RunSummary:
        cfg = self.config
        proc = cfg.disturbance_process()
        noise = cfg.noise_model()

        result = ergodic_experiment(proc, noise, np.random.default_rng(cfg.seed), turn=cfg.turn)
        failures, deviation = compensation_check(cfg.identity_samples, mode=proc.mode, seed=cfg.seed)
        scan = fidelity_vs_shots(proc, noise, shots=SHOTS_SCAN, seeds=SCAN_SEEDS, turn=cfg.turn)

        steps = pd.DataFrame(
            [
                {
                    "step": s.step,
                    "thetas": " ".join(f"{t:.17g}" for t in s.thetas),
                    "axes": " ".join(f"{x + 0.0:.17g}" for axis in s.axes for x in axis),
                    "instantaneous_fidelity": s.instantaneous_fidelity,
                }
                for s in result.records
            ],
            columns=["step", "thetas", "axes", "instantaneous_fidelity"],
        )
        artifacts = [
            export(steps, self._path("ergodic_steps.csv")),
            export(scan, self._path("fidelity_vs_shots.csv")),
            export_json(
                {
                    "config": self._config_record(),
                    "result": result.model_dump(mode="json", exclude={"records"}),
                    "compensation_failures": failures,
                    "compensation_max_deviation": deviation,
                },
                self._path("summary.json"),
            ),
        ]

        ok = True
        if cfg.turn is Turn.FRM and failures:
            logger.error(f"{failures} disturbances escaped FRM compensation (max {deviation:.2e})")
            ok = False
        if cfg.turn is Turn.FRM and noise.shot_free and noise.depolarizing_p == 0.0:
            ok = ok and result.fidelity >= 1.0 - BLOCH_TOL

        headline = (
            f"compensation {proc.mode}/{cfg.turn.value}: fidelity {result.fidelity:.6f} "
            f"over {proc.steps} steps ({result.events_per_setting} events per setting), "
            f"{failures} compensation failures"
        )
        return RunSummary(
            experiment="compensation",
            headline=headline,
            artifacts=[p.name for p in artifacts],
            ok=ok,
        )


def run(config: ExperimentConfig) -> RunSummary:
    """Execute the configured experiment and write its artifacts."""
    return ExperimentRunner(config).run()


__all__ = ["SHOTS_SCAN", "SCAN_SEEDS", "ExperimentRunner", "run"]
