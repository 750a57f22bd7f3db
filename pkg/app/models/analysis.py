"""
Bench, Tomography and Compensation Pydantic Models

These models represent Layer 1 of our 3-layer architecture:
    Layer 1: Pydantic Models (quantum.py, THIS FILE) - Data validation
    Layer 2: Analysis Modules (app/analysis/) - Physics and inversion
    Layer 3: Runner, Exporter and CLI - Orchestration

Covers the optical bench (elements, chains), the detector model (settings,
counts, noise), tomography results, the stochastic disturbance process and
the validated run configuration plus every experiment output.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from app.models.quantum import (
    AxisAngle,
    DensityMatrix1Q,
    PauliTransferMatrix,
    TwoQubitDensity,
    matrix_from_record,
    matrix_record,
)


# ── Enums ──────────────────────────────────────────────────────────────


class ReciprocityKind(str, Enum):
    """How an element behaves when the light retraces it."""

    RECIPROCAL = "reciprocal"  # birefringence, retarders: n' = (n1, -n2, -n3)
    FARADAY = "faraday"  # magneto-optic: axis kept, phase inverted


class Turn(str, Enum):
    """What terminates the optical path."""

    MIRROR = "mirror"  # bare mirror, iσ₃
    FRM = "frm"  # Faraday rotator + mirror, iσ₁


class Basis(str, Enum):
    """Analyzer bases, labeled by the states they resolve."""

    HV = "HV"  # σ₃
    L = "L"  # σ₁
    C = "C"  # σ₂


# ============================================================================
# Optical bench
# ============================================================================


class OpticalElement(BaseModel):
    """
    A loss-free bench element: forward-pass rotation plus reciprocity kind.

    Faraday elements must rotate about σ₂ (the device turns the polarization
    plane, a σ₂-axis rotation on the Poincaré sphere).
    """

    model_config = ConfigDict(frozen=True)

    kind: ReciprocityKind
    aa: AxisAngle
    label: str = Field(default="", max_length=40)

    @model_validator(mode="after")
    def faraday_axis_along_sigma2(self) -> "OpticalElement":
        if self.kind is ReciprocityKind.FARADAY:
            n1, n2, n3 = self.aa.n
            if abs(abs(n2) - 1.0) > 1e-12:
                raise ValueError("Faraday elements must rotate about the σ₂ axis")
        return self

    def to_record(self) -> dict:
        return {
            "kind": self.kind.value,
            "axis": list(self.aa.n),
            "theta": self.aa.theta,
            "label": self.label,
        }


class ElementChain(BaseModel):
    """Ordered A→B optical path, first element nearest the source."""

    model_config = ConfigDict(frozen=True)

    elements: list[OpticalElement] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.elements)

    def to_records(self) -> list[dict]:
        return [e.to_record() for e in self.elements]


# ============================================================================
# Detector model
# ============================================================================


class MeasurementSetting(BaseModel):
    """
    Analyzer setting: basis for qubit 1 (None for single-qubit runs) and qubit 2.
    """

    model_config = ConfigDict(frozen=True)

    basis1: Optional[Basis] = None
    basis2: Basis

    @property
    def is_two_qubit(self) -> bool:
        return self.basis1 is not None

    @property
    def label(self) -> str:
        if self.basis1 is None:
            return self.basis2.value
        return f"{self.basis1.value}/{self.basis2.value}"

    @property
    def outcomes(self) -> tuple[str, ...]:
        if self.is_two_qubit:
            return ("++", "+-", "-+", "--")
        return ("+", "-")


class CountRecord(BaseModel):
    """Coincidence counts for one setting, keyed by outcome label (+/- per qubit)."""

    model_config = ConfigDict(frozen=True)

    setting: MeasurementSetting
    counts: dict[str, int]

    @model_validator(mode="after")
    def counts_match_setting(self) -> "CountRecord":
        if set(self.counts) != set(self.setting.outcomes):
            raise ValueError(
                f"Outcomes {sorted(self.counts)} do not match setting {self.setting.label}"
            )
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("Counts must be non-negative")
        return self

    @property
    def shots(self) -> int:
        return sum(self.counts.values())

    def frequencies(self) -> dict[str, float]:
        total = self.shots
        return {k: v / total for k, v in self.counts.items()}


class ProbabilityRecord(BaseModel):
    """Exact Born probabilities for one setting (shot-free acquisition)."""

    model_config = ConfigDict(frozen=True)

    setting: MeasurementSetting
    probabilities: dict[str, float]

    @model_validator(mode="after")
    def probabilities_match_setting(self) -> "ProbabilityRecord":
        if set(self.probabilities) != set(self.setting.outcomes):
            raise ValueError(f"Outcomes do not match setting {self.setting.label}")
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"Probabilities sum to {total:.12f}, expected 1")
        return self

    def frequencies(self) -> dict[str, float]:
        return dict(self.probabilities)


MeasurementRecord = Union[CountRecord, ProbabilityRecord]


class NoiseModel(BaseModel):
    """
    Unstructured noise knob plus detector statistics.

    shots_per_setting = 0 means shot-free: experiments use exact Born
    probabilities instead of sampled counts.
    """

    depolarizing_p: float = Field(default=0.0, ge=0.0, le=1.0)
    shots_per_setting: int = Field(default=10_000, ge=0, le=10_000_000)
    seed: int = Field(default=7, ge=0)

    @property
    def shot_free(self) -> bool:
        return self.shots_per_setting == 0


# ============================================================================
# Tomography
# ============================================================================


class TomoResult(BaseModel):
    """
    State reconstruction from measurement records.

    `raw_linear` is the linear-inversion estimate before the physicality
    projection; `clipped_mass` is Σ|λ_new - λ_old| over its eigenvalues.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    state: Union[DensityMatrix1Q, TwoQubitDensity]
    raw_linear: np.ndarray
    settings_used: list[str]
    shots: int = Field(..., ge=0, description="Total events used (0 when shot-free)")
    seed: Optional[int] = None
    clipped_mass: float = Field(default=0.0, ge=0.0)

    @field_validator("raw_linear", mode="before")
    @classmethod
    def coerce_raw(cls, v: Any) -> np.ndarray:
        if isinstance(v, dict):
            v = matrix_from_record(v)
        arr = np.array(v, dtype=complex)
        arr.setflags(write=False)
        return arr

    @field_serializer("raw_linear")
    def serialize_raw(self, m: np.ndarray) -> dict:
        return matrix_record(m)


# ============================================================================
# Compensation
# ============================================================================


class DisturbanceProcess(BaseModel):
    """Stochastically time-varying unitary 𝕌(t) inserted before the turn."""

    mode: Literal["pockels_pair", "haar"] = "pockels_pair"
    seed: int = Field(default=7, ge=0)
    steps: int = Field(default=100, ge=1, le=100_000)


# ============================================================================
# Experiment outputs
# ============================================================================


class SixStateRow(BaseModel):
    """One input qubit of the six-state reflection experiment."""

    input_label: str
    predicted_label: str
    observed_label: str
    fidelity: float = Field(..., ge=0.0, le=1.0, description="Tomographic fidelity to prediction")
    right_fraction: float = Field(
        ..., ge=0.0, le=1.0, description="Fraction of events in the predicted outcome"
    )
    herald_probability: float = Field(..., ge=0.0, le=1.0)


class SixStateOutput(BaseModel):
    """Mapping table for one turn (Mirror or FRM)."""

    turn: Turn
    depolarizing_p: float
    shots_per_setting: int
    rows: list[SixStateRow]
    records: list[tuple[str, list[MeasurementRecord]]] = Field(default_factory=list, exclude=True)

    @property
    def mapping(self) -> dict[str, str]:
        return {row.input_label: row.observed_label for row in self.rows}

    @property
    def min_fidelity(self) -> float:
        return min(row.fidelity for row in self.rows)


class QPTOutput(BaseModel):
    """Entanglement-assisted process tomography of one turn."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    turn: Turn
    ptm: PauliTransferMatrix
    target_ptm: PauliTransferMatrix
    fidelity_to_sigma1: float
    fidelity_to_target: float
    input_fidelity: float = Field(..., description="Reconstructed ρ_in vs ideal singlet")
    first_row_deviation: float
    shots_per_setting: int
    depolarizing_p: float
    input_tomography: TomoResult = Field(..., exclude=True)
    output_tomography: TomoResult = Field(..., exclude=True)


class QPTSummary(BaseModel):
    """Spread of the process fidelity over seeded repetitions."""

    turn: Turn
    repetitions: int
    mean_fidelity_to_sigma1: float
    std_fidelity_to_sigma1: float
    mean_fidelity_to_target: float
    mean_input_fidelity: float
    seed: int


class ErgodicStep(BaseModel):
    """Per-step record of the ergodic compensation run."""

    step: int
    thetas: list[float]
    axes: list[tuple[float, float, float]]
    instantaneous_fidelity: float


class ErgodicOutput(BaseModel):
    """Fidelity between the tomographed outputs with cells active / inactive."""

    mode: Literal["pockels_pair", "haar"]
    turn: Turn
    steps: int
    shots_per_setting: int
    events_per_setting: int = Field(
        ..., ge=0, description="Events per setting in each time-integrated tomography (steps x shots)"
    )
    depolarizing_p: float
    seed: int
    fidelity: float
    mean_instantaneous_fidelity: float
    records: list[ErgodicStep]


class IdentityCheck(BaseModel):
    """One named algebraic identity and how close it came."""

    name: str
    passed: bool
    deviation: float
    tolerance: float


class IdentityReport(BaseModel):
    """Everything the `identities` experiment verifies."""

    frm_unitary: dict
    checks: list[IdentityCheck]
    orthogonal_fidelities: dict[str, float] = Field(
        ..., description="FRM output vs the orthogonal of the input, per probe state"
    )
    trajectories: dict[str, list[tuple[float, float, float]]] = Field(
        ..., description="Bloch points P, O, O', P' through the FRM, per probe state"
    )

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)


# ============================================================================
# Run configuration
# ============================================================================


class ExperimentConfig(BaseModel):
    """
    Validated configuration for one CLI run. Unknown keys are rejected.
    """

    model_config = ConfigDict(extra="forbid")

    experiment: Literal["six-state", "qpt", "compensation", "identities"]
    turn: Turn = Turn.FRM
    shots: int = Field(default=10_000, ge=0, le=10_000_000)
    depolarizing_p: float = Field(default=0.0, ge=0.0, le=1.0)
    disturbance_mode: Literal["pockels_pair", "haar"] = "pockels_pair"
    steps: int = Field(default=100, ge=1, le=100_000)
    seed: int = Field(default=7, ge=0)
    repetitions: int = Field(default=1, ge=1, le=10_000)
    identity_samples: int = Field(default=1000, ge=1, le=1_000_000)
    oracle_samples: int = Field(default=100_000, ge=1, le=10_000_000)
    output_dir: Path = Path("results")

    @field_validator("turn", mode="before")
    @classmethod
    def normalize_turn(cls, v: Any) -> Any:
        if isinstance(v, str):
            return v.strip().lower()
        return v

    def noise_model(self) -> NoiseModel:
        return NoiseModel(
            depolarizing_p=self.depolarizing_p,
            shots_per_setting=self.shots,
            seed=self.seed,
        )

    def disturbance_process(self) -> DisturbanceProcess:
        return DisturbanceProcess(mode=self.disturbance_mode, seed=self.seed, steps=self.steps)


class RunSummary(BaseModel):
    """What `run` reports back to the CLI."""

    experiment: str
    headline: str
    artifacts: list[str]
    ok: bool = True


__all__ = [
    "ReciprocityKind",
    "Turn",
    "Basis",
    "OpticalElement",
    "ElementChain",
    "MeasurementSetting",
    "CountRecord",
    "ProbabilityRecord",
    "MeasurementRecord",
    "NoiseModel",
    "TomoResult",
    "DisturbanceProcess",
    "SixStateRow",
    "SixStateOutput",
    "QPTOutput",
    "QPTSummary",
    "ErgodicStep",
    "ErgodicOutput",
    "IdentityCheck",
    "IdentityReport",
    "ExperimentConfig",
    "RunSummary",
]
