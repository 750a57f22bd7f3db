"""
Simulated Bench for the Faraday-Mirror Lab

Singlet photon-pair source, heralded state preparation, noisy coincidence
counting, the six-state reflection experiments and the entanglement-assisted
process tomography of a turn.

Layer 2 of our 3-layer architecture:
    Layer 1: Pydantic Models - Data validation
    Layer 2: Analysis Modules (THIS FILE) - Physics and inversion
    Layer 3: Runner, Exporter and CLI - Orchestration

SOURCE:
    |Φ⁻⟩ = 2^(-1/2) (|H⟩₁|V⟩₂ - |V⟩₁|H⟩₂), anticorrelated in every basis.
    Projecting photon 1 onto |χ⟩ leaves photon 2 in |χ⊥⟩ with probability ½.

DETECTOR:
    Born probabilities Tr[Π ρ] per outcome, multinomial counts per setting.
    A NoiseModel with shots_per_setting = 0 acquires exact probabilities.

NOISE:
    The depolarizing knob ρ → (1-p)ρ + p I/2 acts on qubit 2 after the turn;
    the fidelity of a pure output to its prediction becomes 1 - p/2.
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence, Union

import numpy as np

from app.analysis.elements import turn_unitary
from app.analysis.spin_core import (
    I2,
    KET_C_MINUS,
    KET_C_PLUS,
    KET_H,
    KET_L_MINUS,
    KET_L_PLUS,
    KET_V,
    PROBE_STATES,
    apply_local_unitary,
    apply_unitary,
    orthogonal_state,
    partial_trace,
    pure_density,
    uhlmann_fidelity,
)
from app.analysis.tomography import (
    average_gate_fidelity,
    fidelity_to_sigma1,
    ptm_from_io_states,
    ptm_of_unitary,
    state_tomography,
)
from app.errors import ConsistencyError, DimensionMismatchError, InvalidStateError
from app.models.analysis import (
    Basis,
    CountRecord,
    MeasurementRecord,
    MeasurementSetting,
    NoiseModel,
    ProbabilityRecord,
    QPTOutput,
    QPTSummary,
    SixStateOutput,
    SixStateRow,
    Turn,
)
from app.models.quantum import BLOCH_TOL, DensityMatrix1Q, PureQubit, TwoQubitDensity

logger = logging.getLogger(__name__)

AnyDensity = Union[DensityMatrix1Q, TwoQubitDensity]

# Kets resolved by each analyzer basis, "+" first
BASIS_KETS: dict[Basis, tuple[PureQubit, PureQubit]] = {
    Basis.HV: (KET_H, KET_V),
    Basis.L: (KET_L_PLUS, KET_L_MINUS),
    Basis.C: (KET_C_PLUS, KET_C_MINUS),
}

# Analyzer basis and outcome that certifies each probe state
PROBE_OUTCOMES: dict[str, tuple[Basis, str]] = {
    "H": (Basis.HV, "+"),
    "V": (Basis.HV, "-"),
    "L+": (Basis.L, "+"),
    "L-": (Basis.L, "-"),
    "C+": (Basis.C, "+"),
    "C-": (Basis.C, "-"),
}

SINGLE_QUBIT_SETTINGS: tuple[MeasurementSetting, ...] = tuple(
    MeasurementSetting(basis2=b) for b in Basis
)
TWO_QUBIT_SETTINGS: tuple[MeasurementSetting, ...] = tuple(
    MeasurementSetting(basis1=b1, basis2=b2) for b1 in Basis for b2 in Basis
)

# Ideal input → output labels for each turn
MAPPING_TABLES: dict[Turn, dict[str, str]] = {
    Turn.MIRROR: {"H": "H", "V": "V", "L+": "L-", "L-": "L+", "C+": "C-", "C-": "C+"},
    Turn.FRM: {"H": "V", "V": "H", "L+": "L+", "L-": "L-", "C+": "C-", "C-": "C+"},
}

_SINGLET_KET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)


# ============================================================================
# Source and heralding
# ============================================================================


def singlet_state() -> TwoQubitDensity:
    """|Φ⁻⟩⟨Φ⁻| in the |HH⟩, |HV⟩, |VH⟩, |VV⟩ basis."""
    return TwoQubitDensity(m=np.outer(_SINGLET_KET, _SINGLET_KET.conj()))


def herald_prepare(chi: PureQubit) -> tuple[PureQubit, float]:
    """
    Remote preparation of photon 2 by projecting photon 1 of the singlet on |χ⟩.

    Returns:
        (state of photon 2, herald probability); the state is |χ⊥⟩ up to phase
        and the probability is ½ for every χ
    """
    conditional = chi.vector.conj() @ _SINGLET_KET.reshape(2, 2)
    probability = float(np.real(np.vdot(conditional, conditional)))
    return PureQubit.from_vector(conditional), probability


# ============================================================================
# Detector
# ============================================================================


def _projector(setting: MeasurementSetting, outcome: str) -> np.ndarray:
    kets = []
    bases = [setting.basis1, setting.basis2] if setting.is_two_qubit else [setting.basis2]
    for basis, sign in zip(bases, outcome):
        plus, minus = BASIS_KETS[basis]
        kets.append((plus if sign == "+" else minus).vector)
    ket = kets[0] if len(kets) == 1 else np.kron(kets[0], kets[1])
    return np.outer(ket, ket.conj())


def _setting_probabilities(rho: AnyDensity, setting: MeasurementSetting) -> dict[str, float]:
    expected_dim = 4 if setting.is_two_qubit else 2
    if rho.m.shape[0] != expected_dim:
        raise DimensionMismatchError(
            f"Setting {setting.label} needs a {expected_dim}-dim state, got {rho.m.shape[0]}"
        )
    probabilities = {
        outcome: float(np.real(np.trace(_projector(setting, outcome) @ rho.m)))
        for outcome in setting.outcomes
    }
    total = sum(probabilities.values())
    if abs(total - 1.0) > 1e-9:
        logger.error(f"Born probabilities for {setting.label} sum to {total:.12f}")
        raise ConsistencyError(f"Born probabilities for {setting.label} sum to {total:.12f}")
    # Rounding can leave -1e-17 on impossible outcomes
    clipped = {k: max(v, 0.0) for k, v in probabilities.items()}
    norm = sum(clipped.values())
    return {k: v / norm for k, v in clipped.items()}


def born_probabilities(
    rho: AnyDensity,
    settings: Sequence[MeasurementSetting],
) -> list[ProbabilityRecord]:
    """Exact outcome probabilities for each setting (shot-free acquisition)."""
    if not settings:
        raise ValueError("At least one measurement setting is required")
    return [
        ProbabilityRecord(setting=s, probabilities=_setting_probabilities(rho, s)) for s in settings
    ]


def simulate_counts(
    rho: AnyDensity,
    settings: Sequence[MeasurementSetting],
    noise: NoiseModel,
    rng: np.random.Generator,
    shots: Optional[int] = None,
) -> list[CountRecord]:
    """
    Multinomial coincidence counts per setting.

    Args:
        rho: state arriving at the analyzers
        settings: analyzer settings, one record each
        noise: supplies shots_per_setting (depolarization is applied upstream)
        rng: caller-owned generator; identical seeds give identical tables
        shots: overrides noise.shots_per_setting (time-integrated runs)

    Raises:
        ConsistencyError: if a setting's Born probabilities do not sum to 1
    """
    if not settings:
        raise ValueError("At least one measurement setting is required")
    n = noise.shots_per_setting if shots is None else shots
    if n < 0:
        raise ValueError(f"shots must be non-negative, got {n}")

    records = []
    for setting in settings:
        probabilities = _setting_probabilities(rho, setting)
        outcomes = list(setting.outcomes)
        if n == 0:
            drawn = np.zeros(len(outcomes), dtype=np.int64)
        else:
            drawn = rng.multinomial(n, [probabilities[o] for o in outcomes])
        records.append(
            CountRecord(setting=setting, counts={o: int(c) for o, c in zip(outcomes, drawn)})
        )
    return records


def acquire_records(
    rho: AnyDensity,
    settings: Sequence[MeasurementSetting],
    noise: NoiseModel,
    rng: np.random.Generator,
    shots: Optional[int] = None,
) -> list[MeasurementRecord]:
    """Exact probabilities when the noise model is shot-free, sampled counts otherwise."""
    if noise.shot_free:
        return born_probabilities(rho, settings)
    return simulate_counts(rho, settings, noise, rng, shots=shots)


# ============================================================================
# Noise
# ============================================================================


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise InvalidStateError(f"Depolarizing probability {p} outside [0, 1]")


def depolarize(rho: DensityMatrix1Q, p: float) -> DensityMatrix1Q:
    """(1-p)ρ + p I/2: the Bloch vector shrinks by (1-p)."""
    _check_probability(p)
    return DensityMatrix1Q(m=(1.0 - p) * rho.m + p * I2 / 2.0)


def depolarize_qubit2(rho: TwoQubitDensity, p: float) -> TwoQubitDensity:
    """(1-p)ρ + p ρ₁ ⊗ I/2, the depolarizing channel on qubit 2 only."""
    _check_probability(p)
    rho1 = partial_trace(rho, keep=1)
    return TwoQubitDensity(m=(1.0 - p) * rho.m + p * np.kron(rho1.m, I2 / 2.0))


def _ptm_tolerance(noise: NoiseModel) -> float:
    if noise.shot_free:
        return BLOCH_TOL
    return 5.0 / np.sqrt(noise.shots_per_setting)


# ============================================================================
# Six-state reflection experiment
# ============================================================================


class ReflectionExperiment:
    """
    Heralds the six probe states on photon 2, sends each through a turn and
    tomographs what comes back.

    Usage:
        experiment = ReflectionExperiment(NoiseModel(depolarizing_p=0.16))
        table = experiment.run(Turn.FRM, rng)
    """

    def __init__(self, noise: Optional[NoiseModel] = None):
        self.noise = noise or NoiseModel()

    def run(self, turn: Turn, rng: Optional[np.random.Generator] = None) -> SixStateOutput:
        rng = rng if rng is not None else np.random.default_rng(self.noise.seed)
        u_turn = turn_unitary(turn)
        table = MAPPING_TABLES[turn]

        rows: list[SixStateRow] = []
        records: list[tuple[str, list[MeasurementRecord]]] = []
        for label, probe in PROBE_STATES.items():
            # Photon 1 is projected on the antipode so photon 2 carries the probe
            prepared, herald_p = herald_prepare(orthogonal_state(probe))
            rho = apply_unitary(pure_density(prepared), u_turn)
            rho = depolarize(rho, self.noise.depolarizing_p)

            acquired = acquire_records(rho, SINGLE_QUBIT_SETTINGS, self.noise, rng)
            tomo = state_tomography(acquired, seed=self.noise.seed)

            predicted = table[label]
            fidelity = uhlmann_fidelity(tomo.state, pure_density(PROBE_STATES[predicted]))
            rows.append(
                SixStateRow(
                    input_label=label,
                    predicted_label=predicted,
                    observed_label=self._best_match(tomo.state),
                    fidelity=fidelity,
                    right_fraction=self._right_fraction(acquired, predicted),
                    herald_probability=herald_p,
                )
            )
            records.append((label, acquired))
            logger.debug(f"{turn.value}: {label} → {predicted}, F = {fidelity:.6f}")

        output = SixStateOutput(
            turn=turn,
            depolarizing_p=self.noise.depolarizing_p,
            shots_per_setting=self.noise.shots_per_setting,
            rows=rows,
            records=records,
        )
        self._check_noiseless(output)
        logger.info(f"Six-state {turn.value}: min fidelity {output.min_fidelity:.6f}")
        return output

    @staticmethod
    def _best_match(state: DensityMatrix1Q) -> str:
        scores = {label: uhlmann_fidelity(state, pure_density(k)) for label, k in PROBE_STATES.items()}
        return max(scores, key=scores.get)

    @staticmethod
    def _right_fraction(acquired: Sequence[MeasurementRecord], predicted: str) -> float:
        basis, outcome = PROBE_OUTCOMES[predicted]
        for record in acquired:
            if record.setting.basis2 is basis:
                return float(min(max(record.frequencies()[outcome], 0.0), 1.0))
        raise ConsistencyError(f"No record measured in basis {basis.value}")

    def _check_noiseless(self, output: SixStateOutput) -> None:
        """With no noise at all the table must be reproduced exactly."""
        if not (self.noise.shot_free and self.noise.depolarizing_p == 0.0):
            return
        table = MAPPING_TABLES[output.turn]
        for row in output.rows:
            if row.observed_label != table[row.input_label] or row.fidelity < 1.0 - BLOCH_TOL:
                logger.error(f"Noiseless {output.turn.value} row {row.input_label} failed: {row}")
                raise ConsistencyError(
                    f"Noiseless {output.turn.value} mapping broke at {row.input_label}: "
                    f"observed {row.observed_label}, F = {row.fidelity:.12f}"
                )


def six_state_experiment(
    turn: Turn,
    noise: NoiseModel,
    rng: Optional[np.random.Generator] = None,
) -> SixStateOutput:
    """Mapping table of one turn over the six probe states."""
    return ReflectionExperiment(noise).run(turn, rng)


# ============================================================================
# Entanglement-assisted process tomography
# ============================================================================


def entanglement_assisted_qpt(
    turn: Turn,
    noise: NoiseModel,
    rng: Optional[np.random.Generator] = None,
) -> QPTOutput:
    """
    Full QPT pipeline of a turn acting on photon 2 of the singlet.

    1. Tomograph ρ_in (9 settings).
    2. Send qubit 2 through the turn, then the depolarizing knob.
    3. Tomograph ρ_out (9 settings).
    4. Invert S_out = S_in · Mᵀ.
    """
    rng = rng if rng is not None else np.random.default_rng(noise.seed)
    singlet = singlet_state()

    tomo_in = state_tomography(
        acquire_records(singlet, TWO_QUBIT_SETTINGS, noise, rng), seed=noise.seed
    )

    u_turn = turn_unitary(turn)
    rho_out = depolarize_qubit2(apply_local_unitary(singlet, u_turn), noise.depolarizing_p)
    tomo_out = state_tomography(
        acquire_records(rho_out, TWO_QUBIT_SETTINGS, noise, rng), seed=noise.seed
    )

    ptm = ptm_from_io_states(tomo_in.state, tomo_out.state, tolerance=_ptm_tolerance(noise))
    target = ptm_of_unitary(u_turn)

    return QPTOutput(
        turn=turn,
        ptm=ptm,
        target_ptm=target,
        fidelity_to_sigma1=fidelity_to_sigma1(ptm),
        fidelity_to_target=average_gate_fidelity(ptm, target),
        input_fidelity=uhlmann_fidelity(tomo_in.state, singlet),
        first_row_deviation=ptm.first_row_deviation(),
        shots_per_setting=noise.shots_per_setting,
        depolarizing_p=noise.depolarizing_p,
        input_tomography=tomo_in,
        output_tomography=tomo_out,
    )


def repeated_qpt(
    turn: Turn,
    noise: NoiseModel,
    repetitions: int,
) -> tuple[QPTSummary, list[QPTOutput]]:
    """
    Repeat the QPT pipeline over independent generator streams.

    Repetition k uses default_rng(SeedSequence(noise.seed).spawn(repetitions)[k]).
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")

    streams = np.random.SeedSequence(noise.seed).spawn(repetitions)
    outputs = [entanglement_assisted_qpt(turn, noise, np.random.default_rng(s)) for s in streams]

    fidelities = np.array([o.fidelity_to_sigma1 for o in outputs])
    summary = QPTSummary(
        turn=turn,
        repetitions=repetitions,
        mean_fidelity_to_sigma1=float(np.mean(fidelities)),
        std_fidelity_to_sigma1=float(np.std(fidelities, ddof=1)) if repetitions > 1 else 0.0,
        mean_fidelity_to_target=float(np.mean([o.fidelity_to_target for o in outputs])),
        mean_input_fidelity=float(np.mean([o.input_fidelity for o in outputs])),
        seed=noise.seed,
    )
    logger.info(
        f"QPT {turn.value} over {repetitions} repetitions: "
        f"F_σ1 = {summary.mean_fidelity_to_sigma1:.5f} ± {summary.std_fidelity_to_sigma1:.5f}"
    )
    return summary, outputs


__all__ = [
    "BASIS_KETS",
    "PROBE_OUTCOMES",
    "SINGLE_QUBIT_SETTINGS",
    "TWO_QUBIT_SETTINGS",
    "MAPPING_TABLES",
    "singlet_state",
    "herald_prepare",
    "born_probabilities",
    "simulate_counts",
    "acquire_records",
    "depolarize",
    "depolarize_qubit2",
    "ReflectionExperiment",
    "six_state_experiment",
    "entanglement_assisted_qpt",
    "repeated_qpt",
]
