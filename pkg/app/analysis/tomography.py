"""
Tomography for the Faraday-Mirror Lab

State tomography from measurement records, entanglement-assisted process
tomography producing the 4×4 Pauli transfer matrix, and process fidelities.

Layer 2 of our 3-layer architecture:
    Layer 1: Pydantic Models - Data validation
    Layer 2: Analysis Modules (THIS FILE) - Physics and inversion
    Layer 3: Runner, Exporter and CLI - Orchestration

STATE TOMOGRAPHY:
    3 Pauli settings per qubit (9 for a pair). Each ⟨σᵢ⟩ or ⟨σᵢ⊗σⱼ⟩ is the
    signed outcome frequency; the linear-inversion estimate
        ρ = ¼ Σᵢⱼ sᵢⱼ σᵢ⊗σⱼ
    is then projected to the nearest trace-1 PSD matrix: negative eigenvalues
    are clipped to zero and the clipped mass is subtracted evenly from the
    kept eigenvalues.

PROCESS TOMOGRAPHY:
    With ρ_out = (I ⊗ ℰ) ρ_in and S = Pauli expectation matrix,
        S_out = S_in · Mᵀ     (M[j][l] = ½ Tr[σⱼ ℰ(σₗ)])
    solved by least squares. The singlet gives S_in = diag(1, -1, -1, -1).

FIDELITY TO σ₁:
    F = ½ + (M₂₂ - M₃₃ - M₄₄)/6    (1-based indices)
    the average gate fidelity (2F_pro + 1)/3 with F_pro = ¼(1 + M₂₂ - M₃₃ - M₄₄).
    The 1/6 coefficient gives F = 1 for M_σ₁ and 1/3 for the identity.
"""

from __future__ import annotations

import logging
import warnings
from typing import Sequence, Union

import numpy as np
from scipy import linalg

from app.analysis.spin_core import (
    I2,
    PAULIS,
    SIGMA1,
    SIGMA2,
    SIGMA3,
    density_from_pauli_expectations,
    haar_bloch_vectors,
    pauli_expectation_matrix,
    qubit_fidelity_from_bloch,
)
from app.errors import (
    DimensionMismatchError,
    IncompleteDataError,
    InvalidStateError,
    NonInvertibleProbeError,
)
from app.models.analysis import (
    Basis,
    CountRecord,
    MeasurementRecord,
    ProbabilityRecord,
    TomoResult,
)
from app.models.quantum import (
    BLOCH_TOL,
    DensityMatrix1Q,
    PauliTransferMatrix,
    TwoQubitDensity,
    Unitary,
)

logger = logging.getLogger(__name__)

# Pauli index measured by each analyzer basis
BASIS_INDEX = {Basis.L: 1, Basis.C: 2, Basis.HV: 3}
_SIGN = {"+": 1.0, "-": -1.0}

# Probes with cond(S_in) at or above this do not span the qubit-2 operator space
CONDITION_LIMIT = 1e6

SIGMA1_PTM = PauliTransferMatrix(m=np.diag([1.0, 1.0, -1.0, -1.0]))

Channel = Union[Unitary, PauliTransferMatrix]


# ============================================================================
# State tomography
# ============================================================================


def _group_records(
    records: Sequence[MeasurementRecord],
) -> tuple[bool, dict[str, tuple[object, dict[str, float]]], int]:
    """Merge records per setting; returns (two_qubit, {label: (setting, freqs)}, shots)."""
    if not records:
        raise IncompleteDataError("No measurement records supplied")

    kinds = {r.setting.is_two_qubit for r in records}
    if len(kinds) > 1:
        raise DimensionMismatchError("Cannot mix single-qubit and two-qubit settings")
    two_qubit = kinds.pop()

    counts: dict[str, tuple[object, dict[str, int]]] = {}
    exact: dict[str, tuple[object, dict[str, float]]] = {}
    for record in records:
        label = record.setting.label
        if isinstance(record, CountRecord):
            setting, merged = counts.setdefault(label, (record.setting, dict.fromkeys(record.counts, 0)))
            for outcome, n in record.counts.items():
                merged[outcome] += n
        elif isinstance(record, ProbabilityRecord):
            if label in exact:
                raise ValueError(f"Duplicate exact record for setting {label}")
            exact[label] = (record.setting, record.frequencies())
        else:
            raise TypeError(f"Unsupported record type {type(record).__name__}")

    if counts and exact:
        raise ValueError("Cannot mix sampled counts with exact probabilities")

    if exact:
        return two_qubit, exact, 0

    grouped: dict[str, tuple[object, dict[str, float]]] = {}
    total = 0
    for label, (setting, merged) in counts.items():
        shots = sum(merged.values())
        if shots == 0:
            raise IncompleteDataError(f"Setting {label} has zero shots")
        total += shots
        grouped[label] = (setting, {k: v / shots for k, v in merged.items()})
    return two_qubit, grouped, total


def project_to_physical(m: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Nearest trace-1 PSD matrix to a Hermitian estimate.

    Eigenvalues are visited from the smallest: while λᵢ + a/i < 0 the
    eigenvalue is clipped to zero and added to the accumulator a; the
    remaining i eigenvalues are then shifted by a/i.

    This departs from plain clip-and-renormalize, which rescales the kept
    eigenvalues instead of shifting them: diag(.6, .5, -.05, -.05) becomes
    (.55, .45, 0, 0) here, (.5455, .4545, 0, 0) under rescaling. The shift
    gives the closest PSD matrix in Frobenius norm.

    Returns:
        (projected matrix, Σ|λ_new - λ_old|)
    """
    m = 0.5 * (m + m.conj().T)
    trace = float(np.real(np.trace(m)))
    if trace <= 0:
        raise InvalidStateError(f"Estimate has non-positive trace {trace:.3e}")
    m = m / trace

    eigenvalues, eigenvectors = linalg.eigh(m)
    if eigenvalues[0] >= 0:
        return m, 0.0

    descending = eigenvalues[::-1].copy()
    d = len(descending)
    i = d
    accumulator = 0.0
    while i > 0 and descending[i - 1] + accumulator / i < 0:
        accumulator += descending[i - 1]
        i -= 1
    kept = np.zeros(d)
    kept[:i] = descending[:i] + accumulator / i
    new_eigenvalues = kept[::-1]

    clipped_mass = float(np.sum(np.abs(new_eigenvalues - eigenvalues)))
    projected = (eigenvectors * new_eigenvalues) @ eigenvectors.conj().T
    return 0.5 * (projected + projected.conj().T), clipped_mass


def state_tomography(
    records: Sequence[MeasurementRecord],
    seed: int | None = None,
) -> TomoResult:
    """
    Linear-inversion tomography of one qubit (3 settings) or a pair (9 settings).

    Args:
        records: CountRecords (sampled) or ProbabilityRecords (exact); repeated
            settings are merged
        seed: Generator seed the counts came from, kept as metadata

    Returns:
        TomoResult with the projected state and the raw estimate

    Raises:
        IncompleteDataError: missing setting or a setting with zero shots
    """
    two_qubit, grouped, shots = _group_records(records)

    if two_qubit:
        required = [f"{b1.value}/{b2.value}" for b1 in Basis for b2 in Basis]
    else:
        required = [b.value for b in Basis]
    missing = [label for label in required if label not in grouped]
    if missing:
        raise IncompleteDataError(f"Missing measurement settings: {', '.join(missing)}")

    if two_qubit:
        raw = _two_qubit_estimate(grouped)
    else:
        raw = _single_qubit_estimate(grouped)

    projected, clipped_mass = project_to_physical(raw)
    if clipped_mass > 0.1:
        warnings.warn(
            f"Physicality projection moved {clipped_mass:.3f} of eigenvalue mass. "
            "Insufficient counts or inconsistent records."
        )
    logger.debug(f"Tomography over {len(grouped)} settings, clipped mass {clipped_mass:.2e}")

    state_cls = TwoQubitDensity if two_qubit else DensityMatrix1Q
    return TomoResult(
        state=state_cls(m=projected),
        raw_linear=raw,
        settings_used=sorted(grouped),
        shots=shots,
        seed=seed,
        clipped_mass=clipped_mass,
    )


def _single_qubit_estimate(grouped: dict) -> np.ndarray:
    r = np.zeros(4)
    r[0] = 1.0
    for setting, freqs in grouped.values():
        r[BASIS_INDEX[setting.basis2]] = sum(_SIGN[o] * f for o, f in freqs.items())
    return 0.5 * (r[0] * I2 + r[1] * SIGMA1 + r[2] * SIGMA2 + r[3] * SIGMA3)


def _two_qubit_estimate(grouped: dict) -> np.ndarray:
    s = np.zeros((4, 4))
    s[0, 0] = 1.0
    marginal1: dict[int, list[float]] = {1: [], 2: [], 3: []}
    marginal2: dict[int, list[float]] = {1: [], 2: [], 3: []}

    for setting, freqs in grouped.values():
        i = BASIS_INDEX[setting.basis1]
        j = BASIS_INDEX[setting.basis2]
        s[i, j] = sum(_SIGN[o[0]] * _SIGN[o[1]] * f for o, f in freqs.items())
        marginal1[i].append(sum(_SIGN[o[0]] * f for o, f in freqs.items()))
        marginal2[j].append(sum(_SIGN[o[1]] * f for o, f in freqs.items()))

    # Each single-qubit expectation is seen by three settings
    for k in (1, 2, 3):
        s[k, 0] = float(np.mean(marginal1[k]))
        s[0, k] = float(np.mean(marginal2[k]))
    return density_from_pauli_expectations(s)


# ============================================================================
# Pauli transfer matrices
# ============================================================================


def ptm_from_io_states(
    rho_in: TwoQubitDensity,
    rho_out: TwoQubitDensity,
    tolerance: float = BLOCH_TOL,
) -> PauliTransferMatrix:
    """
    Solve S_out = S_in · Mᵀ for the qubit-2 channel M.

    Args:
        rho_in: probe pair state before the channel
        rho_out: pair state after (I ⊗ ℰ)
        tolerance: slack on the [-1, 1] bound of the reconstructed entries

    Raises:
        NonInvertibleProbeError: if cond(S_in) ≥ 1e6 (the probe does not
            span the qubit-2 operator space)
    """
    s_in = pauli_expectation_matrix(rho_in).s
    s_out = pauli_expectation_matrix(rho_out).s

    condition = float(np.linalg.cond(s_in))
    if not np.isfinite(condition) or condition >= CONDITION_LIMIT:
        raise NonInvertibleProbeError(
            f"Probe Pauli matrix has condition number {condition:.3e}; "
            "the input state does not span the qubit-2 operator space"
        )

    m_transposed, *_ = np.linalg.lstsq(s_in, s_out, rcond=None)
    return PauliTransferMatrix(m=m_transposed.T, tolerance=tolerance)


def ptm_of_unitary(u: Unitary) -> PauliTransferMatrix:
    """m[j][l] = ½ Tr[σⱼ u σₗ u†]."""
    u_dag = u.u.conj().T
    m = np.array(
        [[0.5 * np.real(np.trace(PAULIS[j] @ u.u @ PAULIS[l] @ u_dag)) for l in range(4)] for j in range(4)]
    )
    return PauliTransferMatrix(m=m)


def ptm_of_depolarizing(p: float) -> PauliTransferMatrix:
    """diag(1, 1-p, 1-p, 1-p)."""
    if not 0.0 <= p <= 1.0:
        raise InvalidStateError(f"Depolarizing probability {p} outside [0, 1]")
    return PauliTransferMatrix(m=np.diag([1.0, 1.0 - p, 1.0 - p, 1.0 - p]))


def compose_ptm(*ptms: PauliTransferMatrix) -> PauliTransferMatrix:
    """compose_ptm(A, B) applies B first, then A."""
    m = np.eye(4)
    for ptm in ptms:
        m = m @ ptm.m
    return PauliTransferMatrix(m=m, tolerance=max(p.tolerance for p in ptms))


# ============================================================================
# Fidelities
# ============================================================================


def process_fidelity(m: PauliTransferMatrix, target: PauliTransferMatrix) -> float:
    """F_pro = Tr(Tᵀ M) / 4 for a unitary target T."""
    return float(np.trace(target.m.T @ m.m) / 4.0)


def average_gate_fidelity(m: PauliTransferMatrix, target: PauliTransferMatrix) -> float:
    """(2 F_pro + 1) / 3."""
    return (2.0 * process_fidelity(m, target) + 1.0) / 3.0


def fidelity_to_sigma1(m: PauliTransferMatrix) -> float:
    """½ + (m[1][1] - m[2][2] - m[3][3]) / 6."""
    return 0.5 + (m.m[1, 1] - m.m[2, 2] - m.m[3, 3]) / 6.0


def _as_ptm(channel: Channel) -> PauliTransferMatrix:
    if isinstance(channel, Unitary):
        return ptm_of_unitary(channel)
    return channel


def haar_average_fidelity(
    channel_e: Channel,
    channel_l: Channel,
    samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """
    Monte Carlo ∫dΨ F[ℰ(|Ψ⟩⟨Ψ|), ℒ(|Ψ⟩⟨Ψ|)] over Haar-random pure inputs.

    Both outputs are propagated as Bloch vectors (r' = T r + t) and compared
    with the closed-form qubit Uhlmann fidelity.

    Returns:
        (sample mean, standard error)
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")

    e = _as_ptm(channel_e).m
    l = _as_ptm(channel_l).m
    r = haar_bloch_vectors(samples, rng)
    out_e = r @ e[1:, 1:].T + e[1:, 0]
    out_l = r @ l[1:, 1:].T + l[1:, 0]
    fidelities = qubit_fidelity_from_bloch(out_e, out_l)

    mean = float(np.mean(fidelities))
    if samples == 1:
        return mean, 0.0
    return mean, float(np.std(fidelities, ddof=1) / np.sqrt(samples))


__all__ = [
    "BASIS_INDEX",
    "CONDITION_LIMIT",
    "SIGMA1_PTM",
    "project_to_physical",
    "state_tomography",
    "ptm_from_io_states",
    "ptm_of_unitary",
    "ptm_of_depolarizing",
    "compose_ptm",
    "process_fidelity",
    "average_gate_fidelity",
    "fidelity_to_sigma1",
    "haar_average_fidelity",
]
