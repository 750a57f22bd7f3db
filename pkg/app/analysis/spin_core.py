"""
Spin Core for the Faraday-Mirror Lab

Exact small-dimension complex linear algebra: qubit states, SU(2) unitaries,
Bloch / Pauli representations and fidelities.

Layer 2 of our 3-layer architecture:
    Layer 1: Pydantic Models - Data validation
    Layer 2: Analysis Modules (THIS FILE) - Physics and inversion
    Layer 3: Runner, Exporter and CLI - Orchestration

CONVENTIONS:
- σ₃ eigenstates |H⟩, |V⟩; σ₁ eigenstates |L±⟩; σ₂ eigenstates |C±⟩.
- Global phases are unobservable: unitaries are compared with
  equal_up_to_global_phase, physical assertions are made on density matrices.
- exp[i½(σ·n)θ] is always evaluated by the closed form
  cos(θ/2) I + i sin(θ/2) (n·σ), never by a series.

Every function is pure; values are immutable pydantic models.
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from app.errors import DimensionMismatchError, InvalidStateError, NormalizationError
from app.models.quantum import (
    ALGEBRA_TOL,
    BLOCH_TOL,
    AxisAngle,
    BlochVector,
    DensityMatrix1Q,
    PauliExpectationMatrix,
    PureQubit,
    TwoQubitDensity,
    Unitary,
)

AnyDensity = Union[DensityMatrix1Q, TwoQubitDensity]


def _read_only(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


# Pauli matrices, σ₀ = I
I2 = _read_only(np.eye(2, dtype=complex))
SIGMA1 = _read_only(np.array([[0, 1], [1, 0]], dtype=complex))
SIGMA2 = _read_only(np.array([[0, -1j], [1j, 0]], dtype=complex))
SIGMA3 = _read_only(np.array([[1, 0], [0, -1]], dtype=complex))
PAULIS = (I2, SIGMA1, SIGMA2, SIGMA3)

# σᵢ ⊗ σⱼ, indexed [i][j]
PAULI_PAIRS = tuple(tuple(_read_only(np.kron(a, b)) for b in PAULIS) for a in PAULIS)

_R = 1.0 / np.sqrt(2.0)

# The six probe states of the reflection experiments
KET_H = PureQubit(psi1=1.0, psi2=0.0)
KET_V = PureQubit(psi1=0.0, psi2=1.0)
KET_L_PLUS = PureQubit(psi1=_R, psi2=_R)
KET_L_MINUS = PureQubit(psi1=_R, psi2=-_R)
KET_C_PLUS = PureQubit(psi1=_R, psi2=1j * _R)
KET_C_MINUS = PureQubit(psi1=_R, psi2=-1j * _R)

PROBE_STATES: dict[str, PureQubit] = {
    "H": KET_H,
    "V": KET_V,
    "L+": KET_L_PLUS,
    "L-": KET_L_MINUS,
    "C+": KET_C_PLUS,
    "C-": KET_C_MINUS,
}


# ============================================================================
# Unitaries
# ============================================================================


def axis_angle_unitary(aa: AxisAngle) -> Unitary:
    """
    𝕌 = exp[i½(σ·n)θ] = cos(θ/2) I + i sin(θ/2) (n·σ).

    Raises:
        NormalizationError: if the axis is not unit length
    """
    n = aa.axis
    norm = float(np.linalg.norm(n))
    if abs(norm - 1.0) > ALGEBRA_TOL:
        raise NormalizationError(f"Rotation axis has norm {norm:.15f}, expected 1")

    n_sigma = n[0] * SIGMA1 + n[1] * SIGMA2 + n[2] * SIGMA3
    half = aa.theta / 2.0
    return Unitary(u=np.cos(half) * I2 + 1j * np.sin(half) * n_sigma)


def rotation(n: tuple[float, float, float], theta: float) -> Unitary:
    """Shorthand for axis_angle_unitary(AxisAngle(n=n, theta=theta))."""
    return axis_angle_unitary(AxisAngle(n=n, theta=theta))


def identity_unitary() -> Unitary:
    return Unitary(u=I2)


def compose(*unitaries: Unitary) -> Unitary:
    """Matrix product in the order given: compose(A, B, C) = A·B·C."""
    result = np.eye(2, dtype=complex)
    for u in unitaries:
        result = result @ u.u
    return Unitary(u=result)


def equal_up_to_global_phase(u: Unitary, v: Unitary, tol: float = 1e-10) -> bool:
    """
    True iff min over φ of ‖u - e^{iφ} v‖ ≤ tol (Frobenius norm).

    The minimizing phase is arg Tr(v†u); at that phase the distance is
    sqrt(4 - 2|Tr(u†v)|), so the test is equivalent to |Tr(u†v)| = 2.
    """
    return phase_distance(u, v) <= tol


def phase_distance(u: Unitary, v: Unitary) -> float:
    """min over φ of ‖u - e^{iφ} v‖."""
    overlap = np.trace(v.u.conj().T @ u.u)
    phase = np.exp(1j * np.angle(overlap)) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(u.u - phase * v.u))


# ============================================================================
# States
# ============================================================================


def pure_density(psi: PureQubit) -> DensityMatrix1Q:
    """|Ψ⟩⟨Ψ|."""
    v = psi.vector
    return DensityMatrix1Q(m=np.outer(v, v.conj()))


def orthogonal_state(psi: PureQubit) -> PureQubit:
    """|Ψ⊥⟩ = (-ψ₂*, ψ₁*), the antipode on the Poincaré sphere."""
    return PureQubit(psi1=-np.conj(psi.psi2), psi2=np.conj(psi.psi1))


def density_from_bloch(r: BlochVector) -> DensityMatrix1Q:
    """
    ρ = ½(I + r₁σ₁ + r₂σ₂ + r₃σ₃).

    Raises:
        InvalidStateError: if ‖r‖ > 1 + 1e-10
    """
    if r.norm > 1.0 + BLOCH_TOL:
        raise InvalidStateError(f"Bloch vector norm {r.norm:.12f} exceeds 1")
    m = 0.5 * (I2 + r.r1 * SIGMA1 + r.r2 * SIGMA2 + r.r3 * SIGMA3)
    return DensityMatrix1Q(m=m)


def bloch_from_density(rho: DensityMatrix1Q) -> BlochVector:
    """rᵢ = Tr[ρσᵢ]."""
    r = [float(np.real(np.trace(rho.m @ s))) for s in (SIGMA1, SIGMA2, SIGMA3)]
    # Rounding can push a pure state a hair outside the ball
    norm = np.linalg.norm(r)
    if norm > 1.0:
        r = list(np.asarray(r) / norm)
    return BlochVector.from_array(r)


def bloch_from_pure(psi: PureQubit) -> BlochVector:
    return bloch_from_density(pure_density(psi))


def apply_unitary(rho: DensityMatrix1Q, u: Unitary) -> DensityMatrix1Q:
    """u ρ u†; trace and spectrum are preserved."""
    return DensityMatrix1Q(m=u.u @ rho.m @ u.u.conj().T)


def apply_local_unitary(rho: TwoQubitDensity, u: Unitary, qubit: int = 2) -> TwoQubitDensity:
    """(I ⊗ U) ρ (I ⊗ U)† for qubit = 2, (U ⊗ I) ρ (U ⊗ I)† for qubit = 1."""
    if qubit == 2:
        full = np.kron(I2, u.u)
    elif qubit == 1:
        full = np.kron(u.u, I2)
    else:
        raise ValueError(f"qubit must be 1 or 2, got {qubit}")
    return TwoQubitDensity(m=full @ rho.m @ full.conj().T)


def partial_trace(rho: TwoQubitDensity, keep: int = 2) -> DensityMatrix1Q:
    """Reduced state of qubit `keep`."""
    t = rho.m.reshape(2, 2, 2, 2)
    if keep == 2:
        reduced = np.einsum("abad->bd", t)
    elif keep == 1:
        reduced = np.einsum("abcb->ac", t)
    else:
        raise ValueError(f"keep must be 1 or 2, got {keep}")
    return DensityMatrix1Q(m=reduced)


# ============================================================================
# Fidelity
# ============================================================================


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(rho: AnyDensity, sigma: AnyDensity) -> float:
    """
    F(ρ, σ) = (Tr √(√ρ σ √ρ))², clipped to [0, 1].

    Equals |⟨ψ|φ⟩|² for pure states; symmetric in its arguments.

    Raises:
        DimensionMismatchError: if the states have different dimension
    """
    if rho.m.shape != sigma.m.shape:
        raise DimensionMismatchError(
            f"Cannot compare a {rho.m.shape[0]}-dim state with a {sigma.m.shape[0]}-dim state"
        )
    root = _psd_sqrt(rho.m)
    inner = root @ sigma.m @ root
    inner = 0.5 * (inner + inner.conj().T)
    eigenvalues = np.clip(linalg.eigvalsh(inner), 0.0, None)
    fidelity = float(np.sum(np.sqrt(eigenvalues)) ** 2)
    return min(max(fidelity, 0.0), 1.0)


def qubit_fidelity_from_bloch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Vectorized single-qubit Uhlmann fidelity from Bloch vectors (last axis = 3).

    FORMULA: F = ½ (1 + a·b + sqrt((1 - |a|²)(1 - |b|²)))
    """
    dot = np.sum(a * b, axis=-1)
    mixed_a = np.clip(1.0 - np.sum(a * a, axis=-1), 0.0, None)
    mixed_b = np.clip(1.0 - np.sum(b * b, axis=-1), 0.0, None)
    return np.clip(0.5 * (1.0 + dot + np.sqrt(mixed_a * mixed_b)), 0.0, 1.0)


# ============================================================================
# Pauli expectations
# ============================================================================


def pauli_expectation_matrix(rho: TwoQubitDensity) -> PauliExpectationMatrix:
    """s[i][j] = Tr[ρ (σᵢ ⊗ σⱼ)]."""
    s = np.array(
        [[np.real(np.trace(rho.m @ PAULI_PAIRS[i][j])) for j in range(4)] for i in range(4)]
    )
    return PauliExpectationMatrix(s=s)


def density_from_pauli_expectations(s: np.ndarray) -> np.ndarray:
    """
    ρ = ¼ Σᵢⱼ s[i][j] σᵢ ⊗ σⱼ.

    Returns a bare array: estimates built from noisy data need not be
    physical until they are projected.
    """
    s = np.asarray(s, dtype=float)
    m = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            m += s[i, j] * PAULI_PAIRS[i][j]
    return m / 4.0


# ============================================================================
# Random sampling (caller owns the generator)
# ============================================================================


def haar_random_qubit(rng: np.random.Generator) -> PureQubit:
    """Haar-uniform pure state from a normalized complex Gaussian spinor."""
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PureQubit.from_vector(v)


def haar_random_unitary(rng: np.random.Generator) -> Unitary:
    """Haar-uniform element of U(2)."""
    return Unitary(u=unitary_group.rvs(2, random_state=rng))


def random_axis(rng: np.random.Generator) -> tuple[float, float, float]:
    """Uniform direction on the unit sphere."""
    v = rng.normal(size=3)
    v = v / np.linalg.norm(v)
    return (float(v[0]), float(v[1]), float(v[2]))


def haar_bloch_vectors(samples: int, rng: np.random.Generator) -> np.ndarray:
    """
    Bloch vectors of `samples` Haar-random pure states, shape (samples, 3).

    r₁ = 2 Re(ψ₁*ψ₂), r₂ = 2 Im(ψ₁*ψ₂), r₃ = |ψ₁|² - |ψ₂|²
    """
    psi = rng.normal(size=(samples, 2)) + 1j * rng.normal(size=(samples, 2))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    cross = np.conj(psi[:, 0]) * psi[:, 1]
    r3 = np.abs(psi[:, 0]) ** 2 - np.abs(psi[:, 1]) ** 2
    return np.stack([2.0 * cross.real, 2.0 * cross.imag, r3], axis=1)


__all__ = [
    "I2",
    "SIGMA1",
    "SIGMA2",
    "SIGMA3",
    "PAULIS",
    "PAULI_PAIRS",
    "PROBE_STATES",
    "KET_H",
    "KET_V",
    "KET_L_PLUS",
    "KET_L_MINUS",
    "KET_C_PLUS",
    "KET_C_MINUS",
    "axis_angle_unitary",
    "rotation",
    "identity_unitary",
    "compose",
    "equal_up_to_global_phase",
    "phase_distance",
    "pure_density",
    "orthogonal_state",
    "density_from_bloch",
    "bloch_from_density",
    "bloch_from_pure",
    "apply_unitary",
    "apply_local_unitary",
    "partial_trace",
    "uhlmann_fidelity",
    "qubit_fidelity_from_bloch",
    "pauli_expectation_matrix",
    "density_from_pauli_expectations",
    "haar_random_qubit",
    "haar_random_unitary",
    "random_axis",
    "haar_bloch_vectors",
]
