"""
Quantum Value Types for the Faraday-Mirror Lab

These models represent Layer 1 of our 3-layer architecture:
    Layer 1: Pydantic Models (THIS FILE, analysis.py) - Data validation
    Layer 2: Analysis Modules (app/analysis/) - Physics and inversion
    Layer 3: Runner, Exporter and CLI - Orchestration

BASIS CONVENTION:
    σ₃ eigenstates: |H⟩, |V⟩
    σ₁ eigenstates: |L±⟩ = 2^(-1/2) (|H⟩ ± |V⟩)
    σ₂ eigenstates: |C±⟩ = 2^(-1/2) (|H⟩ ± i|V⟩)

Every matrix-valued model stores a read-only numpy array and serializes it as
a structured record {rows, cols, data}; complex entries are [re, im] pairs.
"""

from __future__ import annotations

from typing import Any, ClassVar

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from app.errors import InvalidStateError, NormalizationError

# Algebraic identities on 2×2 / 4×4 matrices
ALGEBRA_TOL = 1e-12
# Smallest eigenvalue still accepted as PSD
PSD_FLOOR = -1e-10
# Slack on the Bloch-ball radius and on bounded real matrices
BLOCH_TOL = 1e-10


# ============================================================================
# Matrix record helpers
# ============================================================================


def matrix_record(m: Any) -> dict:
    """Serialize a matrix as {rows, cols, data} (row-major)."""
    arr = np.asarray(m)
    rows, cols = arr.shape
    if np.iscomplexobj(arr):
        data: list = [[float(z.real), float(z.imag)] for z in arr.ravel()]
    else:
        data = [float(x) for x in arr.ravel()]
    return {"rows": rows, "cols": cols, "data": data}


def matrix_from_record(record: dict) -> np.ndarray:
    """Inverse of matrix_record."""
    rows, cols, data = record["rows"], record["cols"], record["data"]
    if data and isinstance(data[0], (list, tuple)):
        flat = np.array([complex(re, im) for re, im in data])
    else:
        flat = np.array(data, dtype=float)
    return flat.reshape(rows, cols)


def _frozen_array(value: Any, shape: tuple[int, int], real: bool = False) -> np.ndarray:
    if isinstance(value, dict):
        value = matrix_from_record(value)
    arr = np.array(value, dtype=complex)
    if arr.shape != shape:
        raise ValueError(f"Expected a {shape[0]}x{shape[1]} matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Matrix contains non-finite entries")
    if real:
        if np.max(np.abs(arr.imag)) > ALGEBRA_TOL:
            raise ValueError("Matrix must be real")
        arr = np.ascontiguousarray(arr.real)
    arr.setflags(write=False)
    return arr


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# ============================================================================
# Single-qubit states
# ============================================================================


class PureQubit(BaseModel):
    """
    Polarization qubit |Ψ⟩ = psi1|H⟩ + psi2|V⟩.

    Validates |psi1|² + |psi2|² = 1 within 1e-12.
    """

    model_config = ConfigDict(frozen=True)

    psi1: complex = Field(..., description="Complex amplitude of |H⟩")
    psi2: complex = Field(..., description="Complex amplitude of |V⟩")

    @field_validator("psi1", "psi2", mode="before")
    @classmethod
    def accept_pairs(cls, v: Any) -> complex:
        """Accept [re, im] pairs (the serialized form) as well as numbers."""
        if isinstance(v, (list, tuple)):
            re, im = v
            return complex(re, im)
        return complex(v)

    @model_validator(mode="after")
    def must_be_normalized(self) -> "PureQubit":
        norm2 = abs(self.psi1) ** 2 + abs(self.psi2) ** 2
        if abs(norm2 - 1.0) > ALGEBRA_TOL:
            raise NormalizationError(f"Spinor norm² is {norm2:.15f}, expected 1")
        return self

    @field_serializer("psi1", "psi2")
    def serialize_amplitude(self, z: complex) -> list[float]:
        return [z.real, z.imag]

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.psi1, self.psi2], dtype=complex)

    @classmethod
    def from_vector(cls, v: Any) -> "PureQubit":
        """Build from any non-zero 2-vector, normalizing it."""
        arr = np.asarray(v, dtype=complex).reshape(2)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise NormalizationError("Cannot normalize the zero spinor")
        arr = arr / norm
        return cls(psi1=arr[0], psi2=arr[1])


class _DensityMatrix(_ArrayModel):
    dim: ClassVar[int] = 2

    m: np.ndarray

    @field_validator("m", mode="before")
    @classmethod
    def coerce_matrix(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, (cls.dim, cls.dim))

    @field_validator("m")
    @classmethod
    def must_be_physical(cls, m: np.ndarray) -> np.ndarray:
        """Hermitian, unit trace, eigenvalues ≥ -1e-10."""
        if np.max(np.abs(m - m.conj().T)) > ALGEBRA_TOL:
            raise InvalidStateError("Density matrix is not Hermitian")
        trace = np.trace(m)
        if abs(trace - 1.0) > ALGEBRA_TOL:
            raise InvalidStateError(f"Density matrix trace is {trace.real:.15f}, expected 1")
        lowest = float(np.linalg.eigvalsh(m).min())
        if lowest < PSD_FLOOR:
            raise InvalidStateError(f"Density matrix has negative eigenvalue {lowest:.3e}")
        return m

    @field_serializer("m")
    def serialize_matrix(self, m: np.ndarray) -> dict:
        return matrix_record(m)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.m @ self.m)))


class DensityMatrix1Q(_DensityMatrix):
    """Single polarization qubit ρ (2×2 Hermitian PSD, trace 1)."""

    dim: ClassVar[int] = 2


class TwoQubitDensity(_DensityMatrix):
    """
    Photon pair on modes k₁, k₂ (4×4 Hermitian PSD, trace 1).

    Qubit 1 (mode k₁) is the slow index, qubit 2 (mode k₂) the fast one:
    basis order |HH⟩, |HV⟩, |VH⟩, |VV⟩.
    """

    dim: ClassVar[int] = 4


class BlochVector(BaseModel):
    """Components of r along σ₁, σ₂, σ₃; ‖r‖ ≤ 1, pure iff ‖r‖ = 1."""

    model_config = ConfigDict(frozen=True)

    r1: float
    r2: float
    r3: float

    @model_validator(mode="after")
    def must_lie_in_ball(self) -> "BlochVector":
        if self.norm > 1.0 + BLOCH_TOL:
            raise InvalidStateError(f"Bloch vector norm {self.norm:.12f} exceeds 1")
        return self

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.r1, self.r2, self.r3])

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.r1**2 + self.r2**2 + self.r3**2))

    def is_pure(self, tol: float = BLOCH_TOL) -> bool:
        return abs(self.norm - 1.0) <= tol

    @classmethod
    def from_array(cls, r: Any) -> "BlochVector":
        r1, r2, r3 = (float(x) for x in np.asarray(r, dtype=float).reshape(3))
        return cls(r1=r1, r2=r2, r3=r3)


# ============================================================================
# Operators
# ============================================================================


class Unitary(_ArrayModel):
    """2×2 unitary u with u†u = I within 1e-12."""

    u: np.ndarray

    @field_validator("u", mode="before")
    @classmethod
    def coerce_matrix(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, (2, 2))

    @field_validator("u")
    @classmethod
    def must_be_unitary(cls, u: np.ndarray) -> np.ndarray:
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > ALGEBRA_TOL:
            raise InvalidStateError("Matrix is not unitary")
        return u

    @field_serializer("u")
    def serialize_matrix(self, u: np.ndarray) -> dict:
        return matrix_record(u)

    def dagger(self) -> "Unitary":
        return Unitary(u=self.u.conj().T)

    def __matmul__(self, other: "Unitary") -> "Unitary":
        return Unitary(u=self.u @ other.u)

    def apply(self, psi: PureQubit) -> PureQubit:
        """Act on a spinor."""
        return PureQubit.from_vector(self.u @ psi.vector)


class AxisAngle(BaseModel):
    """Rotation axis n (unit 3-vector in spin space) and angle θ in radians."""

    model_config = ConfigDict(frozen=True)

    n: tuple[float, float, float]
    theta: float

    @field_validator("n")
    @classmethod
    def axis_must_be_unit(cls, n: tuple[float, float, float]) -> tuple[float, float, float]:
        norm = float(np.sqrt(sum(x * x for x in n)))
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise NormalizationError(f"Rotation axis has norm {norm:.15f}, expected 1")
        return n

    @property
    def axis(self) -> np.ndarray:
        return np.array(self.n, dtype=float)

    @classmethod
    def from_vector(cls, n: Any, theta: float) -> "AxisAngle":
        """Normalize an arbitrary non-zero axis."""
        arr = np.asarray(n, dtype=float).reshape(3)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise NormalizationError("Rotation axis cannot be the zero vector")
        arr = arr / norm
        return cls(n=(float(arr[0]), float(arr[1]), float(arr[2])), theta=float(theta))


# ============================================================================
# Pauli representations
# ============================================================================


class PauliExpectationMatrix(_ArrayModel):
    """s[i][j] = Tr[ρ (σᵢ ⊗ σⱼ)] for i, j = 0..3 with σ₀ = I."""

    s: np.ndarray

    @field_validator("s", mode="before")
    @classmethod
    def coerce_matrix(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, (4, 4), real=True)

    @field_validator("s")
    @classmethod
    def must_be_normalized(cls, s: np.ndarray) -> np.ndarray:
        if abs(s[0, 0] - 1.0) > BLOCH_TOL:
            raise InvalidStateError(f"s[0][0] is {s[0, 0]:.12f}, expected 1")
        if np.max(np.abs(s)) > 1.0 + BLOCH_TOL:
            raise InvalidStateError("Pauli expectations must lie in [-1, 1]")
        return s

    @field_serializer("s")
    def serialize_matrix(self, s: np.ndarray) -> dict:
        return matrix_record(s)


class PauliTransferMatrix(_ArrayModel):
    """
    Channel ℰ as a 4×4 real matrix acting on the Pauli vector (1, r).

    INDEX CONVENTION: m[j][l] = ½ Tr[σⱼ ℰ(σₗ)], row = output component.

    `tolerance` is the slack allowed on the [-1, 1] entry bound: 1e-10 for
    exact channels, wider for PTMs reconstructed from finite counts.
    """

    m: np.ndarray
    tolerance: float = Field(default=BLOCH_TOL, ge=0.0, exclude=True)

    @field_validator("m", mode="before")
    @classmethod
    def coerce_matrix(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, (4, 4), real=True)

    @model_validator(mode="after")
    def entries_must_be_bounded(self) -> "PauliTransferMatrix":
        largest = float(np.max(np.abs(self.m)))
        if largest > 1.0 + self.tolerance:
            raise InvalidStateError(
                f"PTM entry {largest:.6f} exceeds 1 beyond tolerance {self.tolerance:.1e}"
            )
        return self

    @field_serializer("m")
    def serialize_matrix(self, m: np.ndarray) -> dict:
        return matrix_record(m)

    @property
    def rotation_block(self) -> np.ndarray:
        return self.m[1:, 1:]

    def first_row_deviation(self) -> float:
        """max |m[0] - (1, 0, 0, 0)|."""
        return float(np.max(np.abs(self.m[0] - np.array([1.0, 0.0, 0.0, 0.0]))))

    def is_trace_preserving(self, tol: float = BLOCH_TOL) -> bool:
        return self.first_row_deviation() <= tol

    def is_rotation(self, tol: float = BLOCH_TOL) -> bool:
        """Lower-right block orthogonal with determinant +1 (unitary channels)."""
        block = self.rotation_block
        orthogonal = np.max(np.abs(block.T @ block - np.eye(3))) <= tol
        return bool(orthogonal and abs(np.linalg.det(block) - 1.0) <= tol)


__all__ = [
    "ALGEBRA_TOL",
    "PSD_FLOOR",
    "BLOCH_TOL",
    "matrix_record",
    "matrix_from_record",
    "PureQubit",
    "DensityMatrix1Q",
    "TwoQubitDensity",
    "BlochVector",
    "Unitary",
    "AxisAngle",
    "PauliExpectationMatrix",
    "PauliTransferMatrix",
]
