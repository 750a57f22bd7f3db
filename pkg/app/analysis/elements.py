"""
Optical Bench Elements for the Faraday-Mirror Lab

Bench elements as SU(2) unitaries, their retrace (backward-pass) rule, and
the Faraday-mirror composite.

Layer 2 of our 3-layer architecture:
    Layer 1: Pydantic Models - Data validation
    Layer 2: Analysis Modules (THIS FILE) - Physics and inversion
    Layer 3: Runner, Exporter and CLI - Orchestration

RETRACE RULE:
    Reciprocal element 𝕌 = exp[i½(σ·n)θ] is retraced as
        𝕌' = exp[-i½(σ·n')θ],  n' = (n₁, -n₂, -n₃)
    which equals σ₁ 𝕌† σ₁ because σ·n' = σ₁ (σ·n) σ₁.
    A Faraday element keeps its axis (the magnetization is an axial vector)
    while the phase is inverted by the propagation reversal: 𝕌' = 𝕌†.

FARADAY MIRROR:
    𝕌_FRM = 𝕌₂₋ 𝕌₃ 𝕌₂₊ = ½(1 - iσ₂)(iσ₃)(1 + iσ₂) = iσ₁

The mirror is a chain terminator, not a chain element: its unitary appears
exactly once per round trip (P → O → O' → P').
"""

from __future__ import annotations

import logging
from typing import Literal, Optional

import numpy as np

from app.analysis.spin_core import (
    SIGMA1,
    axis_angle_unitary,
    bloch_from_pure,
    compose,
    identity_unitary,
    rotation,
)
from app.errors import ConsistencyError
from app.models.analysis import ElementChain, OpticalElement, ReciprocityKind, Turn
from app.models.quantum import ALGEBRA_TOL, AxisAngle, BlochVector, PureQubit, Unitary

logger = logging.getLogger(__name__)

# iσ₁, the ideal round-trip action of the Faraday mirror
FRM_TARGET = Unitary(u=1j * SIGMA1)


# ============================================================================
# Turns
# ============================================================================


def mirror_reflection() -> Unitary:
    """𝕌₃ = exp(i½πσ₃) = iσ₃: (ψ₁, ψ₂) → i(ψ₁, -ψ₂)."""
    return rotation((0.0, 0.0, 1.0), np.pi)


def faraday_pass(direction: Literal["forward", "backward"] = "forward") -> Unitary:
    """
    One pass through the 45° Faraday rotator.

    forward  → 𝕌₂₊ = exp(+i(π/4)σ₂)
    backward → 𝕌₂₋ = exp(-i(π/4)σ₂)
    """
    if direction == "forward":
        return rotation((0.0, 1.0, 0.0), np.pi / 2)
    if direction == "backward":
        return rotation((0.0, 1.0, 0.0), -np.pi / 2)
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def frm_unitary() -> Unitary:
    """
    𝕌_FRM = 𝕌₂₋ · 𝕌₃ · 𝕌₂₊, checked elementwise against iσ₁.

    Raises:
        ConsistencyError: if the product deviates from iσ₁ by more than 1e-12
    """
    product = compose(faraday_pass("backward"), mirror_reflection(), faraday_pass("forward"))
    deviation = float(np.max(np.abs(product.u - FRM_TARGET.u)))
    if deviation > ALGEBRA_TOL:
        logger.error(f"FRM product deviates from iσ₁ by {deviation:.3e}")
        raise ConsistencyError(
            f"𝕌₂₋𝕌₃𝕌₂₊ differs from iσ₁ by {deviation:.3e} (basis or sign convention bug)"
        )
    return product


def turn_unitary(turn: Turn) -> Unitary:
    """iσ₃ for a bare mirror, iσ₁ for the Faraday mirror."""
    if turn is Turn.MIRROR:
        return mirror_reflection()
    return frm_unitary()


# ============================================================================
# Elements
# ============================================================================


def faraday_rotator(label: str = "FR") -> OpticalElement:
    """The 45°-per-pass rotator: forward pass is 𝕌₂₊."""
    return OpticalElement(
        kind=ReciprocityKind.FARADAY,
        aa=AxisAngle(n=(0.0, 1.0, 0.0), theta=np.pi / 2),
        label=label,
    )


def linear_retarder(
    physical_angle: float,
    retardance: float,
    label: Optional[str] = None,
) -> OpticalElement:
    """
    Reciprocal retarder with fast axis at `physical_angle` (radians).

    The 2α doubling puts the spin-space axis in the σ₃–σ₁ plane:
        n = (sin 2α, 0, cos 2α),  θ = retardance
    α = 0 rotates about σ₃, α = π/4 about σ₁.
    """
    two_alpha = 2.0 * physical_angle
    return OpticalElement(
        kind=ReciprocityKind.RECIPROCAL,
        aa=AxisAngle.from_vector((np.sin(two_alpha), 0.0, np.cos(two_alpha)), retardance),
        label=label or f"retarder({physical_angle:.4g},{retardance:.4g})",
    )


def half_wave_plate(physical_angle: float) -> OpticalElement:
    return linear_retarder(physical_angle, np.pi, label=f"HWP@{np.degrees(physical_angle):g}")


def quarter_wave_plate(physical_angle: float) -> OpticalElement:
    return linear_retarder(physical_angle, np.pi / 2, label=f"QWP@{np.degrees(physical_angle):g}")


def element_unitary(e: OpticalElement) -> Unitary:
    """Forward-pass unitary of an element."""
    return axis_angle_unitary(e.aa)


def retrace_unitary(u: Unitary, kind: ReciprocityKind) -> Unitary:
    """Backward-pass unitary given the forward one: σ₁U†σ₁ or U†."""
    if kind is ReciprocityKind.FARADAY:
        return u.dagger()
    return Unitary(u=SIGMA1 @ u.u.conj().T @ SIGMA1)


def retrace(e: OpticalElement) -> Unitary:
    """Unitary seen by light travelling the element backwards."""
    return retrace_unitary(element_unitary(e), e.kind)


# ============================================================================
# Chains
# ============================================================================


def chain_forward_unitary(chain: ElementChain) -> Unitary:
    """U(e_k) ⋯ U(e₁): the A→B pass."""
    result = identity_unitary()
    for e in chain.elements:
        result = element_unitary(e) @ result
    return result


def round_trip_unitary(chain: ElementChain, turn: Turn) -> Unitary:
    """
    retrace(e₁) ⋯ retrace(e_k) · U_turn · U(e_k) ⋯ U(e₁).

    Raises:
        ValueError: if the chain is empty
    """
    if len(chain) == 0:
        raise ValueError("Round trips need a non-empty element chain")

    result = chain_forward_unitary(chain)
    result = turn_unitary(turn) @ result
    for e in reversed(chain.elements):
        result = retrace(e) @ result
    return result


def frm_trajectory(psi: PureQubit) -> list[BlochVector]:
    """
    Poincaré-sphere path of a qubit through the Faraday mirror.

    Returns the Bloch points [P, O, O', P']: input, after the first FR pass,
    after the mirror, after the return FR pass.
    """
    points = [psi]
    for stage in (faraday_pass("forward"), mirror_reflection(), faraday_pass("backward")):
        points.append(stage.apply(points[-1]))
    return [bloch_from_pure(p) for p in points]


__all__ = [
    "FRM_TARGET",
    "mirror_reflection",
    "faraday_pass",
    "frm_unitary",
    "turn_unitary",
    "faraday_rotator",
    "linear_retarder",
    "half_wave_plate",
    "quarter_wave_plate",
    "element_unitary",
    "retrace_unitary",
    "retrace",
    "chain_forward_unitary",
    "round_trip_unitary",
    "frm_trajectory",
]
