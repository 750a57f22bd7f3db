"""
Unit Tests for Optical Bench Elements

Tests the turns (mirror, Faraday passes, Faraday mirror), the retrace rule
for reciprocal and Faraday elements, and round trips through element chains.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from app.analysis.elements import (
    FRM_TARGET,
    chain_forward_unitary,
    element_unitary,
    faraday_pass,
    faraday_rotator,
    frm_trajectory,
    frm_unitary,
    half_wave_plate,
    linear_retarder,
    mirror_reflection,
    quarter_wave_plate,
    retrace,
    retrace_unitary,
    round_trip_unitary,
    turn_unitary,
)
from app.analysis.spin_core import (
    I2,
    KET_C_MINUS,
    KET_C_PLUS,
    KET_H,
    KET_L_MINUS,
    KET_L_PLUS,
    KET_V,
    SIGMA1,
    SIGMA3,
    apply_unitary,
    bloch_from_pure,
    equal_up_to_global_phase,
    haar_random_qubit,
    pure_density,
    random_axis,
    rotation,
    uhlmann_fidelity,
)
from app.models.analysis import ElementChain, OpticalElement, ReciprocityKind, Turn
from app.models.quantum import AxisAngle, PureQubit, Unitary

R = 1.0 / np.sqrt(2.0)


# ============================================================================
# Fixtures
# ============================================================================


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def reciprocal(n, theta, label="U"):
    return OpticalElement(kind=ReciprocityKind.RECIPROCAL, aa=AxisAngle.from_vector(n, theta), label=label)


def same_ray(a: PureQubit, b: PureQubit) -> bool:
    return abs(abs(np.vdot(a.vector, b.vector)) - 1.0) < 1e-12


# ============================================================================
# Tests - Model Validation
# ============================================================================


def test_faraday_element_must_rotate_about_sigma2():
    faraday_rotator()
    with pytest.raises(ValidationError):
        OpticalElement(kind=ReciprocityKind.FARADAY, aa=AxisAngle(n=(1, 0, 0), theta=np.pi / 2))


def test_element_label_length_is_bounded():
    with pytest.raises(ValidationError):
        OpticalElement(kind=ReciprocityKind.RECIPROCAL, aa=AxisAngle(n=(0, 0, 1), theta=0.0), label="x" * 41)


def test_chain_serializes_to_records():
    chain = ElementChain(elements=[linear_retarder(0.0, np.pi / 2, label="QWP")])
    assert chain.to_records() == [
        {"kind": "reciprocal", "axis": [0.0, 0.0, 1.0], "theta": np.pi / 2, "label": "QWP"}
    ]


# ============================================================================
# Tests - Turns
# ============================================================================


def test_mirror_is_i_sigma3():
    u = mirror_reflection()
    assert np.max(np.abs(u.u - 1j * SIGMA3)) < 1e-12
    assert same_ray(u.apply(KET_H), KET_H)
    assert same_ray(u.apply(KET_L_PLUS), KET_L_MINUS)
    assert same_ray(u.apply(KET_C_PLUS), KET_C_MINUS)


def test_faraday_passes():
    forward = faraday_pass("forward")
    backward = faraday_pass("backward")
    assert np.allclose(forward.u, R * np.array([[1, 1], [-1, 1]]), atol=1e-12)
    assert np.allclose(backward.u, R * np.array([[1, -1], [1, 1]]), atol=1e-12)
    assert np.max(np.abs((forward @ backward).u - I2)) < 1e-12

    with pytest.raises(ValueError):
        faraday_pass("sideways")


def test_frm_unitary_is_i_sigma1():
    """U2- · U3 · U2+ = iσ₁ elementwise within 1e-12."""
    u = frm_unitary()
    assert np.max(np.abs(u.u - np.array([[0, 1j], [1j, 0]]))) < 1e-12
    assert same_ray(u.apply(KET_H), KET_V)
    assert same_ray(u.apply(KET_L_PLUS), KET_L_PLUS)


def test_turn_unitary_dispatch():
    assert np.allclose(turn_unitary(Turn.MIRROR).u, 1j * SIGMA3)
    assert np.allclose(turn_unitary(Turn.FRM).u, 1j * SIGMA1)


def test_double_mirror_is_identity_channel(rng):
    u3 = mirror_reflection()
    for _ in range(10):
        rho = pure_density(haar_random_qubit(rng))
        twice = apply_unitary(apply_unitary(rho, u3), u3)
        assert np.max(np.abs(twice.m - rho.m)) < 1e-12
    assert np.max(np.abs((u3 @ u3).u + I2)) < 1e-12


def test_frm_non_universality(rng):
    """σ₁ eigenstates are fixed, the σ₂–σ₃ great circle goes to its antipodes."""
    u = frm_unitary()
    for ket in (KET_L_PLUS, KET_L_MINUS):
        assert same_ray(u.apply(ket), ket)
    for ket in (KET_H, KET_V, KET_C_PLUS, KET_C_MINUS):
        out = pure_density(u.apply(ket))
        assert uhlmann_fidelity(out, pure_density(ket)) == pytest.approx(0.0, abs=1e-12)

    # The angle from the σ₁ axis is preserved: r₁ is unchanged
    for _ in range(20):
        psi = haar_random_qubit(rng)
        before, _, _, after = frm_trajectory(psi)
        assert after.r1 == pytest.approx(before.r1, abs=1e-12)
        assert after.r2 == pytest.approx(-before.r2, abs=1e-12)
        assert after.r3 == pytest.approx(-before.r3, abs=1e-12)


def test_frm_trajectory_points():
    """P = H, O = after U2+, O' = after the mirror, P' = V."""
    points = frm_trajectory(KET_H)
    assert len(points) == 4
    assert np.allclose(points[0].vector, (0, 0, 1), atol=1e-12)
    assert np.allclose(points[1].vector, (-1, 0, 0), atol=1e-12)
    assert np.allclose(points[2].vector, (1, 0, 0), atol=1e-12)
    assert np.allclose(points[3].vector, (0, 0, -1), atol=1e-12)


# ============================================================================
# Tests - Elements and retrace
# ============================================================================


def test_linear_retarder_examples():
    hwp0 = element_unitary(linear_retarder(0.0, np.pi))
    assert equal_up_to_global_phase(hwp0, Unitary(u=1j * SIGMA3))

    hwp45 = element_unitary(linear_retarder(np.pi / 4, np.pi))
    assert equal_up_to_global_phase(hwp45, Unitary(u=1j * SIGMA1))
    assert same_ray(hwp45.apply(KET_H), KET_V)

    for alpha in (0.0, 0.3, 1.1):
        assert np.max(np.abs(element_unitary(linear_retarder(alpha, 0.0)).u - I2)) < 1e-12


def test_linear_retarder_auto_label_fits_for_any_angle():
    for angle, retardance in [(0.0, 1e20), (-123456.789, 3.0), (1e300, -1e-300)]:
        label = linear_retarder(angle, retardance).label
        assert label.startswith("retarder(")
        assert len(label) <= 40
    assert linear_retarder(0.25, 1.5).label == "retarder(0.25,1.5)"


def test_wave_plates():
    assert half_wave_plate(0.0).aa.theta == pytest.approx(np.pi)
    qwp = element_unitary(quarter_wave_plate(np.pi / 4))
    # λ/4 at 45° takes H to a circular state
    assert abs(bloch_from_pure(qwp.apply(KET_H)).r2) == pytest.approx(1.0, abs=1e-12)


def test_retrace_faraday_is_backward_pass():
    assert np.max(np.abs(retrace(faraday_rotator()).u - faraday_pass("backward").u)) < 1e-12


def test_retrace_reciprocal_examples():
    assert np.max(np.abs(retrace(reciprocal((0, 0, 1), 0.0)).u - I2)) < 1e-12

    theta = 0.77
    e = reciprocal((0, 1, 0), theta)
    assert np.max(np.abs(retrace(e).u - element_unitary(e).u)) < 1e-12


def test_retrace_matches_mirrored_axis_rule(rng):
    """σ₁U†σ₁ = exp[-i½(σ·n')θ] with n' = (n1, -n2, -n3)."""
    for _ in range(50):
        n = random_axis(rng)
        theta = rng.uniform(0, 2 * np.pi)
        mirrored = rotation((n[0], -n[1], -n[2]), -theta)
        assert np.max(np.abs(retrace(reciprocal(n, theta)).u - mirrored.u)) < 1e-12


def test_retrace_is_an_involution(rng):
    for kind in ReciprocityKind:
        u = rotation((0, 1, 0), 0.4) if kind is ReciprocityKind.FARADAY else rotation(random_axis(rng), 1.3)
        twice = retrace_unitary(retrace_unitary(u, kind), kind)
        assert np.max(np.abs(twice.u - u.u)) < 1e-12


# ============================================================================
# Tests - Round trips
# ============================================================================


def test_chain_forward_unitary_order():
    """First element acts first: U(e2)·U(e1)."""
    e1, e2 = linear_retarder(0.0, 0.5), linear_retarder(np.pi / 4, 1.2)
    expected = element_unitary(e2) @ element_unitary(e1)
    got = chain_forward_unitary(ElementChain(elements=[e1, e2]))
    assert np.max(np.abs(got.u - expected.u)) < 1e-12


def test_round_trip_identity_chain_frm():
    chain = ElementChain(elements=[linear_retarder(0.0, 0.0)])
    assert np.max(np.abs(round_trip_unitary(chain, Turn.FRM).u - FRM_TARGET.u)) < 1e-12


def test_round_trip_any_reciprocal_element_frm(rng):
    """The Faraday mirror cancels any reciprocal element."""
    for _ in range(1000):
        e = reciprocal(random_axis(rng), rng.uniform(0, 2 * np.pi))
        u = round_trip_unitary(ElementChain(elements=[e]), Turn.FRM)
        assert equal_up_to_global_phase(u, FRM_TARGET, tol=1e-10)


def test_round_trip_mirror_is_not_compensated():
    """A σ₃ retarder of π/2 in front of a bare mirror gives -I, not iσ₃."""
    chain = ElementChain(elements=[reciprocal((0, 0, 1), np.pi / 2)])
    u = round_trip_unitary(chain, Turn.MIRROR)
    assert not equal_up_to_global_phase(u, mirror_reflection())
    assert equal_up_to_global_phase(u, Unitary(u=-I2))

    chain = ElementChain(elements=[reciprocal((1, 0, 0), np.pi / 2)])
    assert not equal_up_to_global_phase(round_trip_unitary(chain, Turn.MIRROR), mirror_reflection())


def test_round_trip_requires_elements():
    with pytest.raises(ValueError):
        round_trip_unitary(ElementChain(elements=[]), Turn.FRM)
