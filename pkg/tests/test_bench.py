"""
Unit Tests for the Simulated Bench

Tests the singlet source, heralded preparation, the detector model, the
depolarizing knob and the six-state reflection experiments.

All Monte Carlo tests use fixed seeds.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from app.analysis.bench import (
    MAPPING_TABLES,
    SINGLE_QUBIT_SETTINGS,
    TWO_QUBIT_SETTINGS,
    ReflectionExperiment,
    acquire_records,
    born_probabilities,
    depolarize,
    depolarize_qubit2,
    herald_prepare,
    simulate_counts,
    singlet_state,
    six_state_experiment,
)
from app.analysis.spin_core import (
    I2,
    KET_C_MINUS,
    KET_C_PLUS,
    KET_H,
    KET_L_MINUS,
    KET_L_PLUS,
    KET_V,
    density_from_bloch,
    haar_random_qubit,
    pauli_expectation_matrix,
    pure_density,
    uhlmann_fidelity,
)
from app.errors import DimensionMismatchError, InvalidStateError
from app.models.analysis import (
    Basis,
    CountRecord,
    MeasurementSetting,
    NoiseModel,
    ProbabilityRecord,
    Turn,
)
from app.models.quantum import BlochVector, DensityMatrix1Q

HV = MeasurementSetting(basis2=Basis.HV)


# ============================================================================
# Fixtures
# ============================================================================


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def exact():
    """Shot-free, noiseless."""
    return NoiseModel(shots_per_setting=0)


@pytest.fixture
def ket_h_density():
    return pure_density(KET_H)


# ============================================================================
# Tests - Model Validation
# ============================================================================


def test_noise_model_validation():
    assert NoiseModel().shots_per_setting == 10_000
    assert NoiseModel(shots_per_setting=0).shot_free

    with pytest.raises(ValidationError):
        NoiseModel(depolarizing_p=1.5)
    with pytest.raises(ValidationError):
        NoiseModel(shots_per_setting=-1)


def test_count_record_validation():
    CountRecord(setting=HV, counts={"+": 3, "-": 7})

    with pytest.raises(ValidationError):
        CountRecord(setting=HV, counts={"+": 3, "-": -1})
    with pytest.raises(ValidationError):
        CountRecord(setting=HV, counts={"++": 3, "--": 7})


def test_probability_record_must_sum_to_one():
    with pytest.raises(ValidationError):
        ProbabilityRecord(setting=HV, probabilities={"+": 0.5, "-": 0.4})


def test_setting_labels():
    assert HV.label == "HV"
    assert MeasurementSetting(basis1=Basis.L, basis2=Basis.C).label == "L/C"
    assert len(SINGLE_QUBIT_SETTINGS) == 3
    assert len(TWO_QUBIT_SETTINGS) == 9
    assert sum(len(s.outcomes) for s in TWO_QUBIT_SETTINGS) == 36


# ============================================================================
# Tests - Source and heralding
# ============================================================================


def test_singlet_state():
    rho = singlet_state()
    assert rho.purity == pytest.approx(1.0, abs=1e-12)
    s = pauli_expectation_matrix(rho).s
    assert s[3, 3] == pytest.approx(-1.0, abs=1e-12)
    assert s[1, 1] == pytest.approx(-1.0, abs=1e-12)
    assert np.allclose(s, np.diag([1.0, -1.0, -1.0, -1.0]), atol=1e-12)


@pytest.mark.parametrize(
    "chi, expected",
    [(KET_H, KET_V), (KET_L_PLUS, KET_L_MINUS), (KET_C_PLUS, KET_C_MINUS)],
)
def test_herald_prepare_examples(chi, expected):
    state, probability = herald_prepare(chi)
    assert probability == pytest.approx(0.5, abs=1e-12)
    assert abs(np.vdot(state.vector, expected.vector)) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_herald_output_is_orthogonal_to_chi(rng):
    for _ in range(100):
        chi = haar_random_qubit(rng)
        state, probability = herald_prepare(chi)
        assert abs(np.vdot(chi.vector, state.vector)) ** 2 < 1e-20
        assert probability == pytest.approx(0.5, abs=1e-12)


# ============================================================================
# Tests - Detector
# ============================================================================


def test_simulate_counts_zero_shots(ket_h_density, rng):
    records = simulate_counts(ket_h_density, [HV], NoiseModel(shots_per_setting=0), rng)
    assert records[0].counts == {"+": 0, "-": 0}


def test_simulate_counts_certain_outcome(ket_h_density, rng):
    records = simulate_counts(ket_h_density, [HV], NoiseModel(shots_per_setting=1000), rng)
    assert records[0].counts == {"+": 1000, "-": 0}


def test_simulate_counts_binomial_spread(rng):
    mixed = DensityMatrix1Q(m=I2 / 2)
    records = simulate_counts(mixed, [HV], NoiseModel(shots_per_setting=10_000), rng)
    assert abs(records[0].counts["+"] - 5000) <= 4 * np.sqrt(2500)
    assert records[0].shots == 10_000


def test_simulate_counts_is_deterministic():
    rho = density_from_bloch(BlochVector(r1=0.2, r2=-0.5, r3=0.1))
    noise = NoiseModel(shots_per_setting=500)
    a = simulate_counts(rho, SINGLE_QUBIT_SETTINGS, noise, np.random.default_rng(11))
    b = simulate_counts(rho, SINGLE_QUBIT_SETTINGS, noise, np.random.default_rng(11))
    assert [r.counts for r in a] == [r.counts for r in b]


def test_simulate_counts_converges_to_born(rng):
    """At 10⁶ shots every frequency is within 5e-3 of its Born probability."""
    rho = singlet_state()
    noise = NoiseModel(shots_per_setting=1_000_000)
    expected = born_probabilities(rho, TWO_QUBIT_SETTINGS)
    sampled = simulate_counts(rho, TWO_QUBIT_SETTINGS, noise, rng)
    for p, c in zip(expected, sampled):
        freqs = c.frequencies()
        assert max(abs(freqs[o] - p.probabilities[o]) for o in p.setting.outcomes) < 5e-3


def test_simulate_counts_shots_override(ket_h_density, rng):
    records = simulate_counts(ket_h_density, [HV], NoiseModel(shots_per_setting=10), rng, shots=250)
    assert records[0].shots == 250


def test_simulate_counts_rejects_bad_input(ket_h_density, rng):
    with pytest.raises(ValueError):
        simulate_counts(ket_h_density, [], NoiseModel(), rng)
    with pytest.raises(DimensionMismatchError):
        simulate_counts(ket_h_density, TWO_QUBIT_SETTINGS[:1], NoiseModel(), rng)


def test_born_probabilities_singlet_anticorrelation():
    records = born_probabilities(singlet_state(), TWO_QUBIT_SETTINGS)
    for record in records:
        if record.setting.basis1 is record.setting.basis2:
            assert record.probabilities["+-"] == pytest.approx(0.5, abs=1e-12)
            assert record.probabilities["++"] == pytest.approx(0.0, abs=1e-12)


def test_acquire_records_switches_on_shots(ket_h_density, rng):
    exact = acquire_records(ket_h_density, SINGLE_QUBIT_SETTINGS, NoiseModel(shots_per_setting=0), rng)
    assert all(isinstance(r, ProbabilityRecord) for r in exact)
    sampled = acquire_records(ket_h_density, SINGLE_QUBIT_SETTINGS, NoiseModel(shots_per_setting=10), rng)
    assert all(isinstance(r, CountRecord) for r in sampled)


# ============================================================================
# Tests - Noise
# ============================================================================


def test_depolarize_examples(ket_h_density):
    assert np.allclose(depolarize(ket_h_density, 0.0).m, ket_h_density.m)
    assert np.allclose(depolarize(ket_h_density, 1.0).m, I2 / 2)
    assert uhlmann_fidelity(depolarize(ket_h_density, 0.1), ket_h_density) == pytest.approx(0.95, abs=1e-12)

    with pytest.raises(InvalidStateError):
        depolarize(ket_h_density, 1.2)
    with pytest.raises(InvalidStateError):
        depolarize(ket_h_density, -0.1)


@given(
    p=st.floats(0.0, 1.0),
    r=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
)
@settings(max_examples=200, deadline=None)
def test_depolarize_preserves_trace_and_positivity(p, r):
    r = np.asarray(r) / max(1.0, float(np.linalg.norm(r)))
    out = depolarize(density_from_bloch(BlochVector.from_array(r)), p)
    assert np.real(np.trace(out.m)) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(out.m).min() >= -1e-12


def test_depolarize_qubit2_contracts_correlations():
    s = pauli_expectation_matrix(depolarize_qubit2(singlet_state(), 0.2)).s
    assert np.allclose(s, np.diag([1.0, -0.8, -0.8, -0.8]), atol=1e-12)


# ============================================================================
# Tests - Six-state reflection experiment
# ============================================================================


@pytest.mark.parametrize("turn", [Turn.FRM, Turn.MIRROR])
def test_six_state_noiseless_reproduces_tables(turn, exact):
    output = six_state_experiment(turn, exact, np.random.default_rng(7))
    assert output.mapping == MAPPING_TABLES[turn]
    for row in output.rows:
        assert row.fidelity == pytest.approx(1.0, abs=1e-10)
        assert row.right_fraction == pytest.approx(1.0, abs=1e-10)
        assert row.herald_probability == pytest.approx(0.5, abs=1e-12)


def test_mapping_tables_match_expectations():
    assert MAPPING_TABLES[Turn.FRM] == {"H": "V", "V": "H", "L+": "L+", "L-": "L-", "C+": "C-", "C-": "C+"}
    assert MAPPING_TABLES[Turn.MIRROR] == {"H": "H", "V": "V", "L+": "L-", "L-": "L+", "C+": "C-", "C-": "C+"}


def test_six_state_depolarized_fidelities():
    """p = 0.16 at 10⁴ shots: every fidelity in [0.90, 0.94] (ideal 1 - p/2 = 0.92)."""
    noise = NoiseModel(depolarizing_p=0.16, shots_per_setting=10_000, seed=7)
    output = six_state_experiment(Turn.FRM, noise, np.random.default_rng(7))
    assert output.mapping == MAPPING_TABLES[Turn.FRM]
    for row in output.rows:
        assert 0.90 <= row.fidelity <= 0.94, row
        assert 0.90 <= row.right_fraction <= 0.94, row


def test_six_state_depolarized_shot_free_is_exact():
    noise = NoiseModel(depolarizing_p=0.16, shots_per_setting=0)
    output = ReflectionExperiment(noise).run(Turn.MIRROR)
    for row in output.rows:
        assert row.fidelity == pytest.approx(0.92, abs=1e-10)


def test_six_state_keeps_records_per_input():
    output = six_state_experiment(Turn.FRM, NoiseModel(shots_per_setting=100), np.random.default_rng(1))
    assert [label for label, _ in output.records] == ["H", "V", "L+", "L-", "C+", "C-"]
    assert all(len(records) == 3 for _, records in output.records)
    assert "records" not in output.model_dump()
