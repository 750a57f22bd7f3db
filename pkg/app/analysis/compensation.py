"""
Round-Trip Compensation for the Faraday-Mirror Lab

Stochastic reciprocal disturbances 𝕌(t) in front of a turn, the exact
cancellation 𝕌'·iσ₁·𝕌 = iσ₁ when the turn is a Faraday mirror, and the
ergodic experiment that compares the time-integrated outputs with the
disturbance active and inactive.

Layer 2 of our 3-layer architecture:
    Layer 1: Pydantic Models - Data validation
    Layer 2: Analysis Modules (THIS FILE) - Physics and inversion
    Layer 3: Runner, Exporter and CLI - Orchestration

SEED SPLITTING:
    Step k of a run draws its disturbance from
        default_rng(SeedSequence(proc.seed).spawn(proc.steps)[k])
    so every step is reproducible on its own; counting noise comes from the
    caller's generator.

TIME INTEGRATION:
    The detectors integrate over all steps: each setting collects
    steps × shots_per_setting events from the time-averaged output state.
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from app.analysis.bench import (
    TWO_QUBIT_SETTINGS,
    acquire_records,
    depolarize_qubit2,
    singlet_state,
)
from app.analysis.elements import (
    FRM_TARGET,
    linear_retarder,
    round_trip_unitary,
    turn_unitary,
)
from app.analysis.spin_core import (
    PROBE_STATES,
    apply_local_unitary,
    phase_distance,
    random_axis,
    uhlmann_fidelity,
)
from app.analysis.tomography import state_tomography
from app.models.analysis import (
    DisturbanceProcess,
    ElementChain,
    ErgodicOutput,
    ErgodicStep,
    NoiseModel,
    OpticalElement,
    ReciprocityKind,
    Turn,
)
from app.models.quantum import AxisAngle, TwoQubitDensity, Unitary

logger = logging.getLogger(__name__)

# Round trips within this phase distance of iσ₁ count as compensated
COMPENSATION_TOL = 1e-10

TWO_PI = 2.0 * np.pi


# ============================================================================
# Disturbances
# ============================================================================


def pockels_pair_chain(phi1: float, phi2: float) -> ElementChain:
    """Two Pockels cells at 0 and 45°: forward unitary exp(iφ₂σ₁/2)·exp(iφ₁σ₃/2)."""
    return ElementChain(
        elements=[
            linear_retarder(0.0, phi1, label="PC1"),
            linear_retarder(np.pi / 4, phi2, label="PC2"),
        ]
    )


def haar_element(rng: np.random.Generator) -> OpticalElement:
    """Reciprocal element with a uniformly random axis and θ ∈ [0, 2π)."""
    axis = random_axis(rng)
    theta = float(rng.uniform(0.0, TWO_PI))
    return OpticalElement(
        kind=ReciprocityKind.RECIPROCAL,
        aa=AxisAngle(n=axis, theta=theta),
        label="haar",
    )


def random_disturbance(
    proc: DisturbanceProcess,
    rng: Optional[np.random.Generator] = None,
) -> ElementChain:
    """
    One draw of the disturbance 𝕌.

    pockels_pair → two retarders at 0 and π/4, retardances uniform in [0, 2π)
    haar         → one reciprocal element with random axis and angle
    """
    rng = rng if rng is not None else np.random.default_rng(proc.seed)
    if proc.mode == "pockels_pair":
        phi1, phi2 = rng.uniform(0.0, TWO_PI, size=2)
        return pockels_pair_chain(float(phi1), float(phi2))
    return ElementChain(elements=[haar_element(rng)])


def step_generators(proc: DisturbanceProcess) -> list[np.random.Generator]:
    """One independent generator per step, split from proc.seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(proc.seed).spawn(proc.steps)]


def compensated_round_trip(chain: ElementChain) -> Unitary:
    """
    Round trip through a reciprocal chain terminated by the Faraday mirror.

    Raises:
        ValueError: if the chain holds a non-reciprocal element
    """
    if any(e.kind is not ReciprocityKind.RECIPROCAL for e in chain.elements):
        raise ValueError("Compensation applies to chains of reciprocal elements only")
    return round_trip_unitary(chain, Turn.FRM)


# ============================================================================
# Identity checks
# ============================================================================


def compensation_check(
    samples: int,
    mode: str = "haar",
    seed: int = 7,
) -> tuple[int, float]:
    """
    Sample `samples` disturbances and compare each FRM round trip with iσ₁.

    Returns:
        (number of failures beyond 1e-10, maximum phase distance)
    """
    proc = DisturbanceProcess(mode=mode, seed=seed, steps=1)
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    for _ in range(samples):
        deviation = phase_distance(compensated_round_trip(random_disturbance(proc, rng)), FRM_TARGET)
        worst = max(worst, deviation)
        if deviation > COMPENSATION_TOL:
            failures += 1
    logger.info(f"Compensation check ({mode}, n={samples}): {failures} failures, max {worst:.2e}")
    return failures, worst


def mirror_control(samples: int, seed: int = 7) -> float:
    """
    Negative control: the same Haar disturbances with a bare mirror.

    Returns the minimum, over disturbances and the six probe states, of the
    fidelity between the mirror round-trip output and the iσ₁ output.
    """
    proc = DisturbanceProcess(mode="haar", seed=seed, steps=1)
    rng = np.random.default_rng(seed)
    kets = np.stack([p.vector for p in PROBE_STATES.values()])
    target = kets @ FRM_TARGET.u.T

    lowest = 1.0
    for _ in range(samples):
        u = round_trip_unitary(random_disturbance(proc, rng), Turn.MIRROR)
        out = kets @ u.u.T
        overlaps = np.abs(np.sum(target.conj() * out, axis=1)) ** 2
        lowest = min(lowest, float(overlaps.min()))
    logger.info(f"Mirror control (n={samples}): minimum fidelity {lowest:.4f}")
    return lowest


# ============================================================================
# Ergodic experiment
# ============================================================================


class ErgodicExperiment:
    """
    Photon 2 of each singlet crosses the disturbance, the turn and the
    disturbance again; the time-integrated output is tomographed with the
    disturbance active and inactive and the two reconstructions are compared.

    Usage:
        experiment = ErgodicExperiment(NoiseModel(shots_per_setting=10_000))
        result = experiment.run(DisturbanceProcess(steps=100), rng)
    """

    def __init__(self, noise: Optional[NoiseModel] = None, turn: Turn = Turn.FRM):
        self.noise = noise or NoiseModel()
        self.turn = turn

    def run(
        self,
        proc: DisturbanceProcess,
        rng: Optional[np.random.Generator] = None,
    ) -> ErgodicOutput:
        rng = rng if rng is not None else np.random.default_rng(self.noise.seed)
        singlet = singlet_state()
        reference = apply_local_unitary(singlet, turn_unitary(self.turn))

        accumulated = np.zeros((4, 4), dtype=complex)
        steps: list[ErgodicStep] = []
        for k, step_rng in enumerate(step_generators(proc)):
            chain = random_disturbance(proc, step_rng)
            rho_k = apply_local_unitary(singlet, round_trip_unitary(chain, self.turn))
            accumulated += rho_k.m
            steps.append(
                ErgodicStep(
                    step=k,
                    thetas=[e.aa.theta for e in chain.elements],
                    axes=[e.aa.n for e in chain.elements],
                    instantaneous_fidelity=uhlmann_fidelity(rho_k, reference),
                )
            )

        p = self.noise.depolarizing_p
        active = depolarize_qubit2(TwoQubitDensity(m=accumulated / proc.steps), p)
        inactive = depolarize_qubit2(reference, p)

        events = proc.steps * self.noise.shots_per_setting
        tomo_active = state_tomography(
            acquire_records(active, TWO_QUBIT_SETTINGS, self.noise, rng, shots=events),
            seed=self.noise.seed,
        )
        tomo_inactive = state_tomography(
            acquire_records(inactive, TWO_QUBIT_SETTINGS, self.noise, rng, shots=events),
            seed=self.noise.seed,
        )
        fidelity = uhlmann_fidelity(tomo_active.state, tomo_inactive.state)

        logger.info(
            f"Ergodic {proc.mode}/{self.turn.value}, {proc.steps} steps, "
            f"{events} events per setting: F = {fidelity:.6f}"
        )
        return ErgodicOutput(
            mode=proc.mode,
            turn=self.turn,
            steps=proc.steps,
            shots_per_setting=self.noise.shots_per_setting,
            events_per_setting=events,
            depolarizing_p=p,
            seed=proc.seed,
            fidelity=fidelity,
            mean_instantaneous_fidelity=float(np.mean([s.instantaneous_fidelity for s in steps])),
            records=steps,
        )


def ergodic_experiment(
    proc: DisturbanceProcess,
    noise: NoiseModel,
    rng: Optional[np.random.Generator] = None,
    turn: Turn = Turn.FRM,
) -> ErgodicOutput:
    """Fidelity between the active and inactive reconstructions, plus per-step records."""
    return ErgodicExperiment(noise, turn).run(proc, rng)


def fidelity_vs_shots(
    proc: DisturbanceProcess,
    noise: NoiseModel,
    shots: Sequence[int] = (100, 1_000, 10_000),
    seeds: int = 5,
    turn: Turn = Turn.FRM,
) -> pd.DataFrame:
    """
    Ergodic fidelity over a shots scan, `seeds` counting streams per point.

    Stream j of every point is default_rng(SeedSequence(noise.seed).spawn(seeds)[j]).

    Returns:
        DataFrame with columns shots_per_setting, mean_fidelity, std_fidelity, seeds
    """
    if seeds < 1:
        raise ValueError("seeds must be at least 1")

    rows = []
    for n in shots:
        point_noise = noise.model_copy(update={"shots_per_setting": int(n)})
        streams = np.random.SeedSequence(noise.seed).spawn(seeds)
        values = [
            ErgodicExperiment(point_noise, turn).run(proc, np.random.default_rng(s)).fidelity
            for s in streams
        ]
        rows.append(
            {
                "shots_per_setting": int(n),
                "mean_fidelity": float(np.mean(values)),
                "std_fidelity": float(np.std(values, ddof=1)) if seeds > 1 else 0.0,
                "seeds": seeds,
            }
        )
        logger.debug(f"shots={n}: mean F = {rows[-1]['mean_fidelity']:.6f}")

    return pd.DataFrame(rows, columns=["shots_per_setting", "mean_fidelity", "std_fidelity", "seeds"])


__all__ = [
    "COMPENSATION_TOL",
    "pockels_pair_chain",
    "haar_element",
    "random_disturbance",
    "step_generators",
    "compensated_round_trip",
    "compensation_check",
    "mirror_control",
    "ErgodicExperiment",
    "ergodic_experiment",
    "fidelity_vs_shots",
]
