"""
Analysis Modules for the Faraday-Mirror Lab

Spin algebra, bench elements, the simulated bench, tomography and round-trip
compensation.
"""

from app.analysis.bench import ReflectionExperiment, entanglement_assisted_qpt, six_state_experiment
from app.analysis.compensation import ErgodicExperiment, ergodic_experiment
from app.analysis.elements import frm_unitary, round_trip_unitary
from app.analysis.tomography import ptm_from_io_states, state_tomography

__all__ = [
    "ReflectionExperiment",
    "ErgodicExperiment",
    "six_state_experiment",
    "entanglement_assisted_qpt",
    "ergodic_experiment",
    "frm_unitary",
    "round_trip_unitary",
    "ptm_from_io_states",
    "state_tomography",
]
