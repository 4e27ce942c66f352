"""Simulation of a driven atom-cavity single-photon source.

Layers, bottom up: ``hilbert`` (product-space linear algebra), ``model``
(Hamiltonian, decay channels, pulse sequence), ``master`` / ``trajectory``
(deterministic and stochastic time evolution), ``experiment`` (atom
transits and the detection chain), ``analysis`` (arrival histograms,
photon correlations, fits), ``cli`` (file formats and run orchestration).
"""

__version__ = "0.1.0"

from .hilbert import (
    AtomCavityState,
    HilbertSpace,
    Operator,
    annihilation,
    apply,
    atomic_transition,
    basis_state,
    dagger,
    expectation,
)
from .model import (
    PulseSequence,
    SystemParams,
    collapse_operators,
    dark_state,
    envelope_at,
    hamiltonian,
)
from .master import EvolutionResult, emission_probability, evolve_master
from .trajectory import TrajectoryRecord, run_trajectories, run_trajectory
from .experiment import (
    ApparatusParams,
    AtomTransit,
    ClickRecord,
    coupling_profile,
    sample_transits,
    simulate_run,
)
from . import analysis

__all__ = [
    "AtomCavityState", "HilbertSpace", "Operator", "annihilation", "apply",
    "atomic_transition", "basis_state", "dagger", "expectation",
    "PulseSequence", "SystemParams", "collapse_operators", "dark_state",
    "envelope_at", "hamiltonian",
    "EvolutionResult", "emission_probability", "evolve_master",
    "TrajectoryRecord", "run_trajectories", "run_trajectory",
    "ApparatusParams", "AtomTransit", "ClickRecord", "coupling_profile",
    "sample_transits", "simulate_run",
    "analysis",
]
