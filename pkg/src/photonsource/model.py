"""Physical model: system parameters, rotating-frame Hamiltonian, decay
channels, the Raman dark state, and the sawtooth pulse sequence.

Frame and sign conventions
--------------------------
The Hamiltonian is written in the frame rotating with the pump laser (for
the |u> <-> |e> branch) and with the cavity drive (for the photon number),
after the rotating-wave approximation:

    H/hbar = -delta_p |e><e|  +  (delta_c - delta_p) a†a
             + (omega_p/2) (|e><u| + |u><e|)
             + g (|e><g| a + a† |g><e|)
             + (omega_r/2) (e^{+i phi(t)} |e><g| + e^{-i phi(t)} |g><e|)

with phi(t) = (delta_p - delta_r) * t.  delta_p and delta_c are the pump
and cavity detunings from their respective atomic transitions; the
one-photon manifold {|u,0>, |e,0>, |g,1>} then carries bare energies
{0, -delta_p, delta_c - delta_p}.  With this choice the coupled n = 1
block at Raman resonance (delta_p = delta_c) has the zero-energy dark
eigenstate

    (2 g |u,0> - omega_p |g,1>) / sqrt(4 g^2 + omega_p^2),

i.e. the cavity branch carries the full coupling g per photon (vacuum Rabi
frequency 2 g sqrt(n)), which is what fixes the relative factor of 2.

The recycle laser is resonant with the bare |g> <-> |e> transition
(delta_r = 0 by default), which in this frame makes its coupling rotate at
delta_p - delta_r; the phase reference is the caller's t = 0.  kappa is
the cavity *field* decay rate (photon number decays at 2 kappa) and gamma
the full *population* decay rate of |e>.

All rates and detunings are angular frequencies in rad/s; times are in
seconds.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .hilbert import (
    AtomCavityState,
    HilbertSpace,
    Operator,
    WAVEFUNCTION,
    annihilation,
    atomic_transition,
)

TWO_PI = 2.0 * math.pi

# Collapse-channel order is fixed; the first entry is the photon-producing one.
CHANNELS = ("cavity", "spont_u", "spont_g")
CHANNEL_CAVITY = 0
CHANNEL_SPONT_U = 1
CHANNEL_SPONT_G = 2

SHAPE_SAWTOOTH = "sawtooth"
SHAPE_CONSTANT = "constant"
SHAPE_SAMPLED = "sampled"


class UndefinedDarkStateError(ValueError):
    """Dark state is undefined when both g and omega_p vanish."""


@dataclass(frozen=True)
class SystemParams:
    """All physical rates of the model; defaults are the reference set
    2*pi x (g, omega_p0, omega_r0, delta_p, delta_c, gamma, kappa)
    = 2*pi x (2.5, 8.0, 8.0, -20.0, -20.0, 6.0, 1.25) MHz.
    """

    g: float = TWO_PI * 2.5e6          # average atom-cavity coupling
    omega_p0: float = TWO_PI * 8.0e6   # peak pump Rabi frequency
    omega_r0: float = TWO_PI * 8.0e6   # peak recycle Rabi frequency
    delta_p: float = -TWO_PI * 20.0e6  # pump detuning
    delta_c: float = -TWO_PI * 20.0e6  # cavity detuning
    gamma: float = TWO_PI * 6.0e6      # |e> population decay rate
    kappa: float = TWO_PI * 1.25e6     # cavity field decay rate
    branch_u: float = 0.5              # fraction of gamma decaying |e> -> |u>
    delta_r: float = 0.0               # recycle-laser detuning from bare |g><->|e>
    n_max: int = 2

    def __post_init__(self):
        for name in ("g", "omega_p0", "omega_r0", "gamma", "kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.branch_u <= 1.0:
            raise ValueError("branch_u must lie in [0, 1]")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.n_max)

    def with_coupling(self, g: float) -> "SystemParams":
        return replace(self, g=g)


@dataclass(frozen=True)
class PulseSequence:
    """Timed pump/recycle envelopes, periodic with ``period``.

    Sawtooth pulses rise linearly from 0 to the peak over the pulse
    duration and drop back to 0 at the end.  ``n_pulses`` limits the
    number of driven periods (None = unbounded).  A ``sampled`` shape
    interpolates user-supplied envelope samples linearly across the pulse
    window (values in [0, 1]).
    """

    pump_duration: float = 2.0e-6
    recycle_duration: float = 2.0e-6
    period: float = 5.0e-6
    pump_start_offset: float = 0.0
    recycle_start_offset: float = 2.5e-6
    n_pulses: int | None = None
    shape: str = SHAPE_SAWTOOTH
    pump_samples: tuple[float, ...] | None = None
    recycle_samples: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        for name in ("pump_duration", "recycle_duration"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.shape not in (SHAPE_SAWTOOTH, SHAPE_CONSTANT, SHAPE_SAMPLED):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.shape == SHAPE_SAMPLED:
            for nm, s in (("pump_samples", self.pump_samples),
                          ("recycle_samples", self.recycle_samples)):
                if s is None or len(s) < 2:
                    raise ValueError(f"{nm} must hold >= 2 samples for sampled shape")
                if min(s) < 0:
                    raise ValueError(f"{nm} values must be >= 0")
        p0, p1 = self.pump_start_offset, self.pump_start_offset + self.pump_duration
        r0, r1 = self.recycle_start_offset, self.recycle_start_offset + self.recycle_duration
        if p1 > self.period or r1 > self.period:
            raise ValueError("pulse windows must fit within one period")
        if self.pump_duration > 0 and self.recycle_duration > 0:
            if p0 < r1 and r0 < p1:
                raise ValueError("pump and recycle windows overlap")

    def window(self, which: str) -> tuple[float, float]:
        if which == "pump":
            return (self.pump_start_offset,
                    self.pump_start_offset + self.pump_duration)
        if which == "recycle":
            return (self.recycle_start_offset,
                    self.recycle_start_offset + self.recycle_duration)
        raise ValueError(f"unknown pulse {which!r}")

    def breakpoints(self, t0: float, t1: float) -> np.ndarray:
        """Sorted envelope breakpoints in [t0, t1], including both ends.

        Integrators must not step across these: the sawtooth derivative is
        discontinuous there.
        """
        pts = {t0, t1}
        k0 = math.floor(t0 / self.period) - 1
        k1 = math.ceil(t1 / self.period) + 1
        for k in range(k0, k1 + 1):
            base = k * self.period
            edges = [base]
            for w0, w1 in (self.window("pump"), self.window("recycle")):
                edges += [base + w0, base + w1]
            for edge in edges:
                if t0 < edge < t1:
                    pts.add(edge)
        return np.array(sorted(pts))


def envelope_at(seq: PulseSequence, which: str, t: float) -> float:
    """Dimensionless envelope value in [0, 1] of the pump or recycle pulse."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if seq.n_pulses is not None and t >= seq.n_pulses * seq.period:
        return 0.0
    tau = t % seq.period
    w0, w1 = seq.window(which)
    if not (w0 <= tau < w1):
        return 0.0
    frac = (tau - w0) / (w1 - w0)
    if seq.shape == SHAPE_SAWTOOTH:
        return frac
    if seq.shape == SHAPE_CONSTANT:
        return 1.0
    samples = seq.pump_samples if which == "pump" else seq.recycle_samples
    x = frac * (len(samples) - 1)
    i = min(int(x), len(samples) - 2)
    return samples[i] + (x - i) * (samples[i + 1] - samples[i])


def _coupling_matrix(space: HilbertSpace) -> np.ndarray:
    """g-independent structure of the cavity coupling, |e><g| a + a† |g><e|."""
    a = annihilation(space).data
    eg = atomic_transition(space, "g", "e").data
    m = eg @ a
    return m + m.conj().T


def hamiltonian(params: SystemParams, omega_p: float, omega_r: float,
                t: float = 0.0) -> Operator:
    """Rotating-frame Hamiltonian for instantaneous envelope values.

    ``omega_p`` and ``omega_r`` are the instantaneous Rabi frequencies
    (peak value times envelope).  ``t`` sets the recycle-drive phase
    (delta_p - delta_r) * t; at t = 0 the recycle coupling is real.
    Hermitian by construction.
    """
    if omega_p < 0 or omega_r < 0:
        raise ValueError("instantaneous Rabi frequencies must be >= 0")
    space = params.space
    a = annihilation(space).data
    proj_e = atomic_transition(space, "e", "e").data
    h = -params.delta_p * proj_e
    h = h + (params.delta_c - params.delta_p) * (a.conj().T @ a)
    eu = atomic_transition(space, "u", "e").data
    h = h + 0.5 * omega_p * (eu + eu.conj().T)
    h = h + params.g * _coupling_matrix(space)
    if omega_r != 0.0:
        phase = np.exp(1j * (params.delta_p - params.delta_r) * t)
        eg = atomic_transition(space, "g", "e").data
        h = h + 0.5 * omega_r * (phase * eg + np.conj(phase) * eg.conj().T)
    return Operator(space, h)


def dark_state(g: float, omega_p: float, space: HilbertSpace) -> AtomCavityState:
    """Zero-energy Raman dark state (2g |u,0> - omega_p |g,1>) / norm.

    Has no |e,.> component for any (g, omega_p); undefined when both
    vanish.
    """
    if g == 0.0 and omega_p == 0.0:
        raise UndefinedDarkStateError("dark state undefined for g = omega_p = 0")
    vec = np.zeros(space.total_dim, dtype=complex)
    vec[space.index("u", 0)] = 2.0 * g
    vec[space.index("g", 1)] = -omega_p
    vec /= math.sqrt(4.0 * g * g + omega_p * omega_p)
    return AtomCavityState(space, vec, WAVEFUNCTION)


def collapse_operators(params: SystemParams) -> list[Operator]:
    """Decay channels in the fixed order (cavity, spont_u, spont_g).

    cavity  : sqrt(2 kappa) a          (photon emission from the cavity)
    spont_u : sqrt(branch_u gamma)     |u><e|
    spont_g : sqrt((1-branch_u) gamma) |g><e|

    Channels with zero rate are kept as zero operators so the ordering is
    stable.
    """
    space = params.space
    a = annihilation(space)
    c_cav = math.sqrt(2.0 * params.kappa) * a
    c_u = math.sqrt(params.branch_u * params.gamma) * atomic_transition(space, "e", "u")
    c_g = math.sqrt((1.0 - params.branch_u) * params.gamma) * atomic_transition(space, "e", "g")
    return [c_cav, c_u, c_g]
