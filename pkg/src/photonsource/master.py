"""Deterministic Lindblad master-equation integration.

Solves d rho/dt = -i [H(t), rho] + sum_k (C_k rho C_k† - {C_k† C_k, rho}/2)
with the time-dependent Hamiltonian assembled from the pulse envelopes.
Integration uses an adaptive embedded Runge-Kutta 4(5) pair and is split
exactly at the envelope breakpoints, where the sawtooth derivative is
discontinuous.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .hilbert import AtomCavityState, DENSITY_MATRIX, annihilation
from .model import (
    PulseSequence,
    SystemParams,
    _coupling_matrix,
    atomic_transition,
    collapse_operators,
    envelope_at,
)

TRUNCATION_POPULATION_LIMIT = 1e-3


class StiffnessError(RuntimeError):
    """Integrator step size underflowed; carries the failure time."""

    def __init__(self, t: float, detail: str = ""):
        self.t = t
        super().__init__(f"integration failed at t = {t:.6e} s {detail}".rstrip())


class TruncationWarning(UserWarning):
    """Population in the top Fock level exceeded the trusted bound."""


@dataclass(frozen=True)
class EvolutionResult:
    """Sampled density-matrix evolution and the cavity emission flux
    2 kappa <a†a>(t) in photons/s."""

    times: np.ndarray
    states: list[AtomCavityState]
    emission_flux: np.ndarray


class _LindbladRHS:
    """Right-hand side closure; keeps the constant matrices preassembled."""

    def __init__(self, params: SystemParams, seq: PulseSequence):
        self.params = params
        self.seq = seq
        self.dim = params.space.total_dim
        a = annihilation(params.space).data
        proj_e = atomic_transition(params.space, "e", "e").data
        self.h_static = (
            -params.delta_p * proj_e
            + (params.delta_c - params.delta_p) * (a.conj().T @ a)
            + params.g * _coupling_matrix(params.space)
        )
        eu = atomic_transition(params.space, "u", "e").data
        self.b_pump = 0.5 * (eu + eu.conj().T)
        self.r_rec = 0.5 * atomic_transition(params.space, "g", "e").data
        self.phase_rate = params.delta_p - params.delta_r
        self.c_ops = [c.data for c in collapse_operators(params)
                      if np.any(c.data)]
        self.cc_sum = sum(
            (c.conj().T @ c for c in self.c_ops),
            np.zeros((self.dim, self.dim), dtype=complex),
        )
        self.n_op = a.conj().T @ a

    def h_at(self, t: float) -> np.ndarray:
        h = self.h_static.copy()
        ep = envelope_at(self.seq, "pump", t)
        if ep != 0.0:
            h += (self.params.omega_p0 * ep) * self.b_pump
        er = envelope_at(self.seq, "recycle", t)
        if er != 0.0:
            # period-local phase reference: keeps H(t) exactly periodic for
            # any detuning, and the envelope vanishes at period boundaries
            # so no discontinuity is introduced
            w = self.params.omega_r0 * er * np.exp(
                1j * self.phase_rate * (t % self.seq.period))
            h += w * self.r_rec + np.conj(w) * self.r_rec.conj().T
        return h

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(self.dim, self.dim)
        h_nh = self.h_at(t) - 0.5j * self.cc_sum
        drho = -1j * (h_nh @ rho - rho @ h_nh.conj().T)
        for c in self.c_ops:
            drho += c @ rho @ c.conj().T
        return drho.ravel()


def _as_density(initial: AtomCavityState) -> np.ndarray:
    return initial.to_density_matrix().data.copy()


def evolve_master(initial: AtomCavityState, params: SystemParams,
                  seq: PulseSequence, t_span: tuple[float, float],
                  rel_tol: float = 1e-8, abs_tol: float = 1e-10,
                  times: np.ndarray | None = None) -> EvolutionResult:
    """Integrate the master equation over t_span.

    ``initial`` may be a wavefunction (auto-promoted to a density matrix).
    ``times`` selects the output samples (defaults to 501 equally spaced
    points).  Emits TruncationWarning if the top Fock level acquires more
    than 1e-3 population; raises StiffnessError if the step size
    underflows.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must have positive length")
    if times is None:
        times = np.linspace(t0, t1, 501)
    times = np.asarray(times, dtype=float)
    if times[0] < t0 - 1e-15 or times[-1] > t1 + 1e-15:
        raise ValueError("output times must lie within t_span")

    rhs = _LindbladRHS(params, seq)
    edges = seq.breakpoints(t0, t1)
    y = _as_density(initial).ravel()

    out_times: list[float] = []
    out_states: list[np.ndarray] = []
    for a, b in zip(edges[:-1], edges[1:]):
        mask = (times >= a) & (times < b) if b < t1 else (times >= a) & (times <= b)
        wanted = times[mask]
        # always evaluate at the window end so the next window continues
        # from y(b), not from the last requested sample
        t_eval = wanted if wanted.size and wanted[-1] == b else np.append(wanted, b)
        sol = solve_ivp(rhs, (a, b), y, method="RK45",
                        rtol=rel_tol, atol=abs_tol, t_eval=t_eval)
        if not sol.success:
            raise StiffnessError(sol.t[-1] if sol.t.size else a, f"({sol.message})")
        out_times.extend(wanted)
        out_states.extend(sol.y[:, :wanted.size].T.copy())
        y = sol.y[:, -1]

    dim = rhs.dim
    space = params.space
    states = []
    flux = np.empty(len(out_states))
    top_rows = [space.index(a_lbl, params.n_max) for a_lbl in ("u", "e", "g")]
    worst_top = 0.0
    for i, vec in enumerate(out_states):
        rho = vec.reshape(dim, dim)
        states.append(AtomCavityState(space, rho, DENSITY_MATRIX))
        flux[i] = 2.0 * params.kappa * np.real(np.trace(rhs.n_op @ rho))
        worst_top = max(worst_top, float(sum(np.real(rho[r, r]) for r in top_rows)))
    if worst_top > TRUNCATION_POPULATION_LIMIT:
        warnings.warn(
            f"top Fock level n={params.n_max} reached population "
            f"{worst_top:.2e} > {TRUNCATION_POPULATION_LIMIT:.0e}; "
            "increase n_max",
            TruncationWarning,
        )
    return EvolutionResult(np.asarray(out_times), states, flux)


def emission_probability(params: SystemParams, seq: PulseSequence,
                         initial: AtomCavityState,
                         window: tuple[float, float],
                         rel_tol: float = 1e-8,
                         abs_tol: float = 1e-10) -> float:
    """Integrated cavity emission probability over ``window``.

    Returns int_window 2 kappa <a†a>(t) dt with the integral carried as an
    auxiliary ODE component, so its accuracy matches the integrator
    tolerance.  The initial state is taken at the window start.
    """
    t0, t1 = float(window[0]), float(window[1])
    if not t1 > t0:
        raise ValueError("window must have positive length")
    rhs = _LindbladRHS(params, seq)
    dim = rhs.dim
    n_op = rhs.n_op
    two_kappa = 2.0 * params.kappa

    def rhs_aug(t, y):
        drho = rhs(t, y[:-1])
        rho = y[:-1].reshape(dim, dim)
        dq = two_kappa * np.real(np.trace(n_op @ rho))
        return np.concatenate([drho, [dq]])

    y = np.concatenate([_as_density(initial).ravel(), [0.0 + 0.0j]])
    edges = seq.breakpoints(t0, t1)
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(rhs_aug, (a, b), y, method="RK45",
                        rtol=rel_tol, atol=abs_tol)
        if not sol.success:
            raise StiffnessError(sol.t[-1] if sol.t.size else a, f"({sol.message})")
        y = sol.y[:, -1]
    return float(np.real(y[-1]))
