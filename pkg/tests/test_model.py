"""Model layer: Hamiltonian conventions, dark state, decay channels,
pulse envelopes."""

import math

import numpy as np
import pytest
from scipy.optimize import curve_fit

from photonsource.hilbert import HilbertSpace, Operator, basis_state, expectation
from photonsource.master import evolve_master
from photonsource.model import (
    PulseSequence,
    SystemParams,
    UndefinedDarkStateError,
    collapse_operators,
    dark_state,
    envelope_at,
    hamiltonian,
)

TWO_PI = 2 * math.pi


def test_default_parameter_set():
    p = SystemParams()
    assert p.g == pytest.approx(TWO_PI * 2.5e6)
    assert p.omega_p0 == pytest.approx(TWO_PI * 8.0e6)
    assert p.omega_r0 == pytest.approx(TWO_PI * 8.0e6)
    assert p.delta_p == pytest.approx(-TWO_PI * 20.0e6)
    assert p.delta_c == pytest.approx(-TWO_PI * 20.0e6)
    assert p.gamma == pytest.approx(TWO_PI * 6.0e6)
    assert p.kappa == pytest.approx(TWO_PI * 1.25e6)
    assert p.n_max == 2


def test_u0_zero_eigenvector(space):
    p = SystemParams(delta_p=0.0, delta_c=0.0)
    h = hamiltonian(p, 0.0, 0.0)
    u0 = basis_state(space, "u", 0)
    assert np.allclose(h.data @ u0.data, 0.0)


def test_hamiltonian_hermitian_random(space, rng):
    for _ in range(200):
        p = SystemParams(
            g=TWO_PI * rng.uniform(0, 10e6),
            delta_p=TWO_PI * rng.uniform(-40e6, 40e6),
            delta_c=TWO_PI * rng.uniform(-40e6, 40e6),
            delta_r=TWO_PI * rng.uniform(-5e6, 5e6),
        )
        h = hamiltonian(p, TWO_PI * rng.uniform(0, 20e6),
                        TWO_PI * rng.uniform(0, 20e6),
                        t=rng.uniform(0, 5e-6)).data
        assert np.max(np.abs(h - h.conj().T)) < 1e-6  # rad/s scale ~1e8


def test_n1_block_eigenvalues_against_oracle(space):
    # independent oracle: diagonalize the explicit 3x3 coupled block
    p = SystemParams(delta_p=0.0, delta_c=0.0)
    omega_p = p.omega_p0
    h = hamiltonian(p, omega_p, 0.0).data
    idx = [space.index("u", 0), space.index("e", 0), space.index("g", 1)]
    block = h[np.ix_(idx, idx)]
    oracle = np.array([[0.0, omega_p / 2, 0.0],
                       [omega_p / 2, 0.0, p.g],
                       [0.0, p.g, 0.0]])
    assert np.allclose(block, oracle)
    ev = np.sort(np.linalg.eigvalsh(block))
    rabi = 0.5 * math.sqrt(4 * p.g**2 + omega_p**2)
    assert np.allclose(ev, [-rabi, 0.0, rabi], rtol=1e-12)


def test_dark_state_limits(space):
    p = SystemParams()
    u0 = basis_state(space, "u", 0)
    assert np.allclose(dark_state(p.g, 0.0, space).data, u0.data)
    sym = dark_state(p.g, 2 * p.g, space).data
    expect = (u0.data - basis_state(space, "g", 1).data) / math.sqrt(2)
    assert np.allclose(sym, expect)
    # omega_p >> 2g approaches |g,1> in magnitude
    big = dark_state(p.g, 200 * p.g, space)
    ov = abs(np.vdot(basis_state(space, "g", 1).data, big.data))
    assert ov > 0.99995
    with pytest.raises(UndefinedDarkStateError):
        dark_state(0.0, 0.0, space)


def test_dark_state_no_excited_component(space, rng):
    e_rows = [space.index("e", n) for n in range(space.fock_dim)]
    for _ in range(1000):
        g = rng.uniform(0, 1e8)
        op = rng.uniform(0, 1e8)
        if g == 0.0 and op == 0.0:
            continue
        ds = dark_state(g, op, space)
        assert all(ds.data[r] == 0.0 for r in e_rows)
        assert abs(np.linalg.norm(ds.data) - 1.0) < 1e-12


def test_dark_state_decoupled_at_raman_resonance(space, rng):
    e0 = space.index("e", 0)
    for _ in range(200):
        delta = TWO_PI * rng.uniform(-40e6, 40e6)
        p = SystemParams(g=TWO_PI * rng.uniform(0.5e6, 10e6),
                         delta_p=delta, delta_c=delta)
        omega_p = TWO_PI * rng.uniform(0, 20e6)
        h = hamiltonian(p, omega_p, 0.0).data
        ds = dark_state(p.g, omega_p, space).data
        assert abs((h @ ds)[e0]) < 1e-6


def test_photon_admixture_quadratic_in_pump(space):
    # |<g,1|dark>|^2 / omega_p^2 = 1/(4g^2 + omega_p^2): constant to 1%
    # requires omega_p <= 0.1 * 2g (at the bound the deviation is exactly 1%)
    p = SystemParams()
    g1 = space.index("g", 1)
    ref = None
    for omega_p in np.linspace(1e3, 0.1 * 2 * p.g, 50):
        ds = dark_state(p.g, omega_p, space)
        ratio = abs(ds.data[g1]) ** 2 / omega_p**2
        if ref is None:
            ref = ratio
        assert ratio == pytest.approx(ref, rel=1.01e-2)


def test_collapse_operators_structure(space):
    p = SystemParams()
    c_cav, c_u, c_g = collapse_operators(p)
    g1 = basis_state(space, "g", 1)
    # photon number 1/e time = 1/(2 kappa) ~ 63.7 ns
    rate = expectation(
        Operator(space, c_cav.data.conj().T @ c_cav.data), g1).real
    assert 1.0 / rate == pytest.approx(63.66e-9, rel=1e-3)
    # branching
    e0 = basis_state(space, "e", 0)
    p1 = SystemParams(branch_u=1.0)
    _, c_u1, c_g1 = collapse_operators(p1)
    assert np.allclose(c_g1.data, 0.0)
    assert np.linalg.norm(c_u1.data @ e0.data) == pytest.approx(
        math.sqrt(p1.gamma))


def test_free_excited_state_decay_rate(space):
    # oracle: single-exponential fit of the master-equation |e> population
    # with all couplings and drives off
    p = SystemParams(g=0.0, omega_p0=0.0, omega_r0=0.0)
    e0 = basis_state(space, "e", 0)
    t = np.linspace(0, 80e-9, 33)
    res = evolve_master(e0, p, PulseSequence(), (0, t[-1]), times=t)
    pop_e = np.array([s.populations()[space.index("e", 0)] for s in res.states])
    (rate,), _ = curve_fit(lambda tt, r: np.exp(-r * tt), t, pop_e,
                           p0=[3e7])
    assert rate == pytest.approx(p.gamma, rel=1e-6)


def test_envelope_sawtooth(seq):
    w0, w1 = seq.window("pump")
    assert envelope_at(seq, "pump", w0) == 0.0
    assert envelope_at(seq, "pump", w1 - 1e-12) == pytest.approx(1.0, abs=1e-5)
    assert envelope_at(seq, "pump", w0 + seq.pump_duration / 2) == pytest.approx(0.5)
    # outside the window and periodic
    assert envelope_at(seq, "pump", w1 + 0.1e-6) == 0.0
    assert envelope_at(seq, "pump", w0 + seq.period + seq.pump_duration / 2) \
        == pytest.approx(0.5)
    r0, _ = seq.window("recycle")
    assert envelope_at(seq, "recycle", r0 + seq.recycle_duration / 4) \
        == pytest.approx(0.25)


def test_envelope_shapes_and_npulses():
    const = PulseSequence(shape="constant", n_pulses=1)
    assert envelope_at(const, "pump", 1.0e-6) == 1.0
    assert envelope_at(const, "pump", 1.0e-6 + const.period) == 0.0
    samp = PulseSequence(shape="sampled",
                         pump_samples=(0.0, 1.0, 0.5),
                         recycle_samples=(1.0, 1.0))
    assert envelope_at(samp, "pump", 0.5e-6) == pytest.approx(0.5)
    assert envelope_at(samp, "pump", 1.5e-6) == pytest.approx(0.75)
    assert envelope_at(samp, "recycle", 3.0e-6) == pytest.approx(1.0)


def test_pulse_windows_must_not_overlap():
    with pytest.raises(ValueError):
        PulseSequence(pump_duration=3.0e-6, recycle_start_offset=2.0e-6)
    with pytest.raises(ValueError):
        PulseSequence(period=4.0e-6)  # recycle window would stick out


def test_breakpoints_cover_edges(seq):
    pts = seq.breakpoints(0.0, seq.period)
    for edge in (0.0, 2.0e-6, 2.5e-6, 4.5e-6, 5.0e-6):
        assert np.any(np.isclose(pts, edge))
