"""Product-space linear algebra: indexing, operators, and invariants."""

import numpy as np
import pytest

from photonsource.hilbert import (
    AtomCavityState,
    HilbertSpace,
    Operator,
    SpaceMismatchError,
    TruncationError,
    annihilation,
    apply,
    atomic_transition,
    basis_state,
    dagger,
    expectation,
    identity,
    number_operator,
    overlap,
)


def test_basis_indexing_nmax1():
    sp = HilbertSpace(1)
    assert np.argmax(np.abs(basis_state(sp, "u", 0).data)) == 0
    # atom-major ordering: |g,1> sits at 2*2+1 = 5
    assert np.argmax(np.abs(basis_state(sp, "g", 1).data)) == 5
    with pytest.raises(TruncationError):
        basis_state(sp, "g", 2)


def test_basis_states_orthonormal(space):
    kets = [basis_state(space, a, n)
            for a in "ueg" for n in range(space.fock_dim)]
    for i, a in enumerate(kets):
        for j, b in enumerate(kets):
            assert overlap(a, b) == (1.0 if i == j else 0.0)


def test_annihilation_action(space):
    a = annihilation(space)
    g1 = basis_state(space, "g", 1)
    g0 = basis_state(space, "g", 0)
    assert np.allclose(apply(a, g1).data, g0.data)
    assert expectation(number_operator(space), g1) == pytest.approx(1.0)
    u0 = basis_state(space, "u", 0)
    assert np.allclose(apply(number_operator(space), u0).data, 0.0)
    # sqrt(n) ladder factor
    g2 = basis_state(space, "g", 2)
    assert np.allclose(apply(a, g2).data, np.sqrt(2) * g1.data)


def test_dagger_involution_and_positivity(space, rng):
    d = space.total_dim
    for _ in range(50):
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        op = Operator(space, m)
        assert np.array_equal(dagger(dagger(op)).data, op.data)
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        v /= np.linalg.norm(v)
        state = AtomCavityState(space, v)
        val = expectation(Operator(space, m.conj().T @ m), state)
        assert val.real >= -1e-10
        assert abs(val.imag) < 1e-10


def test_expectation_hermitian_real(space, rng):
    d = space.total_dim
    for _ in range(50):
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = m + m.conj().T
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        v /= np.linalg.norm(v)
        val = expectation(Operator(space, h), AtomCavityState(space, v))
        assert abs(val.imag) < 1e-10


def test_commutator_truncation_confined(space):
    a = annihilation(space).data
    comm = a @ a.conj().T - a.conj().T @ a
    dev = comm - np.eye(space.total_dim)
    top = [space.index(lbl, space.n_max) for lbl in "ueg"]
    for i in range(space.total_dim):
        for j in range(space.total_dim):
            if i in top or j in top:
                continue
            assert abs(dev[i, j]) < 1e-12
    # the truncation artifact is -(n_max+1) on the top level
    for i in top:
        assert dev[i, i] == pytest.approx(-(space.n_max + 1))


def test_space_mismatch_rejected():
    a2 = annihilation(HilbertSpace(2))
    psi1 = basis_state(HilbertSpace(1), "u", 0)
    with pytest.raises(SpaceMismatchError):
        apply(a2, psi1)
    with pytest.raises(SpaceMismatchError):
        expectation(a2, psi1)


def test_state_validation(space):
    good = basis_state(space, "e", 1)
    good.validate()
    bad = AtomCavityState(space, good.data * 1.5)
    with pytest.raises(ValueError):
        bad.validate()
    rho = good.to_density_matrix()
    rho.validate()
    broken = AtomCavityState(space, rho.data * 2.0, "density-matrix")
    with pytest.raises(ValueError):
        broken.validate()


def test_identity_neutral(space, rng):
    v = rng.normal(size=space.total_dim) + 1j * rng.normal(size=space.total_dim)
    st = AtomCavityState(space, v)
    assert np.array_equal(apply(identity(space), st).data, v)


def test_atomic_transition_matrix(space):
    eu = atomic_transition(space, "u", "e")
    u0 = basis_state(space, "u", 0)
    assert np.allclose(apply(eu, u0).data, basis_state(space, "e", 0).data)
    assert np.allclose(apply(eu, basis_state(space, "g", 0)).data, 0.0)
