"""Dense linear algebra on the atom ⊗ cavity product space.

Basis ordering contract (every other module relies on it):

    atom levels   0 = |u>   1 = |e>   2 = |g>
    cavity Fock   0 ... n_max

    index of |a, n>  =  a * fock_dim + n        (atom-major)

The space is small (3 * (n_max + 1), typically 9), so everything is a
plain dense complex ndarray.  Operations are pure; states and operators
are treated as immutable values and are safe to share between workers.
"""

from dataclasses import dataclass, field

import numpy as np

ATOM_LABELS = ("u", "e", "g")

WAVEFUNCTION = "wavefunction"
DENSITY_MATRIX = "density-matrix"


class TruncationError(ValueError):
    """Requested Fock level lies outside the truncated cavity space."""


class SpaceMismatchError(ValueError):
    """Operands live on different Hilbert spaces."""


@dataclass(frozen=True)
class HilbertSpace:
    """Product space of the three-level atom and the truncated cavity mode."""

    n_max: int = 2

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1 (fock_dim >= 2)")

    @property
    def atom_dim(self) -> int:
        return 3

    @property
    def fock_dim(self) -> int:
        return self.n_max + 1

    @property
    def total_dim(self) -> int:
        return self.atom_dim * self.fock_dim

    def index(self, atom_label: str, n: int) -> int:
        """Flat index of the product basis state |atom_label, n>."""
        if atom_label not in ATOM_LABELS:
            raise ValueError(f"unknown atom label {atom_label!r}")
        if not 0 <= n < self.fock_dim:
            raise TruncationError(
                f"Fock level n={n} outside truncated space (n_max={self.n_max})"
            )
        return ATOM_LABELS.index(atom_label) * self.fock_dim + n


@dataclass(frozen=True, eq=False)
class AtomCavityState:
    """State on the product space, either a ket or a density matrix.

    ``data`` is a complex vector of length total_dim (wavefunction) or a
    total_dim x total_dim matrix (density matrix).  Constructors do not
    normalize or validate; call :meth:`validate` to assert the invariants
    (operators like ``a`` legitimately produce unnormalized images).
    """

    space: HilbertSpace
    data: np.ndarray
    kind: str = WAVEFUNCTION

    def __post_init__(self):
        d = self.space.total_dim
        arr = np.asarray(self.data, dtype=complex)
        if self.kind == WAVEFUNCTION:
            if arr.shape != (d,):
                raise ValueError(f"wavefunction must have shape ({d},)")
        elif self.kind == DENSITY_MATRIX:
            if arr.shape != (d, d):
                raise ValueError(f"density matrix must have shape ({d},{d})")
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")
        object.__setattr__(self, "data", arr)

    @property
    def is_wavefunction(self) -> bool:
        return self.kind == WAVEFUNCTION

    def norm(self) -> float:
        if self.is_wavefunction:
            return float(np.linalg.norm(self.data))
        return float(abs(np.trace(self.data)))

    def to_density_matrix(self) -> "AtomCavityState":
        if not self.is_wavefunction:
            return self
        rho = np.outer(self.data, self.data.conj())
        return AtomCavityState(self.space, rho, DENSITY_MATRIX)

    def populations(self) -> np.ndarray:
        """Real basis-state populations, length total_dim."""
        if self.is_wavefunction:
            return np.abs(self.data) ** 2
        return np.real(np.diag(self.data))

    def validate(self):
        """Assert the state invariants; raises ValueError on violation."""
        if self.is_wavefunction:
            if abs(np.linalg.norm(self.data) - 1.0) > 1e-9:
                raise ValueError("wavefunction norm deviates from 1 by > 1e-9")
        else:
            rho = self.data
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise ValueError("density matrix not Hermitian within 1e-10")
            if abs(np.trace(rho).real - 1.0) > 1e-8 or abs(np.trace(rho).imag) > 1e-8:
                raise ValueError("density matrix trace deviates from 1 by > 1e-8")
            if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -1e-8:
                raise ValueError("density matrix has eigenvalue < -1e-8")
        return self


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on the product space."""

    space: HilbertSpace
    data: np.ndarray

    def __post_init__(self):
        d = self.space.total_dim
        arr = np.asarray(self.data, dtype=complex)
        if arr.shape != (d, d):
            raise ValueError(f"operator must have shape ({d},{d})")
        object.__setattr__(self, "data", arr)

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_space(self, other)
        return Operator(self.space, self.data @ other.data)

    def __add__(self, other: "Operator") -> "Operator":
        _check_space(self, other)
        return Operator(self.space, self.data + other.data)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.space, self.data * scalar)

    __rmul__ = __mul__


def _check_space(a, b):
    if a.space != b.space:
        raise SpaceMismatchError("operands live on different Hilbert spaces")


def basis_state(space: HilbertSpace, atom_label: str, n: int) -> AtomCavityState:
    """Unit ket |atom_label, n>; raises TruncationError for n >= fock_dim."""
    vec = np.zeros(space.total_dim, dtype=complex)
    vec[space.index(atom_label, n)] = 1.0
    return AtomCavityState(space, vec, WAVEFUNCTION)


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.total_dim, dtype=complex))


def annihilation(space: HilbertSpace) -> Operator:
    """Cavity photon annihilation a ⊗ 1_atom: a|a_label, n> = sqrt(n) |a_label, n-1>."""
    f = space.fock_dim
    a_fock = np.diag(np.sqrt(np.arange(1, f)), 1).astype(complex)
    return Operator(space, np.kron(np.eye(3, dtype=complex), a_fock))


def number_operator(space: HilbertSpace) -> Operator:
    a = annihilation(space)
    return Operator(space, a.data.conj().T @ a.data)


def atomic_transition(space: HilbertSpace, frm: str, to: str) -> Operator:
    """Atomic flip operator |to><frm| ⊗ 1_cavity."""
    proj = np.zeros((3, 3), dtype=complex)
    proj[ATOM_LABELS.index(to), ATOM_LABELS.index(frm)] = 1.0
    return Operator(space, np.kron(proj, np.eye(space.fock_dim, dtype=complex)))


def dagger(op: Operator) -> Operator:
    return Operator(op.space, op.data.conj().T)


def apply(op: Operator, state: AtomCavityState) -> AtomCavityState:
    """Raw image of the state under op (not renormalized).

    Wavefunctions map to op|psi>, density matrices to op rho op†.
    """
    _check_space(op, state)
    if state.is_wavefunction:
        return AtomCavityState(state.space, op.data @ state.data, WAVEFUNCTION)
    return AtomCavityState(
        state.space, op.data @ state.data @ op.data.conj().T, DENSITY_MATRIX
    )


def expectation(op: Operator, state: AtomCavityState) -> complex:
    """<op> on the given state: <psi|op|psi> or tr(op rho)."""
    _check_space(op, state)
    if state.is_wavefunction:
        return complex(np.vdot(state.data, op.data @ state.data))
    return complex(np.trace(op.data @ state.data))


def overlap(a: AtomCavityState, b: AtomCavityState) -> complex:
    """<a|b> for two wavefunctions."""
    _check_space(a, b)
    if not (a.is_wavefunction and b.is_wavefunction):
        raise ValueError("overlap is defined for wavefunctions")
    return complex(np.vdot(a.data, b.data))
