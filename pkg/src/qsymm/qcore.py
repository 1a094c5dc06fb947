"""Dense multi-qubit states: construction, composition, reduction, comparison.

Qubit ordering is big-endian in label order: for labels ``(S, A, B)`` the basis
index of ``|s a b>`` is ``4*s + 2*a + b``. Every module relies on this.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-12
PSD_FLOOR = -1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.setflags(write=False)
    return arr


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(f"q{i}" for i in range(n))


def _num_qubits(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def _check_labels(labels: Sequence[str], n: int) -> tuple[str, ...]:
    labels = tuple(labels)
    if len(labels) != n:
        raise ValueError(f"{len(labels)} labels given for {n} qubits")
    if len(set(labels)) != n:
        raise ValueError(f"duplicate qubit labels in {labels}")
    return labels


@dataclass(frozen=True)
class PureState:
    """Normalized state vector with one label per qubit."""

    amplitudes: np.ndarray
    labels: tuple[str, ...] = None

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        n = _num_qubits(amps.size)
        labels = _default_labels(n) if self.labels is None else self.labels
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", _check_labels(labels, n))
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > ATOL:
            raise ValueError(f"state is not normalized: norm = {norm!r}")

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def relabel(self, labels: Sequence[str]) -> "PureState":
        return PureState(self.amplitudes, tuple(labels))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.labels)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix with qubit labels."""

    matrix: np.ndarray
    labels: tuple[str, ...] = None
    _eigenvalues: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {mat.shape}")
        n = _num_qubits(mat.shape[0])
        labels = _default_labels(n) if self.labels is None else self.labels
        object.__setattr__(self, "labels", _check_labels(labels, n))
        if not np.allclose(mat, mat.conj().T, rtol=0, atol=ATOL):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(mat)
        if abs(tr - 1) > ATOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        mat = (mat + mat.conj().T) / 2
        evals = np.linalg.eigvalsh(mat)
        if evals[0] < PSD_FLOOR:
            raise ValueError(f"density matrix has negative eigenvalue {evals[0]!r}")
        object.__setattr__(self, "matrix", _frozen(mat))
        evals.setflags(write=False)
        object.__setattr__(self, "_eigenvalues", evals)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues."""
        return self._eigenvalues

    def relabel(self, labels: Sequence[str]) -> "DensityMatrix":
        return DensityMatrix(self.matrix, tuple(labels))


@dataclass(frozen=True)
class BlochVector:
    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float).reshape(3)
        if np.linalg.norm(r) > 1 + 1e-10:
            raise ValueError(f"Bloch vector {r} lies outside the unit ball")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)


# -- construction -----------------------------------------------------------


def ket(bits: str, labels: Sequence[str] | None = None) -> PureState:
    """Computational basis state, e.g. ``ket("01", ("S", "A"))``."""
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1
    return PureState(amps, labels)


def state_from_bloch(theta: float, phi: float, label: str = "q0") -> PureState:
    """``cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>``."""
    amps = [np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]
    return PureState(amps, (label,))


def orthogonal(phi: PureState) -> PureState:
    """The flipped state ``(-b*, a*)`` of ``a|0> + b|1>``.

    With this phase choice ``(|phi phi_perp> - |phi_perp phi>)/sqrt(2)`` is the
    singlet exactly, for every ``phi``.
    """
    if phi.num_qubits != 1:
        raise ValueError("orthogonal() needs a single-qubit state")
    a, b = phi.amplitudes
    return PureState([-np.conj(b), np.conj(a)], phi.labels)


def conjugate(phi: PureState) -> PureState:
    return PureState(phi.amplitudes.conj(), phi.labels)


def bell_state(name: str, labels: Sequence[str] = ("A", "B")) -> PureState:
    """One of ``psi-``, ``psi+``, ``phi-``, ``phi+``."""
    table = {
        "psi-": [0, 1, -1, 0],
        "psi+": [0, 1, 1, 0],
        "phi-": [1, 0, 0, -1],
        "phi+": [1, 0, 0, 1],
    }
    try:
        amps = np.array(table[name], dtype=complex) / np.sqrt(2)
    except KeyError:
        raise ValueError(f"unknown Bell state {name!r}") from None
    return PureState(amps, labels)


def maximally_mixed(labels: Sequence[str] | int = 1) -> DensityMatrix:
    if isinstance(labels, int):
        labels = _default_labels(labels)
    labels = tuple(labels)
    d = 2 ** len(labels)
    return DensityMatrix(np.eye(d) / d, labels)


def haar_state(rng: np.random.Generator, label: str = "q0") -> PureState:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PureState(v / np.linalg.norm(v), (label,))


def haar_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Haar-random unitary via QR with phase-fixed R diagonal."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_su2(rng: np.random.Generator) -> np.ndarray:
    u = haar_unitary(rng, 2)
    return u / np.sqrt(np.linalg.det(u))


def rotation(angle: float, axis: Sequence[float]) -> np.ndarray:
    """``exp(-i angle n.sigma / 2)`` for a unit axis ``n``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    ns = n[0] * SX + n[1] * SY + n[2] * SZ
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * ns


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=atol
    )


# -- composition and reduction -----------------------------------------------


def tensor(a, b):
    """Tensor product of two states of the same kind; labels concatenate."""
    labels = a.labels + b.labels
    if len(set(labels)) != len(labels):
        raise ValueError(f"label collision: {a.labels} and {b.labels}")
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), labels)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix), labels)
    raise TypeError("tensor() needs two PureState or two DensityMatrix values")


def tensor_all(states: Iterable):
    states = list(states)
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def as_density(x) -> DensityMatrix:
    return x.density() if isinstance(x, PureState) else x


def _positions(labels: tuple[str, ...], wanted: Iterable[str]) -> list[int]:
    pos = []
    for lab in wanted:
        if lab not in labels:
            raise KeyError(f"unknown qubit label {lab!r}; have {labels}")
        pos.append(labels.index(lab))
    return pos


def partial_trace(rho, keep: Iterable[str]) -> DensityMatrix:
    """Trace out every qubit not in ``keep``; kept qubits stay in register order."""
    rho = as_density(rho)
    keep_pos = sorted(set(_positions(rho.labels, keep)))
    n = rho.num_qubits
    drop_pos = [i for i in range(n) if i not in keep_pos]
    dk, dd = 2 ** len(keep_pos), 2 ** len(drop_pos)
    t = rho.matrix.reshape((2,) * (2 * n))
    perm = keep_pos + drop_pos
    t = t.transpose(perm + [p + n for p in perm]).reshape(dk, dd, dk, dd)
    reduced = np.einsum("ajbj->ab", t)
    return DensityMatrix(reduced, tuple(rho.labels[i] for i in keep_pos))


def reorder(state, labels: Sequence[str]):
    """Permute the register of a state into the given label order."""
    labels = tuple(labels)
    if sorted(labels) != sorted(state.labels):
        raise ValueError(f"{labels} is not a permutation of {state.labels}")
    n = state.num_qubits
    perm = _positions(state.labels, labels)
    if isinstance(state, PureState):
        amps = state.amplitudes.reshape((2,) * n).transpose(perm).reshape(-1)
        return PureState(amps, labels)
    mat = state.matrix.reshape((2,) * (2 * n))
    mat = mat.transpose(perm + [p + n for p in perm]).reshape(state.dim, state.dim)
    return DensityMatrix(mat, labels)


def apply_local(op: np.ndarray, vec: np.ndarray, positions: Sequence[int], n: int) -> np.ndarray:
    """Apply a ``2^k x 2^k`` operator to qubits ``positions`` of an n-qubit vector.

    Works on unnormalized vectors, which is why it takes raw arrays.
    """
    k = len(positions)
    op = np.asarray(op).reshape((2,) * (2 * k))
    t = np.asarray(vec).reshape((2,) * n)
    t = np.tensordot(op, t, axes=(list(range(k, 2 * k)), list(positions)))
    # tensordot puts the acted-on axes first
    rest = [i for i in range(n) if i not in positions]
    return t.transpose(np.argsort(list(positions) + rest)).reshape(-1)


def apply_unitary(state: PureState, u: np.ndarray, on: Sequence[str]) -> PureState:
    pos = _positions(state.labels, on)
    return PureState(apply_local(u, state.amplitudes, pos, state.num_qubits), state.labels)


def canonical_phase(vec: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    """Fix the global phase: the first (near-)largest amplitude becomes real positive."""
    vec = np.asarray(vec, dtype=complex)
    mags = np.abs(vec)
    idx = int(np.flatnonzero(mags >= mags.max() - atol)[0])
    return vec * (np.conj(vec[idx]) / mags[idx])


# -- comparison ---------------------------------------------------------------


def fidelity_pure(rho, target: PureState) -> float:
    """``<target|rho|target>``."""
    rho = as_density(rho)
    if rho.dim != target.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {target.dim}")
    v = target.amplitudes
    val = np.vdot(v, rho.matrix @ v)
    return float(val.real)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w[w < 1e-14 * max(w[-1], 1e-300)] = 0  # round-off would otherwise become ~1e-8 after sqrt
    return (v * np.sqrt(w)) @ v.conj().T


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    a = as_density(rho).matrix
    b = as_density(sigma).matrix
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    # nuclear norm of sqrt(a) sqrt(b); avoids square roots of round-off eigenvalues
    sv = np.linalg.svd(_psd_sqrt(a) @ _psd_sqrt(b), compute_uv=False)
    return float(np.sum(sv) ** 2)


def trace_distance(rho, sigma) -> float:
    a = as_density(rho).matrix
    b = as_density(sigma).matrix
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a - b))))


# -- Pauli algebra -------------------------------------------------------------


def pauli_string(indices: Sequence[int]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for i in indices:
        if i not in (0, 1, 2, 3):
            raise ValueError(f"Pauli index {i} out of range 0..3")
        out = np.kron(out, PAULIS[i])
    return out


def pauli_expectation(rho, ops: Sequence[int]) -> float:
    """``Tr[(sigma_i1 x sigma_i2 x ...) rho]`` with one index per qubit."""
    rho = as_density(rho)
    if len(ops) != rho.num_qubits:
        raise ValueError(f"need {rho.num_qubits} Pauli indices, got {len(ops)}")
    return float(np.trace(pauli_string(ops) @ rho.matrix).real)


def to_bloch(rho) -> BlochVector:
    rho = as_density(rho)
    if rho.num_qubits != 1:
        raise ValueError("Bloch representation needs a single-qubit state")
    return BlochVector([pauli_expectation(rho, [i]) for i in (1, 2, 3)])


def from_bloch(r, label: str = "q0") -> DensityMatrix:
    r = r.r if isinstance(r, BlochVector) else np.asarray(r, dtype=float)
    mat = 0.5 * (I2 + r[0] * SX + r[1] * SY + r[2] * SZ)
    return DensityMatrix(mat, (label,))
