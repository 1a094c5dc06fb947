"""Single-qubit CP maps, Pauli transfer matrices, partial transpose and PPT tests.

Also carries the structural physical approximation (SPA) of the partial
transpose, by default with convex weights ``1/3`` on
``UNOT_A x DEP_B`` and ``2/3`` on ``id_A x TR_B``. With these weights the
product state ``|00>`` gives a smallest output eigenvalue of ``1/9``, below the
``2/9`` entanglement threshold, so the syndrome fires on a separable state.
``spa_map`` takes the weights and threshold as arguments so this can be probed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import (
    ATOL,
    I2,
    PAULIS,
    SX,
    SY,
    SZ,
    DensityMatrix,
    as_density,
    _positions,
)

PPT_THRESHOLD = -1e-10
SPA_THRESHOLD = 2 / 9


@dataclass(frozen=True)
class KrausChannel:
    """``rho -> sum_i w_i K_i rho K_i^dagger`` on one qubit."""

    terms: tuple

    def __post_init__(self):
        terms = []
        for w, op in self.terms:
            op = np.array(op, dtype=complex)
            if op.shape != (2, 2):
                raise ValueError(f"Kraus operator must be 2x2, got {op.shape}")
            if w < 0:
                raise ValueError(f"negative Kraus weight {w}")
            op.setflags(write=False)
            terms.append((float(w), op))
        object.__setattr__(self, "terms", tuple(terms))
        total = sum(w * op.conj().T @ op for w, op in terms)
        if not np.allclose(total, I2, rtol=0, atol=ATOL):
            raise ValueError("Kraus terms are not trace preserving")

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Composition: apply ``self`` first, then ``other``."""
        return KrausChannel(
            tuple((w2 * w1, k2 @ k1) for w1, k1 in self.terms for w2, k2 in other.terms)
        )

    def to_json(self) -> str:
        def enc(z):
            return [z.real, z.imag] if z.imag else z.real

        return json.dumps(
            {"terms": [{"w": w, "op": [[enc(z) for z in row] for row in op]} for w, op in self.terms]}
        )

    @classmethod
    def from_json(cls, text: str) -> "KrausChannel":
        data = json.loads(text)

        def dec(z):
            return complex(*z) if isinstance(z, list) else complex(z)

        return cls(tuple((t["w"], [[dec(z) for z in row] for row in t["op"]]) for t in data["terms"]))


def identity_channel() -> KrausChannel:
    return KrausChannel(((1.0, I2),))


def transpose_channel() -> KrausChannel:
    """Optimal CP approximation of the transpose: equal mix of I, X, Z conjugations."""
    return KrausChannel(((1 / 3, I2), (1 / 3, SX), (1 / 3, SZ)))


def depolarizing_channel() -> KrausChannel:
    """Fully depolarizing: every input goes to ``I/2``."""
    return KrausChannel(tuple((0.25, p) for p in PAULIS))


def unot_channel() -> KrausChannel:
    """Optimal universal NOT: ``|phi><phi| -> 2/3 |phi_perp><phi_perp| + 1/3 |phi><phi|``."""
    return KrausChannel(((1 / 3, SX), (1 / 3, SY), (1 / 3, SZ)))


def conjugated(ch: KrausChannel, u: np.ndarray) -> KrausChannel:
    """``rho -> u ch(rho) u^dagger``."""
    u = np.asarray(u, dtype=complex)
    return KrausChannel(tuple((w, u @ k) for w, k in ch.terms))


NAMED_CHANNELS = {
    "identity": identity_channel,
    "tr": transpose_channel,
    "dep": depolarizing_channel,
    "unot": unot_channel,
}


def _embed(k: np.ndarray, pos: int, n: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**pos), k), np.eye(2 ** (n - pos - 1)))


def _kraus_sum(ch: KrausChannel, mat: np.ndarray, pos: int, n: int) -> np.ndarray:
    out = np.zeros_like(mat, dtype=complex)
    for w, k in ch.terms:
        full = _embed(k, pos, n)
        out += w * full @ mat @ full.conj().T
    return out


def apply_channel(ch: KrausChannel, rho, on: str | None = None) -> DensityMatrix:
    """Apply ``ch`` to ``rho``; for registers of several qubits name the target with ``on``."""
    rho = as_density(rho)
    if on is None:
        if rho.num_qubits != 1:
            raise ValueError("multi-qubit input: pass on=<label> to choose the target qubit")
        pos = 0
    else:
        (pos,) = _positions(rho.labels, [on])
    return DensityMatrix(_kraus_sum(ch, rho.matrix, pos, rho.num_qubits), rho.labels)


def apply_linear(ch: KrausChannel, mat: np.ndarray) -> np.ndarray:
    """Kraus action on an arbitrary 2x2 matrix (no positivity checks)."""
    return _kraus_sum(ch, np.asarray(mat, dtype=complex), 0, 1)


# -- Pauli transfer matrices ---------------------------------------------------


@dataclass(frozen=True)
class PauliTransferMatrix:
    """Real 4x4 matrix acting on the column ``(1, rx, ry, rz)``."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"PTM must be 4x4, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def is_trace_preserving(self) -> bool:
        return bool(np.allclose(self.m[0], [1, 0, 0, 0], rtol=0, atol=ATOL))

    @property
    def shift(self) -> np.ndarray:
        return self.m[1:, 0]

    @property
    def block(self) -> np.ndarray:
        return self.m[1:, 1:]

    def __matmul__(self, other: "PauliTransferMatrix") -> "PauliTransferMatrix":
        return PauliTransferMatrix(self.m @ other.m)

    def to_json(self) -> str:
        return json.dumps([[float(x) for x in row] for row in self.m])

    @classmethod
    def from_json(cls, text: str) -> "PauliTransferMatrix":
        return cls(json.loads(text))

    def to_csv(self) -> str:
        return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in self.m)


def kraus_to_ptm(ch: KrausChannel) -> PauliTransferMatrix:
    m = np.empty((4, 4))
    for j, sj in enumerate(PAULIS):
        out = apply_linear(ch, sj)
        for i, si in enumerate(PAULIS):
            m[i, j] = 0.5 * np.trace(si @ out).real
    return PauliTransferMatrix(m)


def ptm_apply(m: PauliTransferMatrix, rho) -> DensityMatrix:
    rho = as_density(rho)
    if rho.num_qubits != 1:
        raise ValueError("PTM acts on single-qubit states")
    v = np.array([np.trace(p @ rho.matrix).real for p in PAULIS])
    w = m.m @ v
    mat = 0.5 * sum(c * p for c, p in zip(w, PAULIS))
    return DensityMatrix(mat, rho.labels)


# -- partial transpose and PPT ------------------------------------------------------


def partial_transpose(rho, side: str = "B") -> np.ndarray:
    """Transpose one factor of a two-qubit operator. The result need not be PSD."""
    mat = as_density(rho).matrix if not isinstance(rho, np.ndarray) else rho
    if mat.shape != (4, 4):
        raise ValueError(f"partial transpose needs a 4x4 two-qubit operator, got {mat.shape}")
    t = mat.reshape(2, 2, 2, 2)  # (a, b, a', b')
    if side == "B":
        t = t.transpose(0, 3, 2, 1)
    elif side == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return t.reshape(4, 4)


@dataclass(frozen=True)
class PptReport:
    eigenvalues: np.ndarray
    entangled: bool

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


def ppt_test(rho, side: str = "B") -> PptReport:
    evals = np.linalg.eigvalsh(partial_transpose(rho, side))
    return PptReport(evals, bool(evals[0] < PPT_THRESHOLD))


def werner_state(w: float, labels: Sequence[str] = ("A", "B")) -> DensityMatrix:
    """``w |psi-><psi-| + (1-w) I/4``."""
    if not 0 <= w <= 1:
        raise ValueError(f"Werner weight must lie in [0, 1], got {w}")
    s = np.array([0, 1, -1, 0]) / np.sqrt(2)
    return DensityMatrix(w * np.outer(s, s) + (1 - w) * np.eye(4) / 4, labels)


# -- structural physical approximation -----------------------------------------


@dataclass(frozen=True)
class SpaResult:
    output: DensityMatrix
    lambda_min: float
    syndrome: bool
    threshold: float


def spa_map(
    rho,
    weights: tuple[float, float] = (1 / 3, 2 / 3),
    threshold: float = SPA_THRESHOLD,
) -> SpaResult:
    """``w0 UNOT_A x DEP_B + w1 id_A x TR_B`` applied to a two-qubit state.

    ``syndrome`` is ``lambda_min <= threshold``. Default weights and threshold
    are the standard ones (see the module docstring for the known mismatch).
    """
    rho = as_density(rho)
    if rho.num_qubits != 2:
        raise ValueError("SPA map acts on two-qubit states")
    w0, w1 = weights
    if w0 < 0 or w1 < 0 or abs(w0 + w1 - 1) > ATOL:
        raise ValueError(f"weights must be a convex pair, got {weights}")
    a, b = rho.labels
    flipped = apply_channel(depolarizing_channel(), apply_channel(unot_channel(), rho, on=a), on=b)
    transposed = apply_channel(transpose_channel(), rho, on=b)
    out = DensityMatrix(w0 * flipped.matrix + w1 * transposed.matrix, rho.labels)
    lam = float(out.eigenvalues[0])
    return SpaResult(out, lam, lam <= threshold, threshold)


# -- stochastic realization -------------------------------------------------------


def sample_stochastic(
    ch: KrausChannel,
    rho,
    shots: int,
    seed: int | np.random.Generator = 0,
    on: str | None = None,
) -> DensityMatrix:
    """Empirical output of applying one randomly drawn Kraus branch per shot.

    Branch ``i`` is drawn with probability ``w_i Tr[K_i rho K_i^dagger]`` and
    contributes its normalized conditional state.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    rho = as_density(rho)
    if on is None:
        if rho.num_qubits != 1:
            raise ValueError("multi-qubit input: pass on=<label>")
        pos = 0
    else:
        (pos,) = _positions(rho.labels, [on])
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = rho.num_qubits
    branches, probs = [], []
    for w, k in ch.terms:
        full = _embed(k, pos, n)
        out = w * full @ rho.matrix @ full.conj().T
        p = np.trace(out).real
        branches.append(out / p if p > 0 else out)
        probs.append(max(p, 0.0))
    probs = np.array(probs) / sum(probs)
    counts = np.bincount(rng.choice(len(probs), size=shots, p=probs), minlength=len(probs))
    mat = sum(c / shots * b for c, b in zip(counts, branches))
    return DensityMatrix(mat, rho.labels)
