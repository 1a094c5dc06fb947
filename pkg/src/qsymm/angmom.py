"""Angular-momentum treatment of N->M cloning and the N->(M-N) universal NOT.

Alice holds ``N`` copies of ``|phi>`` plus one half of each of ``M-N`` pairs;
Bob holds the other halves. Alice projects her ``M`` qubits onto their
symmetric subspace. In spin language the output is

    sum_k b_k |M/2, M/2-k>_Alice |(M-N)/2, -(M-N)/2+k>_Bob

with ``b_k`` a Clebsch-Gordan coefficient. ``run_nm_protocol`` does the same
thing by brute force on the full ``2M-N`` qubit register, which is the oracle
for every closed form in this module.

Register layout: ``[S1..SN, A1..A(M-N), B1..B(M-N)]``; pairs are ``(Ai, Bi)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .qcore import (
    DensityMatrix,
    PureState,
    apply_local,
    bell_state,
    canonical_phase,
    conjugate,
    orthogonal,
)

MAX_PROJECTOR_QUBITS = 10
MAX_REGISTER_QUBITS = 14


# -- spins and Clebsch-Gordan coefficients ---------------------------------------


def _half_integer(x, name: str) -> Fraction:
    f = Fraction(x).limit_denominator(4) if isinstance(x, float) else Fraction(x)
    if (2 * f).denominator != 1 or abs(float(f) - float(x)) > 1e-12:
        raise ValueError(f"{name}={x!r} is not a half-integer")
    return f


@dataclass(frozen=True)
class SpinState:
    j: Fraction
    m: Fraction

    def __post_init__(self):
        j = _half_integer(self.j, "j")
        m = _half_integer(self.m, "m")
        if j < 0 or abs(m) > j or (j - m).denominator != 1:
            raise ValueError(f"invalid spin state |j={j}, m={m}>")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "m", m)


def _int(f: Fraction) -> int:
    if f.denominator != 1:
        raise ValueError(f"{f} is not an integer")
    return int(f)


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """``<j1 m1; j2 m2 | J M>`` in the Condon-Shortley convention (Racah formula).

    All factorials and the alternating sum are exact rationals; only the final
    square root is taken in floating point.
    """
    j1, m1 = _half_integer(j1, "j1"), _half_integer(m1, "m1")
    j2, m2 = _half_integer(j2, "j2"), _half_integer(m2, "m2")
    J, M = _half_integer(J, "J"), _half_integer(M, "M")
    for j, m in ((j1, m1), (j2, m2), (J, M)):
        SpinState(j, m)
    if not abs(j1 - j2) <= J <= j1 + j2 or (j1 + j2 + J).denominator != 1:
        raise ValueError(f"triangle condition fails for ({j1}, {j2}, {J})")
    if m1 + m2 != M:
        raise ValueError(f"m1 + m2 = {m1 + m2} differs from M = {M}")

    fac = math.factorial
    pre = Fraction(
        (_int(2 * J) + 1)
        * fac(_int(J + j1 - j2))
        * fac(_int(J - j1 + j2))
        * fac(_int(j1 + j2 - J)),
        fac(_int(j1 + j2 + J + 1)),
    )
    pre *= (
        fac(_int(J + M))
        * fac(_int(J - M))
        * fac(_int(j1 - m1))
        * fac(_int(j1 + m1))
        * fac(_int(j2 - m2))
        * fac(_int(j2 + m2))
    )
    total = Fraction(0)
    for k in range(0, _int(j1 + j2 - J) + 1):
        args = (
            k,
            j1 + j2 - J - k,
            j1 - m1 - k,
            j2 + m2 - k,
            J - j2 + m1 + k,
            J - j1 - m2 + k,
        )
        if any(a < 0 for a in args):
            continue
        den = 1
        for a in args:
            den *= fac(_int(Fraction(a)))
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    return math.copysign(math.sqrt(pre * total * total), total)


# -- cloning parameters ------------------------------------------------------------


@dataclass(frozen=True)
class CloningSpec:
    """``N`` identical inputs, ``M`` outputs. ``M == N`` is the trivial pass-through."""

    N: int
    M: int

    def __post_init__(self):
        if self.N < 1 or self.M < self.N:
            raise ValueError(f"need 1 <= N <= M, got N={self.N}, M={self.M}")

    @property
    def beta(self) -> float:
        return self.N / self.M

    @property
    def pairs(self) -> int:
        return self.M - self.N


def _bk_squared(spec: CloningSpec, k: int) -> Fraction:
    N, M = spec.N, spec.M
    if not 0 <= k <= M - N:
        raise ValueError(f"k={k} outside 0..{M - N}")
    f = math.factorial
    return Fraction((N + 1) * f(M - N) * f(M - k), (M + 1) * f(M) * f(M - N - k))


def bk_coefficient(spec: CloningSpec, k: int) -> float:
    """``(-1)^k sqrt((N+1)/(M+1)) sqrt((M-N)! (M-k)! / (M! (M-N-k)!))``."""
    return (-1) ** k * math.sqrt(_bk_squared(spec, k))


def bk_from_cg(spec: CloningSpec, k: int) -> float:
    """The same coefficient read off as ``<M/2, M/2-k; (M-N)/2, -(M-N)/2+k | N/2, N/2>``."""
    if not 0 <= k <= spec.pairs:
        raise ValueError(f"k={k} outside 0..{spec.pairs}")
    N, M = spec.N, spec.M
    h = Fraction(1, 2)
    return clebsch_gordan(M * h, M * h - k, (M - N) * h, -(M - N) * h + k, N * h, N * h)


def b_vector(spec: CloningSpec) -> np.ndarray:
    return np.array([bk_coefficient(spec, k) for k in range(spec.pairs + 1)])


class ClosedForm(NamedTuple):
    clone: float
    unot: float  # nan when M == N (nothing to flip)
    success_probability: float
    clone_sum: float
    unot_sum: float


def closed_form_fidelities(spec: CloningSpec) -> ClosedForm:
    """Fidelities and success probability, both as ``b_k`` sums and in closed form."""
    N, M = spec.N, spec.M
    b2 = [float(_bk_squared(spec, k)) for k in range(spec.pairs + 1)]
    clone_sum = sum(w * (M - k) / M for k, w in enumerate(b2))
    if spec.pairs:
        unot_sum = sum(w * (M - N - k) / (M - N) for k, w in enumerate(b2))
        unot = (N + 1) / (N + 2)
    else:
        unot_sum = unot = math.nan
    clone = (N + 1 + spec.beta) / (N + 2)
    p = (1 + M) / (1 + N) / 2**spec.pairs
    return ClosedForm(clone, unot, p, clone_sum, unot_sum)


# -- symmetric subspace ---------------------------------------------------------


def dicke_basis(n: int) -> np.ndarray:
    """``2^n x (n+1)`` real matrix; column ``w`` is the Dicke state with ``w`` ones.

    Column ``w`` is ``|n/2, n/2 - w>`` when ``|0>`` is spin up.
    """
    weights = np.array([bin(x).count("1") for x in range(2**n)])
    d = np.zeros((2**n, n + 1))
    for w in range(n + 1):
        d[weights == w, w] = 1 / math.sqrt(math.comb(n, w))
    return d


def _local_basis(phi: PureState) -> np.ndarray:
    """Unitary with columns ``phi`` and ``phi_perp`` (determinant 1)."""
    return np.column_stack([phi.amplitudes, orthogonal(phi).amplitudes])


def _apply_all(u: np.ndarray, vec: np.ndarray, n: int, positions=None) -> np.ndarray:
    for pos in range(n) if positions is None else positions:
        vec = apply_local(u, vec, [pos], n)
    return vec


def dicke_state(total: int, p: int, phi: PureState, labels=None) -> PureState:
    """Symmetric combination of ``p`` qubits in ``phi`` and ``total - p`` in ``phi_perp``."""
    if not 0 <= p <= total:
        raise ValueError(f"p={p} outside 0..{total}")
    if phi.num_qubits != 1:
        raise ValueError("phi must be a single-qubit state")
    vec = dicke_basis(total)[:, total - p].astype(complex)
    return PureState(_apply_all(_local_basis(phi), vec, total), labels)


def symmetric_projector_m(M: int) -> np.ndarray:
    """Dense ``sum_k |M/2, M/2-k><M/2, M/2-k|``."""
    if not 1 <= M <= MAX_PROJECTOR_QUBITS:
        raise ValueError(f"M={M} outside 1..{MAX_PROJECTOR_QUBITS} for a dense projector")
    d = dicke_basis(M)
    return d @ d.T


def symmetric_projector_perm(M: int) -> np.ndarray:
    """``(1/M!) sum_pi P_pi``: the permutation-average construction."""
    if not 1 <= M <= 8:
        raise ValueError(f"M={M} outside 1..8 for the permutation average")
    dim = 2**M
    bits = (np.arange(dim)[:, None] >> np.arange(M - 1, -1, -1)) & 1
    weights = 1 << np.arange(M - 1, -1, -1)
    out = np.zeros((dim, dim))
    perms = list(itertools.permutations(range(M)))
    for perm in perms:
        out[bits[:, list(perm)] @ weights, np.arange(dim)] += 1
    return out / len(perms)


def project_symmetric(vec: np.ndarray, first: int, n: int) -> np.ndarray:
    """Apply the symmetric projector on the first ``first`` qubits of an n-qubit vector.

    Uses the rank-``first+1`` Dicke factor, so it never forms the dense projector.
    """
    d = dicke_basis(first)
    t = np.asarray(vec).reshape(2**first, 2 ** (n - first))
    return (d @ (d.T @ t)).reshape(-1)


def project_symmetric_last(vec: np.ndarray, last: int, n: int) -> np.ndarray:
    d = dicke_basis(last)
    t = np.asarray(vec).reshape(2 ** (n - last), 2**last)
    return ((t @ d) @ d.T).reshape(-1)


# -- brute-force protocol -------------------------------------------------------------

PROGRAMS = {"singlet": "psi-", "triplet": "phi+"}


@dataclass(frozen=True)
class NMOutcome:
    spec: CloningSpec
    program: str
    success_probability: float
    b: np.ndarray
    clone_fidelity: float
    unot_fidelity: float  # against phi_perp (singlet) or conj(phi) (triplet)
    reduced_clone: DensityMatrix
    reduced_anticlone: DensityMatrix
    post_state: PureState


def register_labels(spec: CloningSpec) -> tuple[str, ...]:
    r = range(1, spec.pairs + 1)
    return (
        tuple(f"S{i}" for i in range(1, spec.N + 1))
        + tuple(f"A{i}" for i in r)
        + tuple(f"B{i}" for i in r)
    )


def initial_register(spec: CloningSpec, phi: PureState, program: str = "singlet") -> np.ndarray:
    """``|phi>^N |pair>^(M-N)`` laid out as ``[S.., A.., B..]``."""
    if program not in PROGRAMS:
        raise ValueError(f"program must be one of {sorted(PROGRAMS)}, got {program!r}")
    N, d = spec.N, spec.pairs
    pair = bell_state(PROGRAMS[program]).amplitudes
    vec = np.ones(1, dtype=complex)
    for _ in range(N):
        vec = np.kron(vec, phi.amplitudes)
    for _ in range(d):
        vec = np.kron(vec, pair)
    # current order S.., A1 B1, A2 B2, ...
    order = list(range(N)) + [N + 2 * i for i in range(d)] + [N + 2 * i + 1 for i in range(d)]
    n = N + 2 * d
    return vec.reshape((2,) * n).transpose(order).reshape(-1)


def _reduce_one(vec: np.ndarray, pos: int, n: int) -> np.ndarray:
    t = np.moveaxis(vec.reshape((2,) * n), pos, 0).reshape(2, -1)
    return t @ t.conj().T


def run_nm_protocol(spec: CloningSpec, phi: PureState, program: str = "singlet") -> NMOutcome:
    """Brute-force symmetric projection on the full register."""
    if spec.pairs == 0:
        raise ValueError("M == N: nothing to clone")
    n = spec.N + 2 * spec.pairs
    if n > MAX_REGISTER_QUBITS:
        raise ValueError(f"register of {n} qubits exceeds the dense limit {MAX_REGISTER_QUBITS}")
    if phi.num_qubits != 1:
        raise ValueError("phi must be a single-qubit state")
    omega = initial_register(spec, phi, program)
    out = project_symmetric(omega, spec.M, n)
    p = float(np.vdot(out, out).real)
    out = canonical_phase(out / math.sqrt(p))
    labels = register_labels(spec)
    rho_c = DensityMatrix(_reduce_one(out, 0, n), ("S1",))
    rho_b = DensityMatrix(_reduce_one(out, spec.M, n), ("B1",))
    flip_target = orthogonal(phi) if program == "singlet" else conjugate(phi)
    fc = float(np.vdot(phi.amplitudes, rho_c.matrix @ phi.amplitudes).real)
    fu = float(np.vdot(flip_target.amplitudes, rho_b.matrix @ flip_target.amplitudes).real)
    return NMOutcome(
        spec, program, p, b_vector(spec), fc, fu, rho_c, rho_b, PureState(out, labels)
    )


def reduced_mixture(p: int, q: int, phi: PureState) -> np.ndarray:
    """``p/(p+q) |phi><phi| + q/(p+q) |phi_perp><phi_perp|``."""
    a, b = phi.amplitudes, orthogonal(phi).amplitudes
    return (p * np.outer(a, a.conj()) + q * np.outer(b, b.conj())) / (p + q)


def expected_reduced(spec: CloningSpec, phi: PureState) -> tuple[np.ndarray, np.ndarray]:
    """Clone and anticlone single-qubit states predicted from ``b_k`` (singlet program)."""
    M, d = spec.M, spec.pairs
    b2 = b_vector(spec) ** 2
    clone = sum(w * reduced_mixture(M - k, k, phi) for k, w in enumerate(b2))
    anti = sum(w * reduced_mixture(k, d - k, phi) for k, w in enumerate(b2))
    return clone, anti


def expected_post_state(spec: CloningSpec, phi: PureState) -> np.ndarray:
    """``sum_k b_k |{(M-k) phi; k phi_perp}>_Alice |{k phi; (M-N-k) phi_perp}>_Bob``."""
    M, d = spec.M, spec.pairs
    vec = 0
    for k in range(d + 1):
        alice = dicke_state(M, M - k, phi).amplitudes
        bob = dicke_state(d, k, phi).amplitudes
        vec = vec + bk_coefficient(spec, k) * np.kron(alice, bob)
    return canonical_phase(vec)


def apply_collective(u: np.ndarray, vec: np.ndarray, n: int, positions=None) -> np.ndarray:
    """``u`` on every listed qubit (all qubits by default)."""
    return _apply_all(np.asarray(u, dtype=complex), np.asarray(vec, dtype=complex), n, positions)


def transposed_target(phi: PureState) -> PureState:
    """Image of ``phi`` under the transpose, i.e. ``conj(phi)``; Bob's triplet-program target."""
    return conjugate(phi)
