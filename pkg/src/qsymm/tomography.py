"""Entanglement-assisted process tomography of a single-qubit map.

One half (``B``) of a two-qubit probe goes through the unknown channel. With
correlation matrices ``C_ij = Tr[(sigma_i x sigma_j) rho]`` taken before and
after, the transfer matrix follows from ``M^T = C^-1 C'``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, PauliTransferMatrix, apply_channel, kraus_to_ptm
from .qcore import DensityMatrix, as_density, pauli_expectation

MAX_CONDITION = 1e6
DEFAULT_FIDELITY_SAMPLES = 100_000


class ReconstructionError(ValueError):
    """Correlation matrix of the probe is singular or too ill-conditioned."""


@dataclass(frozen=True)
class CorrelationMatrix:
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.shape != (4, 4):
            raise ValueError(f"correlation matrix must be 4x4, got {c.shape}")
        if abs(c[0, 0] - 1) > 1e-9:
            raise ValueError(f"c_00 must be 1, got {c[0, 0]}")
        if np.any(np.abs(c) > 1 + 1e-9):
            raise ValueError("correlation entries must lie in [-1, 1]")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)


def _generator(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def correlation_matrix(rho, shots: int | None = None, seed=0) -> CorrelationMatrix:
    """Exact correlations, or ``shots`` +/-1 outcomes averaged per Pauli setting."""
    rho = as_density(rho)
    if rho.num_qubits != 2:
        raise ValueError("correlation matrices need a two-qubit state")
    exact = np.array([[pauli_expectation(rho, (i, j)) for j in range(4)] for i in range(4)])
    if shots is None:
        return CorrelationMatrix(exact)
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    rng = _generator(seed)
    p_plus = np.clip((1 + exact) / 2, 0, 1)
    ups = rng.binomial(shots, p_plus)
    sampled = 2 * ups / shots - 1
    sampled[0, 0] = 1.0
    return CorrelationMatrix(sampled)


def condition_number(c: CorrelationMatrix) -> float:
    return float(np.linalg.cond(c.c))


def eaqpt_reconstruct(c: CorrelationMatrix, c_prime: CorrelationMatrix) -> PauliTransferMatrix:
    """``M = (C^-1 C')^T``. Raises ``ReconstructionError`` when ``cond(C) > 1e6``."""
    cond = condition_number(c)
    if not math.isfinite(cond) or cond > MAX_CONDITION:
        raise ReconstructionError(f"probe correlation matrix is singular (condition number {cond:.3g})")
    return PauliTransferMatrix(np.linalg.solve(c.c, c_prime.c).T)


# -- map fidelity ----------------------------------------------------------------------


@dataclass(frozen=True)
class MapFidelity:
    value: float
    stderr: float
    samples: int


def _as_ptm(x) -> np.ndarray:
    if isinstance(x, KrausChannel):
        return kraus_to_ptm(x).m
    if isinstance(x, PauliTransferMatrix):
        return x.m
    return PauliTransferMatrix(x).m


def sphere_samples(samples: int, seed=0) -> np.ndarray:
    """Uniform points on the Bloch sphere (Haar-random pure qubits)."""
    v = _generator(seed).normal(size=(samples, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def bloch_fidelity(r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Uhlmann fidelity of qubit states given by Bloch vectors, row-wise.

    ``(1 + r.s + sqrt((1-|r|^2)(1-|s|^2))) / 2``; the root is clipped at zero so
    vectors just outside the ball (noisy reconstructions) count as pure.
    """
    r, s = np.atleast_2d(r), np.atleast_2d(s)
    dot = np.sum(r * s, axis=1)
    mix = (1 - np.sum(r * r, axis=1)) * (1 - np.sum(s * s, axis=1))
    return (1 + dot + np.sqrt(np.clip(mix, 0, None))) / 2


def map_fidelity(e, l, samples: int = DEFAULT_FIDELITY_SAMPLES, seed=0) -> MapFidelity:
    """Haar average over pure inputs of the state fidelity between the two outputs."""
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    me, ml = _as_ptm(e), _as_ptm(l)
    r = sphere_samples(samples, seed)
    aug = np.hstack([np.ones((samples, 1)), r])
    out_e = (aug @ me.T)[:, 1:]
    out_l = (aug @ ml.T)[:, 1:]
    f = bloch_fidelity(out_e, out_l)
    return MapFidelity(float(f.mean()), float(f.std(ddof=1) / math.sqrt(samples)), samples)


# -- full pipeline ------------------------------------------------------------------------


@dataclass(frozen=True)
class TomographyRun:
    input_state: DensityMatrix
    channel_under_test: KrausChannel
    shots: int | None = None  # None: exact statistics
    seed: int = 0
    target: KrausChannel | None = None
    fidelity_samples: int = DEFAULT_FIDELITY_SAMPLES

    def __post_init__(self):
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if as_density(self.input_state).num_qubits != 2:
            raise ValueError("the probe must be a two-qubit state")


@dataclass(frozen=True)
class EaqptResult:
    ptm: PauliTransferMatrix
    fidelity: MapFidelity | None
    condition_number: float
    c: CorrelationMatrix
    c_prime: CorrelationMatrix

    def to_json(self) -> str:
        return json.dumps(
            {
                "ptm": [[float(x) for x in row] for row in self.ptm.m],
                "condition_number": self.condition_number,
                "fidelity": None if self.fidelity is None else self.fidelity.value,
                "fidelity_stderr": None if self.fidelity is None else self.fidelity.stderr,
            },
            sort_keys=True,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "c0", "c1", "c2", "c3"])
        for i, row in enumerate(self.ptm.m):
            w.writerow([i] + [repr(float(x)) for x in row])
        w.writerow(["condition_number", repr(self.condition_number)])
        if self.fidelity is not None:
            w.writerow(["fidelity", repr(self.fidelity.value), "stderr", repr(self.fidelity.stderr)])
        return buf.getvalue()


def run_eaqpt(run: TomographyRun) -> EaqptResult:
    rho = as_density(run.input_state)
    s_before, s_after, s_fid = np.random.SeedSequence(run.seed).spawn(3)
    rho_out = apply_channel(run.channel_under_test, rho, on=rho.labels[1])
    c = correlation_matrix(rho, run.shots, np.random.default_rng(s_before))
    c_prime = correlation_matrix(rho_out, run.shots, np.random.default_rng(s_after))
    ptm = eaqpt_reconstruct(c, c_prime)
    fid = None
    if run.target is not None:
        fid = map_fidelity(run.target, ptm, run.fidelity_samples, np.random.default_rng(s_fid))
    return EaqptResult(ptm, fid, condition_number(c), c, c_prime)
