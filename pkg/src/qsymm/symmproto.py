"""Projective symmetrization protocols on two qubits.

Alice projects her input qubit ``S`` and ancilla ``A`` onto their symmetric
subspace. Depending on what ``A`` is correlated with this yields

* 1->2 cloning at Alice plus a universal NOT teleported to Bob (``A`` half of a
  singlet shared with ``B``),
* plain cloning (``A`` maximally mixed),
* two-qubit purification (``S`` and ``A`` equally oriented mixed states),
* teleportation of an optimal anti-unitary map (singlet rotated by ``U``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channels
from .qcore import (
    SY,
    DensityMatrix,
    PureState,
    apply_local,
    bell_state,
    canonical_phase,
    fidelity_pure,
    is_unitary,
    maximally_mixed,
    orthogonal,
    partial_trace,
    tensor,
)


@dataclass(frozen=True)
class ProtocolOutcome:
    success_probability: float
    post_state: PureState | DensityMatrix
    reduced: dict = field(default_factory=dict)
    fidelities: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PurificationInput:
    lambda_S: float
    lambda_A: float
    phi: PureState

    def __post_init__(self):
        for name in ("lambda_S", "lambda_A"):
            lam = getattr(self, name)
            if not 0 <= lam <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {lam}")
        if self.phi.num_qubits != 1:
            raise ValueError("phi must be a single-qubit state")


@dataclass(frozen=True)
class AntiUnitarySpec:
    """Anti-unitary ``A = U_A K``; also ``A = U_A sigma_Y A_NOT`` with ``A_NOT = sigma_Y K``."""

    U_A: np.ndarray

    def __post_init__(self):
        u = np.array(self.U_A, dtype=complex)
        if not is_unitary(u) or u.shape != (2, 2):
            raise ValueError("U_A must be a 2x2 unitary")
        u.setflags(write=False)
        object.__setattr__(self, "U_A", u)

    def image(self, phi: PureState) -> PureState:
        """``A|phi>`` through the NOT factorization."""
        not_phi = SY @ phi.amplitudes.conj()
        return PureState(self.U_A @ SY @ not_phi, phi.labels)


def _single_qubit(phi) -> PureState:
    if not isinstance(phi, PureState):
        phi = PureState(phi)
    if phi.num_qubits != 1:
        raise ValueError("input must be a single-qubit pure state")
    return phi


def symmetric_projector_2q() -> np.ndarray:
    """``I - |psi-><psi-|`` on two qubits."""
    s = bell_state("psi-").amplitudes
    return np.eye(4, dtype=complex) - np.outer(s, s.conj())


def _project_pure(omega: PureState, on: tuple[str, str]) -> tuple[float, PureState]:
    pos = [omega.labels.index(x) for x in on]
    projected = apply_local(symmetric_projector_2q(), omega.amplitudes, pos, omega.num_qubits)
    p = float(np.vdot(projected, projected).real)
    return p, PureState(canonical_phase(projected / np.sqrt(p)), omega.labels)


def _singlet_run(phi: PureState, bob_unitary: np.ndarray | None = None) -> ProtocolOutcome:
    phi = _single_qubit(phi).relabel(("S",))
    pair = bell_state("psi-", ("A", "B"))
    if bob_unitary is not None:
        pair = PureState(apply_local(bob_unitary, pair.amplitudes, [1], 2), pair.labels)
    p, post = _project_pure(tensor(phi, pair), ("S", "A"))
    reduced = {lab: partial_trace(post, [lab]) for lab in ("S", "A", "B")}
    flipped = orthogonal(phi)
    return ProtocolOutcome(
        success_probability=p,
        post_state=post,
        reduced=reduced,
        fidelities={
            "clone": fidelity_pure(reduced["S"], phi),
            "unot": fidelity_pure(reduced["B"], flipped.relabel(("B",))),
        },
    )


def run_cloning_teleunot(phi) -> ProtocolOutcome:
    """1->2 cloning at Alice with a Tele-UNOT copy at Bob, from a shared singlet."""
    return _singlet_run(phi)


def run_cloning_mixed_ancilla(phi) -> ProtocolOutcome:
    """Symmetrize ``|phi><phi| x I/2``; cloning without any entanglement."""
    phi = _single_qubit(phi).relabel(("S",))
    rho = tensor(phi.density(), maximally_mixed(("A",)))
    return _project_mixed(rho, phi, {})


def _project_mixed(rho: DensityMatrix, phi: PureState, extra: dict) -> ProtocolOutcome:
    proj = symmetric_projector_2q()
    out = proj @ rho.matrix @ proj
    p = float(np.trace(out).real)
    post = DensityMatrix(out / p, rho.labels)
    reduced = {lab: partial_trace(post, [lab]) for lab in rho.labels}
    fids = {"clone": fidelity_pure(reduced["S"], phi)}
    fids.update(extra)
    return ProtocolOutcome(p, post, reduced, fids)


def _oriented(phi: PureState, lam: float, label: str) -> DensityMatrix:
    perp = orthogonal(phi)
    mat = (1 + lam) / 2 * np.outer(phi.amplitudes, phi.amplitudes.conj()) + (1 - lam) / 2 * np.outer(
        perp.amplitudes, perp.amplitudes.conj()
    )
    return DensityMatrix(mat, (label,))


def run_purification(inp: PurificationInput) -> ProtocolOutcome:
    """Symmetrize two equally oriented qubits with Bloch lengths ``lambda_S, lambda_A``.

    Reported figures: ``f_in`` (mean input fidelity), ``f_out`` (output
    fidelity, measured from the projected state) and ``lambda_out`` (output
    Bloch length along ``phi``).
    """
    phi = inp.phi.relabel(("S",))
    rho = tensor(_oriented(phi, inp.lambda_S, "S"), _oriented(phi, inp.lambda_A, "A"))
    f_in = (1 + (inp.lambda_S + inp.lambda_A) / 2) / 2
    out = _project_mixed(rho, phi, {"f_in": f_in})
    f_out = out.fidelities["clone"]
    out.fidelities["f_out"] = f_out
    out.fidelities["lambda_out"] = 2 * f_out - 1
    return out


def purification_closed_form(lambda_S: float, lambda_A: float) -> dict:
    """Success probability and output quality predicted in closed form."""
    p = (3 + lambda_A * lambda_S) / 4
    delta = (lambda_A + lambda_S) / 2
    return {
        "p": p,
        "delta": delta,
        "lambda_out": delta / p,
        "f_in": (1 + delta) / 2,
        "f_out": (1 + delta / p) / 2,
    }


# -- anti-unitary maps ---------------------------------------------------------


def antiunitary_decompose(v: np.ndarray, conjugate: bool = True) -> AntiUnitarySpec:
    """Factor the anti-unitary ``V K`` as ``U_A sigma_Y (sigma_Y K)``; ``U_A = V``."""
    if not conjugate:
        raise ValueError("operator is unitary, not anti-unitary (conjugate flag unset)")
    return AntiUnitarySpec(v)


def optimal_antiunitary_map(spec: AntiUnitarySpec, rho) -> DensityMatrix:
    """``U_A sigma_Y E_UNOT(rho) sigma_Y U_A^dagger``.

    Defined on pure states; on mixed inputs the Kraus form gives its linear
    extension.
    """
    if isinstance(rho, PureState):
        rho = rho.density()
    if rho.num_qubits != 1:
        raise ValueError("anti-unitary maps here act on one qubit")
    ch = channels.conjugated(channels.unot_channel(), spec.U_A @ SY)
    return channels.apply_channel(ch, rho)


def programmable_teleport(phi, u: np.ndarray) -> ProtocolOutcome:
    """Tele-UNOT with the shared pair ``(I x U^dagger)|psi->``.

    Bob ends with ``U^dagger E_UNOT(rho_S) U``, the optimal approximation of the
    anti-unitary ``U^dagger sigma_Y K``. ``fidelities["bob"]`` is measured
    against that map's ideal image of ``phi``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("U must be a 2x2 unitary")
    out = _singlet_run(phi, bob_unitary=u.conj().T)
    phi = _single_qubit(phi)
    target = antiunitary_decompose(u.conj().T @ SY).image(phi).relabel(("B",))
    del out.fidelities["unot"]
    out.fidelities["bob"] = fidelity_pure(out.reduced["B"], target)
    return out
