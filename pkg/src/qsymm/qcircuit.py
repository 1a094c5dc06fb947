"""Gate-level network for the S/A symmetric projection.

Register order is ``(S, A, B, anc)``. The network is

1. EPR preparation on ``|1>_A |1>_B``: H(A), CNOT(A->B), giving ``|psi->_AB``;
2. box (1): CNOT(S->A), H(S), which sends the Bell basis of ``SA`` to the
   computational basis with all phases +1::

       |psi->  -> |11>    |psi+> -> |01>    |phi-> -> |10>    |phi+> -> |00>

3. Toffoli(S, A -> anc), flagging the singlet branch;
4. box (2) = inverse of box (1): H(S), CNOT(S->A);
5. measurement of ``anc`` in the computational basis.

Ancilla ``0`` leaves ``SAB`` in the symmetrized state (clones plus Tele-UNOT);
ancilla ``1`` leaves ``SA`` in the singlet and ``B`` holding ``|phi>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .qcore import (
    HADAMARD,
    SX,
    SY,
    SZ,
    PureState,
    apply_local,
    canonical_phase,
    ket,
    partial_trace,
    tensor,
)

REGISTER = ("S", "A", "B", "anc")
ANCILLA = "anc"

_ARITY = {"Hadamard": 1, "PauliX": 1, "PauliY": 1, "PauliZ": 1, "CNOT": 2, "Toffoli": 3}


def _controlled(u: np.ndarray, controls: int) -> np.ndarray:
    d = 2 ** (controls + 1)
    m = np.eye(d, dtype=complex)
    m[d - 2 :, d - 2 :] = u
    return m


_MATRICES = {
    "Hadamard": HADAMARD,
    "PauliX": SX,
    "PauliY": SY,
    "PauliZ": SZ,
    "CNOT": _controlled(SX, 1),
    "Toffoli": _controlled(SX, 2),
}


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(self.targets)
        if len(targets) != _ARITY[self.kind] or len(set(targets)) != len(targets):
            raise ValueError(f"{self.kind} needs {_ARITY[self.kind]} distinct targets, got {targets}")
        object.__setattr__(self, "targets", targets)

    @property
    def matrix(self) -> np.ndarray:
        return _MATRICES[self.kind]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "targets": list(self.targets)}


@dataclass(frozen=True)
class Network:
    gates: tuple[Gate, ...]
    measure: tuple[str, str] = (ANCILLA, "Z")
    register: tuple[str, ...] = REGISTER

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        known = set(self.register)
        for g in self.gates:
            missing = set(g.targets) - known
            if missing:
                raise ValueError(f"gate {g} acts on unknown qubits {sorted(missing)}")
        if self.measure[0] not in known:
            raise ValueError(f"measured qubit {self.measure[0]!r} is not in the register")
        if self.measure[1] != "Z":
            raise ValueError("only computational-basis (Z) measurement is supported")

    def to_json(self) -> str:
        return json.dumps(
            {
                "register": list(self.register),
                "gates": [g.to_dict() for g in self.gates],
                "measure": {"label": self.measure[0], "basis": self.measure[1]},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Network":
        data = json.loads(text)
        if isinstance(data, list):
            data = {"gates": data}
        gates = tuple(Gate(g["kind"], tuple(g["targets"])) for g in data["gates"])
        m = data.get("measure", {"label": ANCILLA, "basis": "Z"})
        return cls(gates, (m["label"], m["basis"]), tuple(data.get("register", REGISTER)))


def gates_to_json(gates) -> str:
    return json.dumps([g.to_dict() for g in gates])


def gates_from_json(text: str) -> list[Gate]:
    return [Gate(g["kind"], tuple(g["targets"])) for g in json.loads(text)]


def run_gates(gates, state: PureState) -> PureState:
    amps = state.amplitudes
    n = state.num_qubits
    for g in gates:
        pos = [state.labels.index(t) for t in g.targets]
        amps = apply_local(g.matrix, amps, pos, n)
    return PureState(amps, state.labels)


def epr_prepare(a: str = "A", b: str = "B") -> list[Gate]:
    """Gates turning ``|1>_a |1>_b`` into the singlet."""
    return [Gate("Hadamard", (a,)), Gate("CNOT", (a, b))]


def bell_rotation_box1(s: str = "S", a: str = "A") -> list[Gate]:
    return [Gate("CNOT", (s, a)), Gate("Hadamard", (s,))]


def bell_rotation_box2(s: str = "S", a: str = "A") -> list[Gate]:
    return [Gate("Hadamard", (s,)), Gate("CNOT", (s, a))]


def symmetrization_network() -> Network:
    gates = (
        epr_prepare()
        + bell_rotation_box1()
        + [Gate("Toffoli", ("S", "A", ANCILLA))]
        + bell_rotation_box2()
    )
    return Network(tuple(gates))


def initial_register(phi: PureState) -> PureState:
    """``|phi>_S |1>_A |1>_B |0>_anc``."""
    if phi.num_qubits != 1:
        raise ValueError("phi must be a single-qubit state")
    return tensor(phi.relabel(("S",)), ket("110", ("A", "B", ANCILLA)))


@dataclass(frozen=True)
class Branch:
    probability: float
    state: PureState | None


@dataclass(frozen=True)
class NetworkResult:
    outcome_0: Branch  # symmetrized: joint SAB state
    outcome_1: Branch  # teleported: Bob's qubit
    final_state: PureState


def _condition(final: PureState, bit: int) -> tuple[float, np.ndarray]:
    t = final.amplitudes.reshape(8, 2)[:, bit]
    p = float(np.vdot(t, t).real)
    return p, t


def _bob_state(sab: np.ndarray) -> PureState:
    """Bob's pure state from an ``SA x B`` product vector."""
    rho_b = partial_trace(PureState(sab, ("S", "A", "B")), ["B"])
    w, v = np.linalg.eigh(rho_b.matrix)
    if w[-1] < 1 - 1e-9:
        raise ArithmeticError("Bob's qubit is not in a pure state on this branch")
    return PureState(canonical_phase(v[:, -1]), ("B",))


def run_network(phi: PureState, network: Network | None = None) -> NetworkResult:
    network = network or symmetrization_network()
    final = run_gates(network.gates, initial_register(phi))
    p0, v0 = _condition(final, 0)
    p1, v1 = _condition(final, 1)
    s0 = PureState(canonical_phase(v0 / np.sqrt(p0)), ("S", "A", "B")) if p0 > 0 else None
    s1 = _bob_state(v1 / np.sqrt(p1)) if p1 > 0 else None
    return NetworkResult(Branch(p0, s0), Branch(p1, s1), final)


def sample_ancilla(phi: PureState, shots: int, seed: int | np.random.Generator = 0) -> dict[int, int]:
    """Monte Carlo ancilla readout; one seeded stream per call."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p1 = run_network(phi).outcome_1.probability
    n1 = int(rng.binomial(shots, min(max(p1, 0.0), 1.0)))
    return {0: shots - n1, 1: n1}


def toffoli_stage_expected(phi: PureState) -> np.ndarray:
    """Register right after the Toffoli, written out term by term.

    ``1/2 [ -|11>_SA phi_B |1> - |01>_SA Z phi_B |0>
            + |10>_SA X phi_B |0> + |00>_SA X Z phi_B |0> ]``

    The last operator is ``X Z`` as a matrix product (Z acts first), which is
    ``-Z X``; written the other way round the ``|00>`` branch flips sign.
    """
    f = phi.amplitudes
    terms = [
        (-1, "11", f, 1),
        (-1, "01", SZ @ f, 0),
        (+1, "10", SX @ f, 0),
        (+1, "00", SX @ SZ @ f, 0),
    ]
    out = np.zeros(16, dtype=complex)
    for sign, sa, bob, anc in terms:
        out += 0.5 * sign * np.kron(np.kron(ket(sa).amplitudes, bob), ket(str(anc)).amplitudes)
    return out


@dataclass(frozen=True)
class IntermediateReport:
    max_deviation: float
    matches: bool
    branch_norms: dict  # SA bit string -> norm of that branch
    ancilla_one_branches: tuple[str, ...]


def intermediate_state_check(phi: PureState, atol: float = 1e-12) -> IntermediateReport:
    """Simulate up to the Toffoli and compare with the term-by-term expansion."""
    net = symmetrization_network()
    stage = epr_prepare() + bell_rotation_box1() + [Gate("Toffoli", ("S", "A", ANCILLA))]
    assert [g.kind for g in stage] == [g.kind for g in net.gates[: len(stage)]]
    sim = run_gates(stage, initial_register(phi)).amplitudes
    expected = toffoli_stage_expected(phi)
    dev = float(np.max(np.abs(canonical_phase(sim) - canonical_phase(expected))))
    t = sim.reshape(2, 2, 2, 2)  # S, A, B, anc
    norms, flagged = {}, []
    for s in (0, 1):
        for a in (0, 1):
            branch = t[s, a]
            norms[f"{s}{a}"] = float(np.linalg.norm(branch))
            if np.linalg.norm(branch[:, 1]) > atol:
                flagged.append(f"{s}{a}")
    return IntermediateReport(dev, dev <= atol, norms, tuple(flagged))
