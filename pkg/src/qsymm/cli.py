"""Batch runner: one subcommand per protocol, one self-describing report per run.

Every result row carries its value, the expected value (``"none"`` when there
is nothing to compare against), the tolerance used and, for sampled
quantities, a 1-sigma standard error. Exit status is 0 when every compared
row is within tolerance, 1 otherwise, and 2 for usage or parameter errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import angmom, channels, optics, qcircuit, symmproto, tomography
from .qcore import (
    SX,
    SY,
    SZ,
    HADAMARD,
    I2,
    DensityMatrix,
    bell_state,
    canonical_phase,
    ket,
    maximally_mixed,
    rotation,
    state_from_bloch,
    trace_distance,
)

SCHEMA_VERSION = 1
EXACT_TOL = 1e-12

# -- report ------------------------------------------------------------------------------


def _plain(x):
    """JSON-safe copy: arrays to nested lists, non-finite floats to None."""
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class ExperimentReport:
    subcommand: str
    parameters: dict
    tolerance_override: float | None = None
    results: dict = field(default_factory=dict)

    def add(self, key, value, target=None, tolerance=None, stderr=None):
        ok = None
        if target is not None:
            if isinstance(target, (bool, np.bool_)):
                ok = bool(value) == bool(target)
                tolerance = None
            else:
                if self.tolerance_override is not None:
                    tolerance = self.tolerance_override
                if tolerance is None:
                    raise ValueError(f"result {key!r} has a target but no tolerance")
                diff = np.max(np.abs(np.asarray(value, dtype=float) - np.asarray(target, dtype=float)))
                ok = bool(np.isfinite(diff) and diff <= tolerance)
        self.results[key] = {
            "value": _plain(value),
            "target": "none" if target is None else _plain(target),
            "tolerance": _plain(tolerance),
            "stderr": _plain(stderr),
            "pass": ok,
        }

    @property
    def passed(self) -> bool:
        return all(r["pass"] is not False for r in self.results.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.subcommand,
            "parameters": _plain(self.parameters),
            "results": self.results,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        def cell(v):
            return v if isinstance(v, str) else json.dumps(v)

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "key", "value", "target", "tolerance", "stderr", "pass"])
        w.writerow(["meta", "schema_version", SCHEMA_VERSION, "", "", "", ""])
        w.writerow(["meta", "subcommand", self.subcommand, "", "", "", ""])
        for k in sorted(self.parameters):
            w.writerow(["parameter", k, cell(_plain(self.parameters[k])), "", "", "", ""])
        for k in sorted(self.results):
            r = self.results[k]
            w.writerow(
                ["result", k] + [cell(r[c]) for c in ("value", "target", "tolerance", "stderr", "pass")]
            )
        w.writerow(["meta", "pass", json.dumps(self.passed), "", "", "", ""])
        return buf.getvalue()


# -- argument parsing --------------------------------------------------------------------

_PI_RE = re.compile(r"^(-?\d*\.?\d*)\*?pi(?:/(\d+\.?\d*))?$")


def parse_angle(text: str) -> float:
    """A float, or a multiple of pi such as ``pi/2``, ``-pi`` or ``0.5pi``."""
    s = text.strip().replace(" ", "")
    m = _PI_RE.match(s)
    if m:
        coef = m.group(1)
        c = -1.0 if coef == "-" else float(coef) if coef else 1.0
        return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


def parse_bloch(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected theta,phi; got {text!r}")
    return parse_angle(parts[0]), parse_angle(parts[1])


def parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers; got {text!r}") from None


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="RNG seed for sampled quantities (default 0)")
    g.add_argument("--shots", type=_positive_int, default=None, help="sample with this many shots (default: exact)")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--tolerance", type=float, default=None, help="override every numeric tolerance")
    g.add_argument("--output", default=None, help="write the report to this file instead of stdout")
    return p


def _phi_arg(p: argparse.ArgumentParser):
    p.add_argument("--phi", type=parse_bloch, default=(0.0, 0.0), metavar="THETA,PHI",
                   help="input qubit as Bloch angles in radians (default 0,0 = |0>)")


GATES = {"I": I2, "X": SX, "Y": SY, "Z": SZ, "H": HADAMARD}
PROBES = ("singlet", "werner", "mixed", "product")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="qsymm",
        description=__doc__.splitlines()[0],
        epilog="Global options go after the subcommand. Values starting with '-' need the --opt=value form.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_, parents=[common])

    p = add("clone", "1->2 cloning by symmetrization with a maximally mixed ancilla")
    _phi_arg(p)

    p = add("tele-unot", "cloning plus Tele-UNOT, projector and gate network side by side")
    _phi_arg(p)

    p = add("purify", "two-copy purification of equally oriented mixed qubits")
    _phi_arg(p)
    p.add_argument("--lambda-s", type=float, default=1.0, dest="lambda_s")
    p.add_argument("--lambda-a", type=float, default=0.0, dest="lambda_a")

    p = add("program-teleport", "teleport the optimal anti-unitary map selected by a program unitary")
    _phi_arg(p)
    p.add_argument("--gate", choices=sorted(GATES), default=None, help="named program unitary")
    p.add_argument("--angle", type=parse_angle, default=0.0, help="rotation angle (if no --gate)")
    p.add_argument("--axis", type=parse_floats, default=(0.0, 0.0, 1.0), help="rotation axis x,y,z")

    p = add("nm", "N->M cloning and N->(M-N) UNOT by brute-force symmetric projection")
    _phi_arg(p)
    p.add_argument("--n", type=_positive_int, default=1, dest="N")
    p.add_argument("--m", type=_positive_int, default=2, dest="M")
    p.add_argument("--program", choices=sorted(angmom.PROGRAMS), default="singlet")

    p = add("channel", "transfer matrix and action of a named qubit channel")
    _phi_arg(p)
    p.add_argument("--name", choices=sorted(channels.NAMED_CHANNELS), default="tr")

    p = add("spa", "structural physical approximation of the partial transpose")
    p.add_argument("--state", choices=PROBES, default="singlet")
    p.add_argument("--w", type=float, default=1.0, help="Werner weight (with --state werner)")
    p.add_argument("--weights", type=parse_floats, default=(1 / 3, 2 / 3), help="convex weights w0,w1")

    p = add("ppt", "Peres-Horodecki test on a two-qubit state")
    p.add_argument("--state", choices=PROBES, default="werner")
    p.add_argument("--w", type=float, default=1.0, help="Werner weight (with --state werner)")

    p = add("eaqpt", "entanglement-assisted process tomography of a named channel")
    p.add_argument("--channel", choices=sorted(channels.NAMED_CHANNELS), default="tr")
    p.add_argument("--probe", choices=PROBES, default="singlet")
    p.add_argument("--w", type=float, default=1.0, help="Werner weight (with --probe werner)")
    p.add_argument("--samples", type=_positive_int, default=tomography.DEFAULT_FIDELITY_SAMPLES,
                   help="Monte Carlo inputs for the map fidelity")

    p = add("hom", "beam-splitter post-selection: enhancement ratio and fidelity estimators")
    _phi_arg(p)
    p.add_argument("--v", type=float, default=None, help="two-photon overlap (overrides --delay)")
    p.add_argument("--delay", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--xi", type=float, default=1.0, help="S/N reduction factor")
    p.add_argument("--scan", type=parse_floats, default=None, metavar="START,STOP,NUM",
                   help="emit a delay scan table instead of a report")
    return parser


# -- subcommands -------------------------------------------------------------------------


def _phi(args, label="q0"):
    return state_from_bloch(*args.phi, label=label)


def _params(args, *names) -> dict:
    out = {}
    for n in names:
        v = getattr(args, n)
        out[n] = list(v) if isinstance(v, tuple) else v
    return out


def _probe(name: str, w: float = 1.0) -> DensityMatrix:
    if name == "singlet":
        return bell_state("psi-").density()
    if name == "werner":
        return channels.werner_state(w)
    if name == "mixed":
        return maximally_mixed(("A", "B"))
    return ket("00", ("A", "B")).density()


_PTM_TARGETS = {
    "identity": np.eye(4),
    "tr": np.diag([1, 1 / 3, -1 / 3, 1 / 3]),
    "dep": np.diag([1.0, 0, 0, 0]),
    "unot": np.diag([1, -1 / 3, -1 / 3, -1 / 3]),
}


def cmd_clone(args, rep: ExperimentReport):
    out = symmproto.run_cloning_mixed_ancilla(_phi(args))
    rep.add("success_probability", out.success_probability, 3 / 4, EXACT_TOL)
    rep.add("clone_fidelity", out.fidelities["clone"], 5 / 6, EXACT_TOL)


def cmd_tele_unot(args, rep: ExperimentReport):
    phi = _phi(args)
    out = symmproto.run_cloning_teleunot(phi)
    rep.add("success_probability", out.success_probability, 3 / 4, EXACT_TOL)
    rep.add("clone_fidelity", out.fidelities["clone"], 5 / 6, EXACT_TOL)
    rep.add("unot_fidelity", out.fidelities["unot"], 2 / 3, EXACT_TOL)
    net = qcircuit.run_network(phi)
    rep.add("circuit_probability_0", net.outcome_0.probability, out.success_probability, EXACT_TOL)
    rep.add("circuit_probability_1", net.outcome_1.probability, 1 / 4, EXACT_TOL)
    dev = np.max(np.abs(canonical_phase(net.outcome_0.state.amplitudes) - out.post_state.amplitudes))
    rep.add("circuit_projector_deviation", dev, 0.0, EXACT_TOL)
    teleported = abs(np.vdot(phi.amplitudes, net.outcome_1.state.amplitudes)) ** 2
    rep.add("teleport_fidelity", teleported, 1.0, EXACT_TOL)
    rep.add("toffoli_stage_deviation", qcircuit.intermediate_state_check(phi).max_deviation, 0.0, EXACT_TOL)
    if args.shots:
        n1 = qcircuit.sample_ancilla(phi, args.shots, args.seed)[1]
        f = n1 / args.shots
        se = math.sqrt(0.25 * 0.75 / args.shots)
        rep.add("sampled_ancilla_one_fraction", f, 1 / 4, 3 * se, se)


def cmd_purify(args, rep: ExperimentReport):
    inp = symmproto.PurificationInput(args.lambda_s, args.lambda_a, _phi(args))
    out = symmproto.run_purification(inp)
    ref = symmproto.purification_closed_form(args.lambda_s, args.lambda_a)
    rep.add("success_probability", out.success_probability, ref["p"], EXACT_TOL)
    rep.add("f_in", out.fidelities["f_in"], ref["f_in"], EXACT_TOL)
    rep.add("f_out", out.fidelities["f_out"], ref["f_out"], EXACT_TOL)
    rep.add("lambda_out", out.fidelities["lambda_out"], ref["lambda_out"], EXACT_TOL)


def cmd_program_teleport(args, rep: ExperimentReport):
    u = GATES[args.gate] if args.gate else rotation(args.angle, args.axis)
    out = symmproto.programmable_teleport(_phi(args), u)
    rep.add("success_probability", out.success_probability, 3 / 4, EXACT_TOL)
    rep.add("clone_fidelity", out.fidelities["clone"], 5 / 6, EXACT_TOL)
    rep.add("bob_fidelity", out.fidelities["bob"], 2 / 3, EXACT_TOL)


def cmd_nm(args, rep: ExperimentReport):
    spec = angmom.CloningSpec(args.N, args.M)
    ref = angmom.closed_form_fidelities(spec)
    cg_dev = max(abs(angmom.bk_coefficient(spec, k) - angmom.bk_from_cg(spec, k)) for k in range(args.M - args.N + 1))
    rep.add("b", angmom.b_vector(spec))
    rep.add("bk_cg_deviation", cg_dev, 0.0, EXACT_TOL)
    out = angmom.run_nm_protocol(spec, _phi(args), args.program)
    rep.add("success_probability", out.success_probability, ref.success_probability, 1e-10)
    rep.add("clone_fidelity", out.clone_fidelity, ref.clone, 1e-10)
    rep.add("unot_fidelity", out.unot_fidelity, ref.unot, 1e-10)
    agree = all(
        abs(a - b) <= 1e-10
        for a, b in (
            (out.success_probability, ref.success_probability),
            (out.clone_fidelity, ref.clone),
            (out.unot_fidelity, ref.unot),
        )
    )
    rep.add("brute_force_agreement", agree, True)


def cmd_channel(args, rep: ExperimentReport):
    ch = channels.NAMED_CHANNELS[args.name]()
    ptm = channels.kraus_to_ptm(ch).m
    rep.add("ptm", ptm, _PTM_TARGETS[args.name], EXACT_TOL)
    rho = _phi(args).density()
    exact = channels.apply_channel(ch, rho)
    bloch = (ptm @ np.concatenate([[1.0], np.real([np.trace(p @ rho.matrix) for p in (SX, SY, SZ)])]))[1:]
    rep.add("output_bloch", bloch)
    rep.add("output_matrix_real", exact.matrix.real)
    rep.add("output_matrix_imag", exact.matrix.imag)
    if args.shots:
        emp = channels.sample_stochastic(ch, rho, args.shots, args.seed)
        rep.add("sampled_trace_distance", trace_distance(emp, exact), 0.0, 0.01)


def cmd_spa(args, rep: ExperimentReport):
    if len(args.weights) != 2:
        raise ValueError("--weights needs exactly two values")
    rho = _probe(args.state, args.w)
    res = channels.spa_map(rho, tuple(args.weights))
    ppt = channels.ppt_test(rho)
    verbatim = np.allclose(args.weights, (1 / 3, 2 / 3), atol=1e-12)
    targets = {"singlet": 1 / 12, "mixed": 1 / 4, "product": 1 / 9}
    target = targets.get(args.state) if verbatim else None
    rep.add("lambda_min", res.lambda_min, target, EXACT_TOL if target is not None else None)
    rep.add("threshold", res.threshold)
    rep.add("ppt_min_eigenvalue", ppt.min_eigenvalue)
    # the syndrome is meant to flag entanglement; compare it with the PPT verdict
    rep.add("syndrome", res.syndrome, ppt.entangled)


def cmd_ppt(args, rep: ExperimentReport):
    rho = _probe(args.state, args.w)
    res = channels.ppt_test(rho)
    if args.state == "werner":
        lam, ent = min((1 - 3 * args.w) / 4, (1 + args.w) / 4), args.w > 1 / 3
    else:
        lam, ent = {"singlet": (-0.5, True), "mixed": (0.25, False), "product": (0.0, False)}[args.state]
    rep.add("eigenvalues", res.eigenvalues)
    rep.add("min_eigenvalue", res.min_eigenvalue, lam, EXACT_TOL)
    rep.add("entangled", res.entangled, ent)


def cmd_eaqpt(args, rep: ExperimentReport):
    ch = channels.NAMED_CHANNELS[args.channel]()
    run = tomography.TomographyRun(_probe(args.probe, args.w), ch, args.shots, args.seed, ch, args.samples)
    res = tomography.run_eaqpt(run)
    tol = 1e-9 if args.shots is None else 5 / math.sqrt(args.shots)
    rep.add("ptm", res.ptm.m, _PTM_TARGETS[args.channel], tol)
    rep.add("condition_number", res.condition_number)
    f = res.fidelity
    if args.shots is None:
        rep.add("map_fidelity", f.value, 1.0, 1e-9, f.stderr)
    else:
        rep.add("map_fidelity", f.value, None, None, f.stderr)


def _hom_config(args) -> optics.HomConfig:
    return optics.HomConfig(
        _phi(args), args.delay, args.sigma, args.shots or 100_000, args.seed, args.xi, args.v
    )


def cmd_hom(args, rep: ExperimentReport):
    cfg = _hom_config(args)
    rec = optics.estimate_R(cfg)
    R = 1 + cfg.visibility
    rep.add("visibility", cfg.visibility)
    rep.add("n_parallel", rec.n_parallel)
    rep.add("n_orthogonal", rec.n_orthogonal)
    rep.add("flagged", rec.flagged, False)
    rep.add("R_hat", rec.R_hat, R, 3 * rec.R_err, rec.R_err)
    se_c = rec.R_err / (2 * (rec.R_hat + 1) ** 2)
    se_u = rec.R_err / (rec.R_hat + 1) ** 2
    rep.add("F_clone", rec.F_clone, optics.fidelity_from_R(R, "clone"), 3 * se_c, se_c)
    rep.add("F_unot", rec.F_unot, optics.fidelity_from_R(R, "unot"), 3 * se_u, se_u)


COMMANDS = {
    "clone": (cmd_clone, ("phi",)),
    "tele-unot": (cmd_tele_unot, ("phi", "shots", "seed")),
    "purify": (cmd_purify, ("phi", "lambda_s", "lambda_a")),
    "program-teleport": (cmd_program_teleport, ("phi", "gate", "angle", "axis")),
    "nm": (cmd_nm, ("phi", "N", "M", "program")),
    "channel": (cmd_channel, ("phi", "name", "shots", "seed")),
    "spa": (cmd_spa, ("state", "w", "weights")),
    "ppt": (cmd_ppt, ("state", "w")),
    "eaqpt": (cmd_eaqpt, ("channel", "probe", "w", "shots", "seed", "samples")),
    "hom": (cmd_hom, ("phi", "v", "delay", "sigma", "xi", "shots", "seed")),
}


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "hom" and args.scan is not None:
            if len(args.scan) != 3 or args.scan[2] < 1 or args.scan[2] != int(args.scan[2]):
                raise ValueError("--scan needs START,STOP,NUM with integer NUM >= 1")
            rows = optics.dip_scan(_hom_config(args), np.linspace(args.scan[0], args.scan[1], int(args.scan[2])))
            _emit(optics.scan_to_csv(rows) if args.format == "csv" else optics.scan_to_json(rows) + "\n", args.output)
            return 0
        func, names = COMMANDS[args.command]
        rep = ExperimentReport(args.command, _params(args, *names), args.tolerance)
        func(args, rep)
    except ValueError as exc:
        print(f"qsymm {args.command}: error: {exc}", file=sys.stderr)
        return 2
    _emit(rep.to_csv() if args.format == "csv" else rep.to_json(), args.output)
    return 0 if rep.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
