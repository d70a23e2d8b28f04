"""Batch front-end: ``locind <command> [flags]``.

Every report is deterministic JSON (sorted keys) carrying an ``inputs`` block
that echoes the command, flags and loaded input files. Exit codes: 0 success,
1 theorem or precondition inapplicable (report still written), 2 bad input.
"""

import argparse
import csv
import io as _stdio
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io
from .aqec import parent_certificate, subsystem_variance, verify_distinguishability
from .circuits import apply_circuit, check_state
from .lll import (LllAssignment, exact_none_probability, glll_bound,
                  symmetric_assignment, symmetric_bound, verify_lopsided_condition)
from .mps import (ChargeAssignment, NotTranslationInvariant, canonicalize, clustering_constant,
                  imps_expectation, lsm_report, momentum_phase, ring_truncation, site_rdm)
from .wstate import build_w, w_bound_report

COMMANDS = {
    "lll-bound": "symmetric or generalized local lemma bound from a parameter file",
    "lll-verify": "check the lopsided condition and compare the bound with exact enumeration",
    "code-variance": "subsystem variance of a code at one or more region sizes",
    "code-distinguish": "distinguishing operator between two circuit-prepared states",
    "code-certify": "parent-projector local lemma certificate for a state",
    "wstate-report": "depth lower bound for preparing the W state",
    "mps-analyze": "canonical form, spectrum and clustering constant of an MPS tensor",
    "mps-ring": "ring truncations versus infinite-chain expectation values",
    "lsm-check": "momentum, filling phase and indistinguishability under the large gauge transform",
}
THREADS_ENV = "AQEC_LLL_THREADS"


class UsageError(Exception):
    """Malformed command line; the message names the offending flag."""


class InputError(Exception):
    """An input file is missing or malformed."""


class _HelpShown(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")

    def exit(self, status=0, message=None):
        if status == 0:
            raise _HelpShown()
        raise UsageError(message or f"{self.prog}: error")


@dataclass
class AnalysisPlan:
    command: str
    inputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: str = None
    format: str = "json"
    seed: int = 0
    threads: int = 0


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list: {text!r}")


def _build_parser():
    catalog = "\n".join(f"  {name:<17} {desc}" for name, desc in COMMANDS.items())
    parser = _Parser(prog="locind", description="Local indistinguishability and circuit complexity tools.",
                     epilog="commands:\n" + catalog, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def add(name):
        p = sub.add_parser(name, help=COMMANDS[name], description=COMMANDS[name])
        p.add_argument("--out", help="report path (default: standard output)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None, help=f"0 = auto; falls back to ${THREADS_ENV}")
        return p

    p = add("lll-bound")
    p.add_argument("--params", required=True, help="JSON with mode symmetric (p, d, n, c) or generalized")
    p = add("lll-verify")
    p.add_argument("--dist", required=True, help="JointDistribution JSON")
    p.add_argument("--graph", required=True, help="DependencyGraph JSON")
    p.add_argument("--c", type=float, default=1.0)
    p = add("code-variance")
    p.add_argument("--code", required=True)
    p.add_argument("--d", type=_int_list, required=True, help="region size(s), comma separated")
    p.add_argument("--grid-points", type=int, default=2500)
    p.add_argument("--random-samples", type=int, default=2000)
    p.add_argument("--refine-iters", type=int, default=3)
    p = add("code-distinguish")
    p.add_argument("--circuit1", required=True)
    p.add_argument("--circuit2", required=True)
    p.add_argument("--delta", type=float, required=True)
    p = add("code-certify")
    p.add_argument("--circuit", required=True, help="circuit whose parent projectors are used")
    p.add_argument("--state", required=True, help="JSON with 'amplitudes' or 'circuit'")
    p.add_argument("--c", type=float, default=1.0)
    p = add("wstate-report")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--connectivity", choices=("line", "all"), default="line")
    p = add("mps-analyze")
    p.add_argument("--mps", required=True)
    p.add_argument("--observables", help="JSON with PSD matrices 'P' and 'Q' for the clustering check")
    p.add_argument("--lam", type=float, help="lambda in (lambda2, 1); default midpoint")
    p = add("mps-ring")
    p.add_argument("--mps", required=True)
    p.add_argument("--L", type=_int_list, default=[6, 7, 8, 9, 10, 11, 12])
    p.add_argument("--observable", help="JSON with a single-site matrix 'O' (default |0><0|)")
    p = add("lsm-check")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--state", help="JSON with 'amplitudes' (default: the W state)")
    p.add_argument("--charge", help="JSON with a per-site matrix 'q' (default (1-Z)/2)")
    p.add_argument("--t", type=int)
    p.add_argument("--delta", type=float)
    return parser


_INPUT_FLAGS = ("params", "dist", "graph", "code", "circuit1", "circuit2", "circuit", "state",
                "mps", "observables", "observable", "charge")
_COMMON = ("command", "out", "format", "seed", "threads")


def parse_command(argv):
    """Turn ``argv`` into an :class:`AnalysisPlan`; raises :class:`UsageError`."""
    argv = list(argv)
    if argv[:2] == ["wstate", "report"]:
        argv = ["wstate-report"] + argv[2:]
    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        raise UsageError(f"unknown command {argv[0]!r}; choose from {', '.join(COMMANDS)}")
    ns = _build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError("no command given")
    values = vars(ns)
    inputs = {k: values[k] for k in _INPUT_FLAGS if values.get(k) is not None}
    params = {k: v for k, v in values.items() if k not in _COMMON and k not in _INPUT_FLAGS}
    threads = ns.threads
    if threads is None:
        env = os.environ.get(THREADS_ENV, "0")
        try:
            threads = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV}={env!r} is not an integer")
    if threads < 0:
        raise UsageError("--threads must be non-negative")
    return AnalysisPlan(ns.command, inputs, params, ns.out, ns.format, ns.seed, threads)


def _workers(plan):
    return plan.threads if plan.threads > 0 else (os.cpu_count() or 1)


def _load_state(data, where):
    if "amplitudes" in data:
        return check_state(io.decode_complex(data["amplitudes"]))
    if "circuit" in data:
        return apply_circuit(io.circuit_from_dict(data["circuit"]))
    raise InputError(f"{where}: state needs 'amplitudes' or 'circuit'")


def _matrix(data, key, where):
    if key not in data:
        raise InputError(f"{where}: missing matrix {key!r}")
    return io.decode_complex(data[key])


def _cmd_lll_bound(plan, files):
    cfg = files["params"]
    mode = cfg.get("mode", "symmetric")
    c = float(cfg.get("c", 1.0))
    if mode == "symmetric":
        res = symmetric_bound(float(cfg["p"]), int(cfg["d"]), int(cfg["n"]), c)
        report = res.as_dict()
    elif mode == "generalized":
        graph = io.graph_from_dict(cfg["graph"])
        probs = np.asarray(cfg["probs"], dtype=float)
        try:
            assign = LllAssignment(c, cfg["x"]) if "x" in cfg else symmetric_assignment(probs, graph, c)
        except ValueError as exc:
            return {"status": "condition-violation", "detail": str(exc)}, 1, None
        res = glll_bound(probs, graph, assign)
        report = res.as_dict()
        report["x"] = list(assign.x)
    else:
        raise InputError(f"unknown mode {mode!r}")
    return report, (0 if res.ok else 1), None


def _cmd_lll_verify(plan, files):
    dist = io.distribution_from_dict(files["dist"])
    graph = io.graph_from_dict(files["graph"])
    c = plan.params["c"]
    idx = list(range(len(dist.events)))
    lop = verify_lopsided_condition(dist, idx, graph, c)
    probs = np.array([dist.probability(i) for i in idx])
    exact = exact_none_probability(dist)
    report = {"lopsided": lop.as_dict(), "probabilities": probs.tolist(), "exact_none": exact}
    if not lop.passes:
        report["status"] = "condition-violation"
        return report, 1, None
    if not idx:
        report.update(status="ok", bound=1.0, dominated=exact >= 1.0 - 1e-12)
        return report, 0, None
    try:
        assign = symmetric_assignment(probs, graph, c)
    except ValueError as exc:
        report.update(status="condition-violation", detail=str(exc))
        return report, 1, None
    bound = glll_bound(probs, graph, assign)
    report["bound"] = bound.as_dict()
    report["status"] = bound.status
    if bound.ok:
        report["dominated"] = exact >= bound.value - 1e-12
    return report, (0 if bound.ok else 1), None


def _cmd_code_variance(plan, files):
    code = io.code_from_dict(files["code"])
    p = plan.params
    rows = []
    for d in p["d"]:
        if not 0 <= d <= code.n:
            raise InputError(f"--d {d} outside [0, {code.n}]")
        rep = subsystem_variance(code, d, p["grid_points"], p["random_samples"], p["refine_iters"],
                                 seed=plan.seed, n_jobs=_workers(plan))
        rows.append(rep.as_dict())
    table = [{"d": r["d"], "epsilon": r["epsilon"]} for r in rows]
    return {"n": code.n, "k": code.k, "variance": rows}, 0, table


def _cmd_code_distinguish(plan, files):
    c1 = io.circuit_from_dict(files["circuit1"])
    c2 = io.circuit_from_dict(files["circuit2"])
    if c1.n != c2.n:
        raise InputError("circuits act on different qubit counts")
    rep = verify_distinguishability(c1, c2, plan.params["delta"])
    return rep.as_dict(), (1 if rep.status == "precondition-violation" else 0), None


def _cmd_code_certify(plan, files):
    circuit = io.circuit_from_dict(files["circuit"])
    state = _load_state(files["state"], "state")
    if len(state) != 2 ** circuit.n:
        raise InputError("state and circuit sizes differ")
    rep = parent_certificate(circuit, state, plan.params["c"])
    return rep.as_dict(), (1 if rep.status == "condition-violation" else 0), None


def _cmd_wstate(plan, files):
    p = plan.params
    try:
        rep = w_bound_report(p["n"], p["delta"], p["connectivity"])
    except ValueError as exc:
        return {"status": "theorem-inapplicable", "detail": str(exc)}, 1, None
    return rep.as_dict(), 0, None


def _cmd_mps_analyze(plan, files):
    tensor = io.mps_from_dict(files["mps"])
    canon = canonicalize(tensor)
    eigs = sorted(canon.spectrum, key=lambda z: (-abs(z), z.real, z.imag))
    report = {"is_normal": canon.is_normal, "lambda2": canon.lambda2, "scale": canon.scale,
              "spectrum": [[float(z.real), float(z.imag)] for z in eigs],
              "rho": io.encode_complex(canon.rho),
              "residual_right": canon.residual_right, "residual_left": canon.residual_left,
              "canonical_tensor": io.mps_to_dict(canon.tensor)}
    if not canon.is_normal:
        report["status"] = "not-normal"
        return report, 1, None
    report["status"] = "ok"
    if "observables" in files:
        obs = files["observables"]
        cl = clustering_constant(tensor, _matrix(obs, "P", "observables"), _matrix(obs, "Q", "observables"),
                                 lam=plan.params["lam"])
        report["clustering"] = {
            "ell": cl.ell, "c": cl.c, "lambda": cl.lam, "sigma_max_rho_inv": cl.sigma_max_rho_inv,
            "verified_pairs": [{"separation": s, "pq": a, "bound": b, "holds": ok}
                               for s, a, b, ok in cl.verified_pairs]}
    return report, 0, None


def _cmd_mps_ring(plan, files):
    tensor = io.mps_from_dict(files["mps"])
    canon = canonicalize(tensor)
    if not canon.is_normal:
        return {"status": "not-normal", "lambda2": canon.lambda2}, 1, None
    chi = tensor.phys_dim
    if "observable" in files:
        op = _matrix(files["observable"], "O", "observable")
    else:
        op = np.zeros((chi, chi), dtype=complex)
        op[0, 0] = 1.0
    if op.shape != (chi, chi):
        raise InputError("observable does not match the physical dimension")
    inf = imps_expectation(canon, op)
    rows = []
    for L in plan.params["L"]:
        psi = ring_truncation(canon.tensor, L)
        val = complex(np.trace(op @ site_rdm(psi, [0], chi, L)))
        rows.append({"L": L, "ring": val.real, "imps": inf.real, "error": abs(val - inf),
                     "lambda2_power": canon.lambda2 ** (L - 1), "momentum": momentum_phase(psi, L)})
    return {"status": "ok", "lambda2": canon.lambda2, "imps_value": [inf.real, inf.imag], "table": rows}, 0, rows


def _cmd_lsm(plan, files):
    p = plan.params
    L = p["L"]
    q = _matrix(files["charge"], "q", "charge") if "charge" in files else None
    charges = ChargeAssignment(L, q)
    if "state" in files:
        state = _load_state(files["state"], "state")
    else:
        if charges.local_dim != 2:
            raise InputError("the default W state needs a qubit charge")
        state = build_w(L)
    if len(state) != charges.local_dim ** L:
        raise InputError("state does not match L and the charge dimension")
    try:
        rep = lsm_report(state, charges, p["t"], p["delta"])
    except NotTranslationInvariant as exc:
        return {"status": "theorem-inapplicable", "detail": str(exc)}, 1, None
    out = rep.as_dict()
    code = 1 if rep.status == "theorem-inapplicable" else 0
    return out, code, out["table"]


_DISPATCH = {
    "lll-bound": _cmd_lll_bound, "lll-verify": _cmd_lll_verify, "code-variance": _cmd_code_variance,
    "code-distinguish": _cmd_code_distinguish, "code-certify": _cmd_code_certify,
    "wstate-report": _cmd_wstate, "mps-analyze": _cmd_mps_analyze, "mps-ring": _cmd_mps_ring,
    "lsm-check": _cmd_lsm,
}


def _to_csv(rows):
    buf = _stdio.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: io.dumps(v).strip() if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def render(plan):
    """Run ``plan`` and return ``(exit_code, report_text)``; raises on bad input."""
    files = {k: io.load_json(path) for k, path in plan.inputs.items()}
    report, code, table = _DISPATCH[plan.command](plan, files)
    if plan.format == "csv":
        if not table:
            raise UsageError(f"--format csv is only available for tabular reports, not {plan.command}")
        return code, _to_csv(table)
    report = dict(report)
    report["inputs"] = {"command": plan.command, "params": plan.params, "seed": plan.seed,
                        "files": plan.inputs, "data": files}
    return code, io.dumps(report)


def run(plan):
    """Execute ``plan``, write the report, and return the exit code."""
    try:
        code, text = render(plan)
    except (OSError, InputError, UsageError, ValueError, KeyError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"locind: error: {msg}", file=sys.stderr)
        return 2
    try:
        if plan.output:
            with open(plan.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"locind: error: {exc}", file=sys.stderr)
        return 2
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        plan = parse_command(argv)
    except _HelpShown:
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    return run(plan)


if __name__ == "__main__":
    sys.exit(main())
