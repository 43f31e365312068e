"""``urnlab`` command-line entry point.

Exit status: 0 success, 1 a negative mathematical answer (no partition, no
proven deterministic limit, invalid network), 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from . import fluctuation as fl
from . import limits as lm
from . import partition as pt
from . import simulator as sim
from .netmodel import DerivedMatrices, SpecError, check, derive, load_spec, validate

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


def _g(x: float) -> str:
    return f"{x:.6g}"


def _user(dm: DerivedMatrices, values) -> list:
    return dm.to_user_order(list(values))


def _emit_json(doc: dict, out) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    out.write(json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n")


def _floats(values) -> list[float]:
    return [float(v) for v in values]


def _load(path) -> DerivedMatrices:
    try:
        spec = load_spec(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        check(spec)
    except SpecError as exc:
        raise InputError(str(exc)) from None
    return derive(spec)


# -- subcommands -------------------------------------------------------------


def cmd_validate(args, out) -> int:
    try:
        spec = load_spec(args.spec)
    except OSError as exc:
        raise InputError(f"cannot read {args.spec}: {exc.strerror}") from None
    report = validate(spec)
    if args.json:
        _emit_json({"command": "validate", "ok": report.ok, "violations": report.violations,
                    "warnings": report.warnings}, out)
    else:
        for v in report.violations:
            out.write(f"violation: {v}\n")
        for w in report.warnings:
            out.write(f"warning: {w}\n")
        out.write("valid\n" if report.ok else "invalid\n")
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def cmd_partition(args, out) -> int:
    dm = _load(args.spec)
    if not pt.is_flexible_strongly_connected(dm):
        raise InputError("flexible subgraph is not strongly connected")
    if args.start is None:
        start = 0
    else:
        if args.start not in dm.flexible_ids:
            raise InputError(f"start node {args.start} is not a flexible node")
        start = dm.index_of(args.start)
    result = pt.explore_partition(dm, start)
    invariant = pt.partition_invariant_check(dm) if args.check_all_starts else None
    if args.json:
        doc = {"command": "partition", "admits": result.admits, "start": dm.ids[start],
               "sets": result.user_sets(dm) if result.admits else None,
               "reason": None if result.admits else result.failure_reason.value}
        if invariant is not None:
            doc["start_invariant"] = invariant
        _emit_json(doc, out)
    else:
        if result.admits:
            for role, members in result.user_sets(dm).items():
                out.write(f"{role}: {' '.join(map(str, members))}\n")
        else:
            out.write(f"no partition: {result.failure_reason.value}\n")
        if invariant is not None:
            out.write(f"start invariant: {'yes' if invariant else 'no'}\n")
    return EXIT_OK if result.admits else EXIT_NEGATIVE


def _conditions_doc(dm, cond) -> dict:
    return {
        "strongly_connected_F": cond.strongly_connected_F,
        "cond_i": cond.cond_i,
        "cond_ii": cond.cond_ii,
        "cond_iii": cond.cond_iii,
        "guaranteed": cond.guaranteed,
        "invertible": cond.invertible,
        "anti_polya": cond.anti_polya,
        "per_scc": [
            {"ids": v.ids, "source": v.source, "non_polya": v.non_polya,
             "all_polya_no_partition": v.all_polya_no_partition,
             "stubborn_feed": v.stubborn_feed, "external_in_edge": v.external_in_edge,
             "covered": v.covered}
            for v in cond.per_scc
        ],
    }


def _sync_doc(sync) -> dict:
    psc = None
    if sync.psc is not None:
        psc = {k: float(v) for k, v in vars(sync.psc).items()}
    return {"sc1": sync.sc1, "sc2": sync.sc2, "sc3": sync.sc3, "z_sync": sync.z_sync,
            "degenerate": sync.degenerate, "psc": psc, "z_psc": sync.z_psc}


def _limit_or_none(dm, cond):
    if cond.anti_polya or not cond.invertible:
        return None
    return lm.limit_ZF(dm, proven=cond.guaranteed)


def cmd_analyze(args, out) -> int:
    dm = _load(args.spec)
    cond = lm.check_conditions(dm)
    limit = _limit_or_none(dm, cond)
    sync = lm.check_sync(dm)
    if args.json:
        doc = {"command": "analyze", "node_ids": list(dm.spec.ids),
               "flexible_ids": dm.flexible_ids, "stubborn_ids": dm.stubborn_ids,
               "conditions": _conditions_doc(dm, cond), "sync": _sync_doc(sync)}
        if limit is not None:
            doc.update(z_star=_floats(_user(dm, limit.z_star)),
                       rhs_vector=_floats(limit.rhs_vector),
                       residual=limit.residual, limit_proven=limit.proven)
        else:
            doc.update(z_star=None, rhs_vector=None, residual=None, limit_proven=False)
        _emit_json(doc, out)
    else:
        out.write(f"F = {dm.flexible_ids}  S = {dm.stubborn_ids}\n")
        out.write(f"strongly connected F: {cond.strongly_connected_F}\n")
        out.write(f"(i) non-Polya node: {cond.cond_i}\n")
        out.write(f"(ii) stubborn nodes: {cond.cond_ii}\n")
        out.write(f"(iii) Polya, no partition: {cond.cond_iii}\n")
        for v in cond.per_scc:
            out.write(f"  component {v.ids}: source={v.source} covered={v.covered}\n")
        if cond.anti_polya:
            out.write(f"anti-Polya flexible nodes: {cond.anti_polya}\n")
        out.write(f"deterministic limit guaranteed: {cond.guaranteed}\n")
        if limit is not None:
            tag = "" if limit.proven else "  (fixed point; limit not proven deterministic)"
            zs = " ".join(_g(x) for x in _user(dm, limit.z_star))
            out.write(f"z_star: {zs}{tag}\n")
            out.write(f"residual: {limit.residual:.3g}\n")
        else:
            out.write("z_star: none (I - W_F singular or unsupported)\n")
        for key in ("sc1", "sc2", "sc3", "z_sync", "z_psc"):
            val = getattr(sync, key)
            out.write(f"{key}: {'-' if val is None else _g(val)}\n")
        if sync.degenerate:
            out.write("degenerate synchronisation constant (mu_F = 1)\n")
    return EXIT_OK if cond.guaranteed else EXIT_NEGATIVE


def cmd_fluctuate(args, out) -> int:
    dm = _load(args.spec)
    cond = lm.check_conditions(dm)
    limit = _limit_or_none(dm, cond)
    if limit is None:
        rho, regime = fl.classify_regime(dm)
        decay = fl.decay_exponent(dm)
        sigma, status = None, "unavailable"
    else:
        rep = fl.analyze(dm, limit.z_star)
        rho, regime, decay, sigma = rep.rho, rep.regime, rep.decay, rep.sigma
        status = "unavailable" if sigma is None else ("proven" if cond.guaranteed else "conditional")
    if args.json:
        _emit_json({
            "command": "fluctuate", "flexible_ids": dm.flexible_ids, "rho": rho,
            "regime": regime.value, "scaling": fl.SCALING[regime],
            "decay": {"re_lambda_max": decay.re_lambda_max, "branch": decay.branch,
                      "exponent": decay.exponent, "label": decay.label},
            "sigma": None if sigma is None else [_floats(row) for row in sigma],
            "sigma_status": status,
        }, out)
    else:
        out.write(f"rho: {_g(rho)}\nregime: {regime.value} ({fl.SCALING[regime]})\n")
        out.write(f"decay: Var ~ {decay.label}  (Re lambda_max = {_g(decay.re_lambda_max)})\n")
        if sigma is None:
            out.write("sigma: unavailable\n")
        else:
            out.write(f"sigma ({status}), nodes {dm.flexible_ids}:\n")
            for row in sigma:
                out.write("  " + " ".join(f"{x:>13.6g}" for x in row) + "\n")
    return EXIT_OK if cond.guaranteed else EXIT_NEGATIVE


def _parse_checkpoints(text):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad checkpoint list {text!r}") from None


def _write_csv(path, header, rows, out) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if path is None:
        out.write(buf.getvalue())
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


def cmd_simulate(args, out) -> int:
    dm = _load(args.spec)
    checkpoints = _parse_checkpoints(args.checkpoints)
    try:
        stats = sim.run_ensemble(dm, args.steps, args.reps, args.seed, checkpoints)
    except sim.SimulationError as exc:
        raise InputError(str(exc)) from None
    user_nodes = [dm.spec.nodes[k].id for k in range(dm.n)]
    col = {node_id: dm.index_of(node_id) for node_id in user_nodes}
    rows = []
    for c, t in enumerate(stats.checkpoints):
        for node_id in user_nodes:
            k = col[node_id]
            rows.append([t, node_id, repr(float(stats.mean[c, k])),
                         repr(float(stats.variance[c, k])), stats.replications])
    _write_csv(args.out, ["checkpoint_t", "node_id", "mean_z", "var_z", "replications"], rows, out)
    if args.traj is not None:
        traj = [[t, node_id, repr(float(stats.samples[0, c, col[node_id]]))]
                for c, t in enumerate(stats.checkpoints) for node_id in user_nodes]
        _write_csv(args.traj, ["t", "node_id", "z"], traj, out)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="urnlab", description="Interacting urns on directed networks.")
    parser.add_argument("--version", action="version", version=f"urnlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a network file")
    p.add_argument("spec")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("partition", help="run the graph exploration process on F")
    p.add_argument("spec")
    p.add_argument("--start", type=int, help="user id of the starting node")
    p.add_argument("--check-all-starts", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("analyze", help="convergence conditions, limit and synchronisation")
    p.add_argument("spec")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fluctuate", help="fluctuation regime, covariance and variance decay")
    p.add_argument("spec")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fluctuate)

    p = sub.add_parser("simulate", help="Monte Carlo ensemble")
    p.add_argument("spec")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--checkpoints", help="comma-separated times (default: 20 log-spaced)")
    p.add_argument("--out", help="stats CSV path (default: stdout)")
    p.add_argument("--traj", help="write replication 0's trajectory CSV here")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except InputError as exc:
        err.write(f"urnlab: error: {exc}\n")
        return EXIT_INPUT
    except SpecError as exc:
        err.write(f"urnlab: error: {exc}\n")
        return EXIT_INPUT
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
