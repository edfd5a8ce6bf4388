"""Command-line front end.

Subcommands: ``analyze``, ``synthesize``, ``mixed-unitary``, ``privatize``
and ``example``.  Channels come from a JSON file or ``--builtin NAME``;
reports are JSON on stdout.  Exit codes: 0 success, 2 validation failure,
3 parse failure, 4 internal verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import operator_core as oc
from . import serialize as ser
from .channel import Channel, builtin_channel, eb_check
from .errors import ParseError, ValidationError, VerificationError
from .mixed_unitary import build_privatizing_channel, obstruction_report
from .nullspace import channel_nullspace, synthesize_annihilator
from .operator_core import Tolerance
from .privacy import (kraus_partition, rank_one_private_algebra,
                      same_rank_private_algebra)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARSE = 3
EXIT_VERIFICATION = 4


def _digest(obj) -> str:
    return hashlib.sha256(ser.canonical_json(obj).encode()).hexdigest()[:16]


def _load_channel(args, tol: Tolerance) -> tuple[Channel, dict]:
    if args.builtin:
        phi = builtin_channel(args.builtin)
        source = {"builtin": args.builtin}
    elif args.source:
        with open(args.source) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON in {args.source}: {exc}") from exc
        phi = ser.channel_from_json(obj, tol)
        source = {"file": args.source, "digest": _digest(obj)}
    else:
        raise ParseError("provide a channel file or --builtin NAME")
    return phi, source


def _channel_report(phi: Channel, tol: Tolerance) -> dict:
    report = eb_check(phi, tol)
    out = {"n_in": phi.dim_in, "n_out": phi.dim_out,
           "kraus_count": len(phi.kraus),
           "is_tp": report.is_tp, "tp_residual": report.tp_residual,
           "is_cp": report.is_cp, "cp_residual": report.cp_residual,
           "choi_rank": report.choi_rank, "ppt": report.ppt,
           "eb_verdict": report.verdict,
           "has_rank_one_certificate": report.eb_certificate is not None}
    return out


def cmd_analyze(args) -> dict:
    tol = Tolerance(abs=args.tol)
    phi, source = _load_channel(args, tol)
    nullsp = channel_nullspace(phi, tol)
    return {"command": "analyze", "inputs": source,
            "channel": _channel_report(phi, tol),
            "nullspace": {"dim": nullsp.dim,
                          "basis": [ser.matrix_to_json(B) for B in nullsp.basis]}}


def cmd_synthesize(args) -> dict:
    tol = Tolerance(abs=args.tol)
    with open(args.source) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {args.source}: {exc}") from exc
    target = ser.subspace_from_json(obj, tol)
    phi, recipe = synthesize_annihilator(target, seed=args.seed, tol=tol)
    nullsp = channel_nullspace(phi, tol)
    channel_json = ser.channel_to_json(phi)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(ser.canonical_json(channel_json))
    return {"command": "synthesize",
            "inputs": {"file": args.source, "digest": _digest(obj)},
            "target_dim": target.dim,
            "verified_roundtrip": nullsp.equals(target, 1e-7),
            "recipe": {"povm_size": len(recipe.povm),
                       "lambdas": list(recipe.lambdas),
                       "lam": recipe.lam,
                       "seed": recipe.seed,
                       "diagnostics": recipe.diagnostics,
                       "povm": [ser.matrix_to_json(F) for F in recipe.povm],
                       "states": [ser.matrix_to_json(R) for R in recipe.states]},
            "channel_written_to": args.out,
            "channel": channel_json if not args.out else None}


def cmd_mixed_unitary(args) -> dict:
    tol = Tolerance(abs=args.tol)
    phi, source = _load_channel(args, tol)
    report = obstruction_report(phi, max_terms=args.max_terms,
                                restarts=args.restarts, seed=args.seed)
    out = {"command": "mixed-unitary", "inputs": source,
           "verdict": report.verdict, "witness": report.witness,
           "T_dim": report.T.dim, "S_dim": report.S.dim,
           "data": {k: v for k, v in report.data.items()
                    if isinstance(v, (int, float, str, bool))}}
    if report.decomposition is not None:
        dec = report.decomposition
        E, resid = build_privatizing_channel(phi, dec)
        out["decomposition"] = {"p": [float(p) for p in dec.probs],
                                "U": [ser.matrix_to_json(U) for U in dec.unitaries]}
        out["residuals"] = {"diag": dec.diag_residual,
                            "choi_reconstruction": dec.choi_residual,
                            "privatizing_identity": resid}
        out["privatizer_choi_rank"] = E.choi_rank()
    return out


def cmd_privatize(args) -> dict:
    tol = Tolerance(abs=args.tol)
    phi, source = _load_channel(args, tol)
    out = {"command": "privatize", "inputs": source, "certificates": []}
    phi_r1 = phi.with_rank_one(tol)
    if phi_r1 is None:
        out["rank_one_form"] = False
        out["note"] = ("no rank-one Kraus form could be derived; the partition "
                       "machinery does not apply")
        return out
    out["rank_one_form"] = True
    certificates = rank_one_private_algebra(phi_r1, tol=max(args.tol * 10, 1e-8))
    part = kraus_partition(phi_r1)
    real_classes = [P for P, cls in zip(part.P, part.classes)]
    ranks = [int(round(np.trace(Q).real)) for Q in part.Q[:len(part.classes)]]
    if len(set(ranks)) == 1 and ranks and ranks[0] > 0 and len(real_classes) >= 1:
        try:
            certificates.append(same_rank_private_algebra(phi_r1, real_classes))
        except (ValidationError, VerificationError):
            pass
    out["partition"] = {"classes": part.classes,
                        "dual_ranks": ranks,
                        "has_residual": part.has_residual}
    out["certificates"] = [
        {"algebra_basis": [ser.matrix_to_json(B) for B in cert.algebra_basis],
         "rho0": ser.matrix_to_json(cert.rho0),
         "residual": cert.residual,
         "structure": cert.structure}
        for cert in certificates]
    return out


def cmd_example(args) -> dict:
    phi = builtin_channel(args.name)
    return {"command": "example", "name": args.name,
            "channel": ser.channel_to_json(phi)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebchan",
        description="Analyze and construct entanglement breaking channels")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_channel=True):
        if needs_channel:
            p.add_argument("source", nargs="?", help="channel JSON file")
            p.add_argument("--builtin", help="built-in channel name")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--restarts", type=int, default=64)
        p.add_argument("--max-terms", dest="max_terms", type=int, default=None)
        p.add_argument("--out", help="output path")

    add_common(sub.add_parser("analyze", help="validity, EB and nullspace report"))
    psyn = sub.add_parser("synthesize",
                          help="build an EB channel with a prescribed nullspace")
    psyn.add_argument("source", help="operator subspace JSON file")
    add_common(psyn, needs_channel=False)
    add_common(sub.add_parser("mixed-unitary",
                              help="obstruction analysis and decomposition search"))
    add_common(sub.add_parser("privatize", help="emit private-algebra certificates"))
    pex = sub.add_parser("example", help="emit a built-in channel as JSON")
    pex.add_argument("name")
    pex.add_argument("--out", help="output path")
    return parser


_HANDLERS = {"analyze": cmd_analyze, "synthesize": cmd_synthesize,
             "mixed-unitary": cmd_mixed_unitary, "privatize": cmd_privatize,
             "example": cmd_example}


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, ParseError) or isinstance(exc, (json.JSONDecodeError, OSError)):
        return EXIT_PARSE
    if isinstance(exc, ValidationError):
        return EXIT_VALIDATION
    if isinstance(exc, VerificationError):
        return EXIT_VERIFICATION
    raise exc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report = _HANDLERS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = exit_code_for(exc)
        print(ser.canonical_json({"command": args.command, "error": str(exc),
                                  "exit_code": code}), file=sys.stderr)
        return code
    report["timing"] = time.perf_counter() - start
    out_path = getattr(args, "out", None)
    if args.command == "example" and out_path:
        with open(out_path, "w") as fh:
            fh.write(ser.canonical_json(report["channel"]))
    print(ser.canonical_json(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
