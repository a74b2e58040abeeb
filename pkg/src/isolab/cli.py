"""Command-line surface.

Subcommands: analyze (complete-isometry pipeline), holsztynski
(commutative certificates), nicex (the no-projection example), gen
(ground-truth corpus generation).  Exit codes for analyze: 0 complete
isometry, 1 not, 2 undecided; 64 for malformed input, 65 for a document
in the wrong mode; nicex exits 3 when enumeration is refused.  All
stochastic commands take --seed and default to a fixed documented seed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__, decompose, documents, gen, holsztynski, nicex
from .decompose import AnalyzeOptions
from .errors import ArgumentError, ConfigError, IsolabError, ParseError
from .gen import GenSpec
from .nicex import NicexConfig

DEFAULT_SEED = 1729

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_UNDECIDED = 2
EXIT_REFUSED = 3
EXIT_PARSE = 64
EXIT_WRONG_MODE = 65


def _default_tol(flag_value):
    if flag_value is not None:
        return flag_value
    env = os.environ.get("ISOLAB_TOL")
    if env:
        try:
            return float(env)
        except ValueError:
            raise ArgumentError(f"ISOLAB_TOL={env!r} is not a number")
    return None


def _emit(report: dict, args) -> None:
    if args.format == "machine" or args.out:
        text = documents.dump_document(report, args.out)
        if not args.out:
            print(text)
        return
    _print_human(report)


def _print_human(report: dict, indent: str = "") -> None:
    for key, value in report.items():
        if isinstance(value, dict):
            print(f"{indent}{key}:")
            _print_human(value, indent + "  ")
        else:
            print(f"{indent}{key}: {value}")


def _residual_table(dec) -> dict:
    return {k: float(v) for k, v in dec.residuals.items()}


def _certificates(dec) -> dict:
    cert: dict = {}
    if dec.env is not None and dec.env.consistent:
        cert["p"] = documents.matrix_to_lists(dec.env.p.matrix)
        cert["q"] = documents.matrix_to_lists(dec.env.q.matrix)
    if dec.u is not None:
        cert["u"] = documents.matrix_to_lists(dec.u)
        cert["factor_side"] = dec.factor_side
    if dec.pi is not None:
        cert["pi_action"] = [documents.matrix_to_lists(a) for a in dec.pi.action]
    if dec.frame_u is not None:
        cert["U"] = documents.matrix_to_lists(dec.frame_u)
        cert["V"] = documents.matrix_to_lists(dec.frame_v)
    if dec.s_map is not None:
        cert["s_action"] = [documents.matrix_to_lists(a) for a in dec.s_map.action]
        cert["s_shape"] = {"rows": dec.s_map.codomain.rows, "cols": dec.s_map.codomain.cols}
    return cert


def _analyze_one(path: str, args) -> tuple[int, dict]:
    doc = documents.load_document(path)
    documents.validate_document(doc)
    if doc.get("kind") != "matrix_map":
        raise ParseError("analyze needs a matrix_map document", "kind")
    tmap, metadata = documents.map_from_document(doc)
    tol = _default_tol(args.tol)
    opts = AnalyzeOptions(rng_seed=args.seed)
    if tol is not None:
        opts.tol = tol
    if args.level is not None:
        opts.falsifier_iters = max(opts.falsifier_iters, 10 * args.level)
    started = time.perf_counter()
    dec = decompose.analyze(tmap, opts)
    report = {
        "version": documents.SCHEMA_VERSION,
        "kind": "report",
        "tool_version": __version__,
        "verdict": dec.verdict,
        "input_digest": documents.canonical_digest(doc),
        "residuals": _residual_table(dec),
        "certificates": _certificates(dec),
        "timing_seconds": time.perf_counter() - started,
        "seed": args.seed,
        "tol": opts.tol,
    }
    if metadata.get("expected_verdict"):
        report["expected_verdict"] = metadata["expected_verdict"]
        report["matches_expected"] = metadata["expected_verdict"] == dec.verdict
    code = {decompose.COMPLETE_ISOMETRY: EXIT_OK,
            decompose.NOT_COMPLETE_ISOMETRY: EXIT_NEGATIVE,
            decompose.UNDECIDED: EXIT_UNDECIDED}[dec.verdict]
    return code, report


def cmd_analyze(args) -> int:
    if args.dir:
        paths = sorted(os.path.join(args.dir, f) for f in os.listdir(args.dir)
                       if f.endswith(".json"))
        worst = EXIT_OK
        for path in paths:
            code, report = _analyze_one(path, args)
            print(f"{os.path.basename(path)}: {report['verdict']}")
            worst = max(worst, code)
        return worst
    code, report = _analyze_one(args.input, args)
    _emit(report, args)
    return code


def cmd_holsztynski(args) -> int:
    doc = documents.load_document(args.input)
    documents.validate_document(doc)
    if doc.get("kind") != "commutative_map":
        print("error: document is not in commutative mode", file=sys.stderr)
        return EXIT_WRONG_MODE
    cm, _ = documents.commutative_from_document(doc)
    tol = _default_tol(args.tol) or 1e-9
    cert = holsztynski.extract_certificate(cm, tol)
    verdict = holsztynski.isometry_verdict(cm, tol)
    report = {
        "version": documents.SCHEMA_VERSION,
        "kind": "report",
        "tool_version": __version__,
        "verdict": "isometry" if verdict else "not_isometry",
        "input_digest": documents.canonical_digest(doc),
        "contractive": holsztynski.contractive(cm, tol),
        "E": cert.e_set,
        "gamma": {str(y): documents.complex_to_pair(g) for y, g in cert.gamma.items()},
        "phi": {str(y): int(x) for y, x in cert.phi.items()},
        "surjective": cert.surjective,
        "tol": tol,
        "seed": args.seed,
    }
    if not cert.surjective:
        report["uncovered_points"] = holsztynski.uncovered_points(cm, tol)
    _emit(report, args)
    return EXIT_OK if verdict else EXIT_NEGATIVE


def cmd_nicex(args) -> int:
    eps = tuple(1.0 / (k + 2) for k in range(1, args.levels + 1)) \
        if args.eps_scheme == "harmonic" else \
        tuple(0.5 ** k for k in range(1, args.levels + 1))
    config = NicexConfig(n=args.n, levels=args.levels, epsilons=eps)
    if args.control:
        maps = nicex.build_control(args.n, args.levels)
    else:
        maps = nicex.build(config, mode=args.mode)
    lower = nicex.lower_bound_check(maps, samples=args.samples, rng_seed=args.seed)
    projection = nicex.no_projection_check(maps)
    report = {
        "version": documents.SCHEMA_VERSION,
        "kind": "report",
        "tool_version": __version__,
        "verdict": "control" if args.control else
                   ("rigid" if projection.get("ok") else "not_rigid"),
        "input_digest": documents.canonical_digest(
            {"n": args.n, "levels": args.levels, "eps": list(eps), "mode": args.mode}),
        "lower_bound": {k: v for k, v in lower.items()},
        "projection_check": {k: v for k, v in projection.items() if k != "commutant"},
        "commutant": projection["commutant"],
        "seed": args.seed,
    }
    _emit(report, args)
    if projection.get("refused"):
        return EXIT_REFUSED
    if args.control:
        return EXIT_OK if projection["surviving_count"] > 1 else EXIT_NEGATIVE
    return EXIT_OK if projection["ok"] else EXIT_NEGATIVE


def cmd_gen(args) -> int:
    spec = GenSpec(m=args.m, n=args.n, r=args.r, s=args.s,
                   multiplicity=args.multiplicity,
                   contraction_scale=args.scale, seed=args.seed)
    if args.kind == "complete_isometry":
        tmap, truth = gen.random_complete_isometry(spec)
        expected = decompose.COMPLETE_ISOMETRY
        metadata = {
            "name": f"gen-{args.kind}-{args.seed}",
            "expected_verdict": expected,
            "ground_truth": {
                "multiplicity": truth.multiplicity,
                "contraction_scale": truth.scale,
                "p": documents.matrix_to_lists(truth.p),
                "q": documents.matrix_to_lists(truth.q),
            },
        }
    elif args.kind == "triple_morphism":
        tmap, truth = gen.random_triple_morphism(spec)
        metadata = {
            "name": f"gen-{args.kind}-{args.seed}",
            "expected_verdict": decompose.COMPLETE_ISOMETRY,
            "ground_truth": {
                "multiplicity": truth.multiplicity,
                "p": documents.matrix_to_lists(truth.p),
                "q": documents.matrix_to_lists(truth.q),
            },
        }
    else:
        tmap, witness, ratio = gen.random_noncontraction(spec)
        metadata = {
            "name": f"gen-{args.kind}-{args.seed}",
            "expected_verdict": decompose.NOT_COMPLETE_ISOMETRY,
            "ground_truth": {
                "witness": documents.matrix_to_lists(witness),
                "witness_ratio": ratio,
            },
        }
    doc = documents.map_to_document(tmap, metadata)
    documents.validate_document(doc)
    text = documents.dump_document(doc, args.out)
    if not args.out:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isolab",
        description="certify and decompose complete isometries between matrix spaces")
    parser.add_argument("--version", action="version", version=f"isolab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=float, default=None,
                       help="certification tolerance (env ISOLAB_TOL; flag wins)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help=f"RNG seed (default {DEFAULT_SEED})")
        p.add_argument("--out", default=None, help="write machine report to this path")
        p.add_argument("--format", choices=["human", "machine"], default="human")

    p_an = sub.add_parser("analyze", help="run the complete-isometry pipeline")
    p_an.add_argument("input", nargs="?", help="map document (JSON)")
    p_an.add_argument("--dir", default=None, help="analyze every .json document in a directory")
    p_an.add_argument("--level", type=int, default=None, help="extra falsifier effort level")
    common(p_an)
    p_an.set_defaults(func=cmd_analyze)

    p_h = sub.add_parser("holsztynski", help="commutative-isometry certificate")
    p_h.add_argument("input", help="commutative map document (JSON)")
    common(p_h)
    p_h.set_defaults(func=cmd_holsztynski)

    p_n = sub.add_parser("nicex", help="the no-projection example at finite truncation")
    p_n.add_argument("--n", type=int, default=3)
    p_n.add_argument("--levels", type=int, default=4)
    p_n.add_argument("--eps-scheme", choices=["harmonic", "dyadic"], default="harmonic")
    p_n.add_argument("--mode", choices=["vector", "matrix"], default="vector")
    p_n.add_argument("--samples", type=int, default=1000)
    p_n.add_argument("--control", action="store_true",
                     help="run the honest block map instead (expects survivors)")
    common(p_n)
    p_n.set_defaults(func=cmd_nicex)

    p_g = sub.add_parser("gen", help="generate a ground-truth map document")
    p_g.add_argument("--kind", choices=["complete_isometry", "triple_morphism",
                                        "noncontraction"], default="complete_isometry")
    p_g.add_argument("--m", type=int, default=2)
    p_g.add_argument("--n", type=int, default=2)
    p_g.add_argument("--r", type=int, default=4)
    p_g.add_argument("--s", type=int, default=4)
    p_g.add_argument("--multiplicity", type=int, default=1)
    p_g.add_argument("--scale", type=float, default=0.5)
    common(p_g)
    p_g.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "analyze" and not args.dir and not args.input:
        parser.error("analyze needs an input document or --dir")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ArgumentError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except IsolabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 70


if __name__ == "__main__":
    sys.exit(main())
