"""
Command line: `equicube <command> [options]`.

Exit codes are 0 on success, 1 on a domain error (the error object is printed as JSON on
stderr) and 2 on a usage error.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from equicube import __version__
from equicube.classify import Constraint
from equicube.config import RunConfig
from equicube.constructions import Q9_VARIANTS
from equicube.exceptions import EquicubeError, FormatError
from equicube.hypercube import Coloring, emit_hex, parse_hex
from equicube.io import parse_matrix, read_coloring
from equicube.search import MAX_CODE_DIMENSION, integer_partitions
from equicube.workbench import CONSTRUCTIONS, Workbench

logger = logging.getLogger(__name__)

COMMANDS = (
    "verify",
    "spectrum",
    "refine",
    "canon",
    "equiv",
    "autorder",
    "search",
    "codes",
    "partitions",
    "library",
    "classify",
    "construct",
    "bench",
)
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# runs at or above these dimensions need --long
LONG_SEARCH_DIMENSION = 8
LONG_CLASSIFY_DIMENSION = 6


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threads", type=int, default=None, help="joblib workers [Default: EQUICUBE_THREADS or 1]")
    parser.add_argument("--long", action="store_true", help="allow the long-running enumerations")
    parser.add_argument("--config", type=Path, default=None, help="JSON run config file")
    parser.add_argument("--checkpoint", type=Path, default=None, help="directory for resumable checkpoint files")
    parser.add_argument("--output", type=Path, default=None, help="directory for xlsx tables and manifests [Default: output]")
    parser.add_argument("--format", choices=("json", "text", "hex"), default="json", help="stdout format [Default: json]")
    parser.add_argument("--xlsx", type=str, default=None, help="also export the table as <output>/<XLSX>.xlsx")
    parser.add_argument("--manifest", action="store_true", help="write a run manifest into the output directory")
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG logging")


def _add_constraint(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--degree-max", type=int, help="keep colorings of degree at most d")
    group.add_argument("--ci-min", type=int, help="keep colorings with correlation immunity at least t")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="equicube", description="Perfect colorings of the hypercube Q_n")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("verify", "check that a coloring is perfect and print its quotient matrix"),
        ("spectrum", "eigenvalues, degree, correlation immunity and resilience"),
        ("refine", "coarsest equitable refinement"),
        ("canon", "canonical form and automorphism count"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--coloring", type=Path, required=True, help="JSON coloring or hex lines, one fiber per color")
        _add_common(p)

    p = sub.add_parser("equiv", help="equivalence test with a witness")
    p.add_argument("--coloring", type=Path, required=True)
    p.add_argument("--other", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("autorder", help="stabilizer order of a coloring or of a hex vertex set")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--coloring", type=Path)
    target.add_argument("--fiber", type=str, help="hex truth table of a vertex set")
    p.add_argument("--n", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("search", help="all perfect colorings with a quotient matrix, up to equivalence")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--matrix", type=str, required=True, help='"a,b;c,d" or a JSON list of rows')
    _add_common(p)

    p = sub.add_parser("codes", help="mu-fold 1-perfect codes")
    p.add_argument("--n", type=int, default=MAX_CODE_DIMENSION)
    p.add_argument("--mu", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("partitions", help="partitions of Q_7 into multifold perfect codes")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--spectrum", type=str, help='multiplicities, e.g. "6,2"')
    which.add_argument("--all", action="store_true", help="every spectrum (needs --long)")
    p.add_argument("--n", type=int, default=7)
    _add_common(p)

    p = sub.add_parser("library", help="fiber library of a constraint and its tallies")
    p.add_argument("--n", type=int, required=True)
    _add_constraint(p)
    p.add_argument("--library", type=Path, default=None, help="hex function list to use instead of enumeration")
    p.add_argument("--matrix", action="append", default=None, help="take fibers from the perfect colorings with this matrix (repeatable)")
    _add_common(p)

    p = sub.add_parser("classify", help="classification of perfect colorings under a constraint")
    p.add_argument("--n", type=int, required=True)
    _add_constraint(p)
    p.add_argument("--library", type=Path, default=None, help="hex function list to use instead of enumeration")
    p.add_argument("--matrix", action="append", default=None, help="take fibers from the perfect colorings with this matrix (repeatable)")
    _add_common(p)

    p = sub.add_parser("construct", help="build and verify a construction")
    p.add_argument("--name", choices=CONSTRUCTIONS, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--b", type=int, default=1)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--variant", choices=Q9_VARIANTS, default="star-z2z2")
    _add_common(p)

    p = sub.add_parser("bench", help="time the core kernels")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--repeat", type=int, default=5)
    _add_common(p)
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _run_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.read_config_file(args.config) if args.config else RunConfig()
    if args.threads is not None:
        config.threads = max(1, args.threads)
    if args.long:
        config.long = True
    if args.checkpoint is not None:
        config.checkpoint_dir = args.checkpoint
    if args.output is not None:
        config.output_dir = args.output
    if getattr(args, "library", None) is not None:
        config.dataset = args.library
    return config


def _constraint(args: argparse.Namespace) -> Constraint:
    if args.degree_max is not None:
        return Constraint("degree", args.degree_max)
    return Constraint("ci", args.ci_min)


def _matrices(args: argparse.Namespace) -> Optional[list]:
    return [parse_matrix(text) for text in args.matrix] if args.matrix else None


def _long_run(args: argparse.Namespace) -> Optional[str]:
    """Why the requested run needs --long, or None."""
    if args.command == "search" and args.n >= LONG_SEARCH_DIMENSION:
        return f"search on Q_{args.n}"
    if args.command == "partitions" and args.all:
        return "the full partition table"
    if args.command == "classify" and args.n >= LONG_CLASSIFY_DIMENSION:
        return f"classification on Q_{args.n}"
    if args.command == "library" and args.library is None and not args.matrix and args.n >= LONG_CLASSIFY_DIMENSION:
        return f"exhaustive fiber library on Q_{args.n}"
    if args.command == "library" and args.matrix and args.n >= LONG_SEARCH_DIMENSION:
        return f"search on Q_{args.n}"
    return None


def _dispatch(bench: Workbench, args: argparse.Namespace) -> tuple:
    """Run the command; returns (payload, text rendering, table or None)."""
    command = args.command
    if command in ("verify", "spectrum", "refine", "canon", "equiv"):
        f = read_coloring(args.coloring)
        if command == "verify":
            payload = bench.verify(f)
            text = "\n".join(" ".join(str(x) for x in row) for row in payload["matrix"])
        elif command == "spectrum":
            payload = bench.spectrum(f)
            text = f"eigenvalues {payload['eigenvalues']} degree {payload['degree']} ci {payload['ci_order']} resilience {payload['resilience_order']}"
        elif command == "refine":
            payload = bench.refine(f)
            text = f"{payload['coloring']['k']} colors"
        elif command == "canon":
            payload = bench.canon(f)
            text = f"aut_order {payload['aut_order']}"
        else:
            payload = bench.equiv(f, read_coloring(args.other))
            text = "equivalent" if payload["equivalent"] else "not equivalent"
        return payload, text, None

    if command == "autorder":
        if args.fiber is not None:
            n = args.n if args.n is not None else (len(args.fiber) * 4).bit_length() - 1
            payload = bench.autorder(parse_hex(args.fiber, n))
        else:
            payload = bench.autorder(read_coloring(args.coloring))
        return payload, str(payload["aut_order"]), None

    if command == "search":
        payload = bench.search(args.n, parse_matrix(args.matrix))
        return payload, f"{payload['class_count']} classes", None

    if command == "codes":
        payload = bench.codes(args.n, args.mu)
        header = ["representative", "stabilizer_order", "cycle_structure", "contains_perfect_code", "splits"]
        rows = [[c[key] for key in header] for c in payload["classes"]]
        text = "\n".join(f"{c['representative']} {c['stabilizer_order']} {c['cycle_structure'] or ''}".rstrip() for c in payload["classes"])
        return payload, f"{payload['class_count']} classes, {payload['labeled_count']} codes\n{text}", (header, rows)

    if command == "partitions":
        if args.all:
            spectra = [p for p in integer_partitions(args.n + 1) if len(p) > 1]
        else:
            spectra = [tuple(int(x) for x in args.spectrum.split(","))]
        results = [bench.partitions(spectrum, args.n) for spectrum in spectra]
        rows = [[r["row"], r["class_count"], r["labeled_count"]] for r in results]
        payload = {"n": args.n, "spectra": results}
        return payload, "\n".join(r["row"] for r in results), (["spectrum", "classes", "labeled"], rows)

    if command == "library":
        payload = bench.library(args.n, _constraint(args), matrices=_matrices(args))
        table = (payload["table"]["header"], payload["table"]["rows"])
        text = "\n".join(" ".join(str(x) for x in row) for row in table[1])
        return payload, text, table

    if command == "classify":
        payload = bench.classify(args.n, _constraint(args), matrices=_matrices(args))
        table = (payload["table"]["header"], payload["table"]["rows"])
        return payload, payload["table"]["text"], table

    if command == "construct":
        payload = bench.construct(args.name, n=args.n, b=args.b, c=args.c, variant=args.variant)
        text = "\n".join(" ".join(str(x) for x in row) for r in payload["results"] for row in r["matrix"])
        return payload, text, None

    payload = bench.bench(args.n, args.repeat)
    return payload, json.dumps(payload["seconds"]), None


def _hex_lines(payload: dict) -> list:
    """Fibers of every coloring in the payload, one hex line each; classes are separated by a blank line."""
    if "coloring" in payload:
        colorings = [payload["coloring"]]
    elif "classes" in payload and payload["classes"] and "colors" in payload["classes"][0]:
        colorings = payload["classes"]
    elif "results" in payload:
        colorings = [r["coloring"] for r in payload["results"]]
    elif "classes" in payload:
        return [c["representative"] for c in payload["classes"]]
    else:
        raise FormatError("this command has no hex rendering", operation="cli")
    blocks = []
    for item in colorings:
        f = Coloring.from_dict(item)
        blocks.append("\n".join(emit_hex(t) for t in f.fibers))
    return ["\n\n".join(blocks)]


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as excpt:
        return int(excpt.code or 0)
    _configure_logging(args.verbose)

    start = time.perf_counter()
    try:
        bench = Workbench(config=_run_config(args))
        reason = _long_run(args)
        if reason and not bench.config.long:
            print(f"equicube: {reason} is a long run, pass --long", file=sys.stderr)
            return 2
        payload, text, table = _dispatch(bench, args)
        outputs = []
        if args.xlsx and table is not None:
            outputs.append(bench.export_xlsx(table[0], table[1], args.xlsx))
        if args.format == "hex":
            print("\n".join(_hex_lines(payload)))
        elif args.format == "text":
            print(text)
        else:
            print(json.dumps(payload, indent=2, sort_keys=True, default=str))
        if args.manifest:
            inputs = [Path(p) for p in (getattr(args, "coloring", None), getattr(args, "other", None), getattr(args, "library", None)) if p]
            parameters = {key: str(value) for key, value in sorted(vars(args).items()) if value is not None}
            bench.write_manifest(args.command, parameters, inputs, outputs, time.perf_counter() - start)
    except EquicubeError as excpt:
        logger.debug(f"{args.command} failed: {excpt}")
        print(json.dumps(excpt.to_dict(), sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
