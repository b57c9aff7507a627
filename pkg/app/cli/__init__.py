# cli.py

"""
Command-line front end.

Three subcommands share one output layer:

    count bounded-affine --n N | --upto N [--method a|b|brute]
    count avoiders --n N | --upto N --patterns 231,312 [--universe bounded-affine|ordinary]
    decompose --window "2,7,-2,-1,9,6" [--size N] [--mode std|blocks]
    series affine|indecomposables|counts|classify|diagnose [--class NAME|file:PATH] [--terms N]

Every leaf command accepts ``--format plain|csv|json``, ``--cap``, ``--tolerance``,
``--dps`` and ``--log-level``. Results go to stdout, messages to stderr.
Exit codes: 0 on success, 2 for invalid input, 3 when an internal cross-check fails.
"""

# -----------------------------------------------------------------------------------
# Import Statements
# -----------------------------------------------------------------------------------
# argparse builds the nested subcommands; csv and json are the two
# structured output formats next to plain text.
import argparse
import csv
import json
import logging
import sys
# --tolerance is read exactly, e.g. "1/100".
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

# Each command is a thin wrapper over one library module.
from app.affine import AffinePerm, is_decomposable, oscillation_witness, standard_decomposition
from app.config import DEFAULT_SETTINGS, Settings
from app.enumeration import UNIVERSES, CountMethodFactory, count_bounded_affine, count_bounded_avoiders
from app.exceptions import AffpermError, InvariantViolation
from app.permcore import Perm
from app.series import (
    SUBCRITICAL,
    SUPERCRITICAL,
    ClassSpecFactory,
    bounded_total_diagnostics,
    schema_classify,
    subcritical_diagnostics,
    supercritical_diagnostics,
)

logger = logging.getLogger(__name__)

FORMATS = ("plain", "csv", "json")
SERIES_ACTIONS = ("affine", "indecomposables", "counts", "classify", "diagnose")
DIAGNOSTIC_TARGETS = ("enasym", SUBCRITICAL, SUPERCRITICAL)


# -----------------------------------------------------------------------------------
# Output
# -----------------------------------------------------------------------------------
def emit_sequence(rows: Iterable[Tuple[int, int]], fmt: str) -> None:
    """
    Print (n, value) rows: bare values in plain mode, an ``n,value`` table in csv
    mode, a list of objects in json mode. Integers are printed in full.
    """
    rows = list(rows)
    if fmt == "plain":
        for _, value in rows:
            print(value)
    elif fmt == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["n", "value"])
        writer.writerows(rows)
    else:
        print(json.dumps([{"n": n, "value": value} for n, value in rows]))


def emit_record(plain_lines: Sequence[str], record: Dict, fmt: str) -> None:
    """Print a report: its own lines in plain mode, ``field,value`` rows in csv mode."""
    if fmt == "plain":
        for line in plain_lines:
            print(line)
    elif fmt == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["field", "value"])
        for key, value in record.items():
            writer.writerow([key, json.dumps(value) if isinstance(value, (list, dict)) else value])
    else:
        print(json.dumps(record))


# -----------------------------------------------------------------------------------
# Argument helpers
# -----------------------------------------------------------------------------------
def parse_patterns(text: str) -> Tuple[Perm, ...]:
    """``"231,312"`` -> (231, 312). Each pattern is a digit string."""
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if not parts:
        raise AffpermError("at least one pattern is required")
    return tuple(Perm.parse(part) for part in parts)


def settings_from_args(args: argparse.Namespace) -> Settings:
    changes = {"log_level": args.log_level.upper()}
    if args.cap is not None:
        logger.warning(
            "brute-force size caps raised from %d/%d to %d; runs may be very long",
            DEFAULT_SETTINGS.brute_cap, DEFAULT_SETTINGS.ordinary_cap, args.cap,
        )
        changes["brute_cap"] = args.cap
        changes["ordinary_cap"] = args.cap
    if args.tolerance is not None:
        changes["tolerance"] = Fraction(args.tolerance)
    if args.dps is not None:
        changes["dps"] = args.dps
    return DEFAULT_SETTINGS.replace(**changes)


def _sizes(args: argparse.Namespace) -> List[int]:
    if args.upto is not None:
        return list(range(1, args.upto + 1))
    return [args.n]


# -----------------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------------
def cmd_count(args: argparse.Namespace, settings: Settings) -> int:
    """Counts of bounded affine permutations, optionally avoiding patterns."""
    if args.what == "bounded-affine":
        rows = [(n, count_bounded_affine(n, args.method, settings)) for n in _sizes(args)]
    else:
        patterns = parse_patterns(args.patterns)
        rows = [
            (n, count_bounded_avoiders(n, patterns, args.universe, settings))
            for n in _sizes(args)
        ]
    emit_sequence(rows, args.format)
    return 0


def cmd_decompose(args: argparse.Namespace, settings: Settings) -> int:
    """Standard decomposition or block structure of one affine permutation."""
    w = AffinePerm.parse(args.window, size=args.size)
    if args.mode == "std":
        flat, word = standard_decomposition(w)
        word_text = ",".join(str(a) for a in word)
        record = {"flat": str(flat), "word": list(word)}
        emit_record([f"flat={flat} word={word_text}"], record, args.format)
        return 0

    decomposition = is_decomposable(w)
    if decomposition is not None:
        record = {
            "decomposable": True,
            "shift": decomposition.shift,
            "block": str(decomposition.block),
        }
        line = f"decomposable r={decomposition.shift} pi={decomposition.block}"
    else:
        witness = oscillation_witness(w)
        record = {
            "decomposable": False,
            "oscillation": str(witness) if witness is not None else None,
            "oscillation_size": witness.size if witness is not None else None,
        }
        line = (
            f"indecomposable oscillation={witness} size={witness.size}"
            if witness is not None
            else "indecomposable"
        )
    emit_record([line], record, args.format)
    return 0


def cmd_series(args: argparse.Namespace, settings: Settings) -> int:
    """Generating-function sequences, schema classification and diagnostics."""
    if args.action == "diagnose" and args.target == "enasym":
        report = bounded_total_diagnostics(args.terms, settings)
        emit_record(report.lines(), report.to_dict(), args.format)
        return 0

    spec = ClassSpecFactory.create_class(args.class_name)
    if args.action in ("affine", "indecomposables", "counts"):
        series_for: Dict[str, Callable] = {
            "affine": spec.affine_series,
            "indecomposables": spec.g_series,
            "counts": spec.f_series,
        }
        values = series_for[args.action](args.terms).as_integers()
        emit_sequence(((n, values[n]) for n in range(1, args.terms + 1)), args.format)
        return 0

    terms = args.terms if args.action == "classify" else max(args.terms, settings.min_terms)
    report = schema_classify(spec, terms, settings=settings)
    if args.action == "classify":
        emit_record(report.lines(), report.to_dict(), args.format)
        return 0

    if args.target == SUBCRITICAL:
        diagnostics = subcritical_diagnostics(spec, args.terms, settings, report)
    else:
        diagnostics = supercritical_diagnostics(spec, args.terms, settings, report)
    emit_record(diagnostics.lines(), diagnostics.to_dict(), args.format)
    return 0


# -----------------------------------------------------------------------------------
# Parser
# -----------------------------------------------------------------------------------
def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="plain", help="Output format (default: plain).")
    common.add_argument("--cap", type=int, default=None,
                        help=f"Override brute-force size caps (defaults {DEFAULT_SETTINGS.brute_cap}"
                             f" and {DEFAULT_SETTINGS.ordinary_cap}).")
    common.add_argument("--tolerance", type=str, default=None,
                        help=f"Critical band for classification (default: {DEFAULT_SETTINGS.tolerance}).")
    common.add_argument("--dps", type=int, default=None,
                        help=f"mpmath decimal precision (default: {DEFAULT_SETTINGS.dps}).")
    common.add_argument("--log-level", dest="log_level", default=DEFAULT_SETTINGS.log_level,
                        help="Logging level on stderr (default: WARNING).")
    return common


def _size_options(parser: argparse.ArgumentParser) -> None:
    sizes = parser.add_mutually_exclusive_group(required=True)
    sizes.add_argument("--n", type=int, help="A single size.")
    sizes.add_argument("--upto", type=int, help="Every size from 1 to N.")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="affperm",
        description="Exact enumeration and diagnostics for bounded affine permutations.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    count = commands.add_parser("count", help="Count bounded affine permutations.")
    count_kinds = count.add_subparsers(dest="what", required=True)
    bounded = count_kinds.add_parser("bounded-affine", parents=[common], help="All bounded affine permutations.")
    _size_options(bounded)
    bounded.add_argument("--method", default="a",
                         help=f"One of {', '.join(CountMethodFactory.available())} (default: a).")
    avoiders = count_kinds.add_parser("avoiders", parents=[common], help="Avoiders of a set of patterns.")
    _size_options(avoiders)
    avoiders.add_argument("--patterns", required=True, help="Comma separated patterns, e.g. 231,312.")
    avoiders.add_argument("--universe", choices=UNIVERSES, default="bounded-affine")
    count.set_defaults(handler=cmd_count)

    decompose = commands.add_parser("decompose", parents=[common], help="Decompose one affine permutation.")
    decompose.add_argument("--window", required=True, help='Window such as "2,7,-2,-1,9,6".')
    decompose.add_argument("--size", type=int, default=None, help="Expected size; must match the window.")
    decompose.add_argument("--mode", choices=("std", "blocks"), default="std")
    decompose.set_defaults(handler=cmd_decompose)

    series = commands.add_parser("series", parents=[common], help="Generating functions of sum closed classes.")
    series.add_argument("action", choices=SERIES_ACTIONS)
    series.add_argument("--class", dest="class_name", default="catalan",
                        help=f"Built-in class ({', '.join(ClassSpecFactory.available())}) or file:<path>.")
    series.add_argument("--terms", type=int, default=20, help="Series order (default: 20).")
    series.add_argument("--target", choices=DIAGNOSTIC_TARGETS, default=SUBCRITICAL,
                        help="Which asymptotic regime to diagnose.")
    series.set_defaults(handler=cmd_series)
    return parser


# -----------------------------------------------------------------------------------
# Entry point
# -----------------------------------------------------------------------------------
def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse ``argv``, run the command and map failures to exit codes.

    **Returns:**
    - `int`: 0 on success, 2 for invalid input, 3 for an internal inconsistency.
    """
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 after --help; pass the code through.
        return int(exc.code or 0)

    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, args.log_level.upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    # EAFP: run the command, then map each failure family to its exit code.
    try:
        settings = settings_from_args(args)
        return args.handler(args, settings)
    except InvariantViolation as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return 3
    except (AffpermError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover
