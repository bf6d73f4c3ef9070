"""Command-line entry point: ``altfix <subcommand> --spec FILE``."""
from __future__ import annotations

import argparse
import os
import sys

from ..errors import AltfixError
from .runner import RunAbort, run_experiments
from .spec import SpecError, parse_problem_spec

__all__ = ["main", "build_parser", "resolve_seed", "SUBCOMMANDS"]

EXIT_SPEC_ERROR = 3

SUBCOMMANDS = {
    "verify": ("axioms", "validate_altering", "validate_comparison", "banach", "weak", "altering",
               "abc", "theorem5"),
    "iterate": ("iterate",),
    "classify": ("classify",),
    "cauchy": ("cauchy",),
    "stability": ("stability",),
    "run": None,
}

_HELP = {
    "verify": "metric axioms, function validators and contraction certificates",
    "iterate": "Picard orbits with optional a-priori bounds",
    "classify": "Picard / strong Picard classification over several starts",
    "cauchy": "sequence predicates and rank sequences",
    "stability": "Hyers-Ulam probe around a centre point",
    "run": "every experiment in the spec file",
}


def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="altfix", description="Fixed-point experiments from spec files.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--spec", required=True, help="spec file (UTF-8), or - for stdin")
        p.add_argument("--seed", type=_u64, default=None,
                       help="RNG seed; overrides ALTFIX_SEED and the spec file")
        p.add_argument("--out", default=None, help="directory for report.json and CSV traces")
        p.add_argument("--format", choices=["json"], default="json")
        p.add_argument("--quiet", action="store_true", help="do not print the report")
        p.add_argument("--jobs", type=int, default=1, help="run experiments on N threads")
    return parser


def resolve_seed(cli_seed, environ=None):
    """``--seed`` wins over ``ALTFIX_SEED``; ``None`` keeps the seed set in the spec file."""
    if cli_seed is not None:
        return cli_seed
    environ = os.environ if environ is None else environ
    raw = environ.get("ALTFIX_SEED")
    if raw is None or raw == "":
        return None
    return _u64(raw)


def _error(msg):
    print(f"altfix: {msg}", file=sys.stderr)
    return EXIT_SPEC_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.spec == "-":
            text = sys.stdin.read()
        else:
            with open(args.spec, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        return _error(f"cannot read spec: {exc}")
    try:
        spec = parse_problem_spec(text)
        seed = resolve_seed(args.seed)
    except SpecError as exc:
        return _error(f"{args.spec}: {exc}")
    except argparse.ArgumentTypeError as exc:
        return _error(f"ALTFIX_SEED: {exc}")
    spec = spec.with_settings(seed=seed)
    kinds = SUBCOMMANDS[args.command]
    if kinds is not None and not any(ex.kind in kinds for ex in spec.experiments):
        return _error(f"spec has no experiments for '{args.command}' ({', '.join(kinds)})")
    try:
        report = run_experiments(spec, out_dir=args.out, kinds=kinds, jobs=max(1, args.jobs))
    except RunAbort as exc:
        return _error(str(exc))
    except AltfixError as exc:
        return _error(str(exc))
    text = report.to_json()
    if args.out is not None:
        with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(text)
    if not args.quiet:
        sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
