"""Command-line front end.  JSON reports go to stdout, diagnostics to stderr."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .ansatz import AnsatzError, backflow_det, load_spec
from .combinat import CombinatError, DegreeProfile, enumerate_partitions, pbar, qbar
from .dimension import (
    DimensionError,
    determinant_count_bound,
    format_mpf,
    gap_report,
    min_degree,
    source_dim_asymptotic,
    source_dim_exact,
    source_dim_paper,
    target_dim_asymptotic,
    target_dim_exact,
    target_dim_paper_lower,
)
from .polyalg import PolynomialError, symmetry_check
from .rankprobe import (
    DEFAULT_PRIME,
    DEFAULT_TRIALS,
    RankProbeError,
    ResourceGuardError,
    surjectivity_verdict,
)

SCHEMA = "backflow-report/1"

log = logging.getLogger("backflow")

EXIT_CODES = {
    "usage": 2,
    "bad-spec": 3,
    "resource-guard": 4,
    "domain": 5,
    "io": 6,
}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


def parse_profile(text: str) -> DegreeProfile:
    try:
        degrees = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise CliError("usage", f"profile {text!r} is not a comma-separated list of integers") from None
    if list(degrees) != sorted(degrees):
        raise CliError("usage", f"profile {text!r} is not nondecreasing")
    try:
        return DegreeProfile(degrees)
    except CombinatError as exc:
        raise CliError("usage", str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="backflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("partitions", help="count and list partitions")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--strict", action="store_true")

    dims = sub.add_parser("dims", help="source and target dimensions")
    dsub = dims.add_subparsers(dest="space", required=True, parser_class=_Parser)
    t = dsub.add_parser("target")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--degree", type=int, required=True)
    g = t.add_mutually_exclusive_group()
    for flag in ("exact", "paper-lower", "asymptotic", "all"):
        g.add_argument(f"--{flag}", dest="which", action="store_const", const=flag)
    s = dsub.add_parser("source")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--profile", required=True)
    g = s.add_mutually_exclusive_group()
    for flag in ("exact", "paper", "asymptotic", "all"):
        g.add_argument(f"--{flag}", dest="which", action="store_const", const=flag)

    p = sub.add_parser("mindeg")
    p.add_argument("--n", type=int, required=True)
    p = sub.add_parser("bound")
    p.add_argument("--n", type=int, required=True)
    p = sub.add_parser("gap")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)

    ansatz = sub.add_parser("ansatz")
    asub = ansatz.add_subparsers(dest="action", required=True, parser_class=_Parser)
    e = asub.add_parser("eval")
    e.add_argument("--spec", required=True)
    e.add_argument("--check", action="store_true")

    for name in ("rank", "verdict"):
        p = sub.add_parser(name)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--degree", type=int, required=True)
        p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
        p.add_argument("--prime", type=int, default=DEFAULT_PRIME)
        p.add_argument("--seed", type=int, default=0)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--profile")
        g.add_argument("--all-profiles", action="store_true")
        if name == "rank":
            p.add_argument("--secant", "--r", dest="r", type=int, default=1)
        else:
            p.add_argument("--r", type=int, required=True)
            g.add_argument("--best-profile", action="store_true")
    return parser


def _partitions(args) -> dict:
    items = [list(part.parts) for part in enumerate_partitions(args.k, args.m, args.strict)]
    count = qbar(args.k, args.m) if args.strict else pbar(args.k, args.m)
    return {"k": args.k, "m": args.m, "strict": args.strict, "count": count, "items": items}


def _dims(args) -> dict:
    which = args.which or "all"
    if args.space == "target":
        out = {"n": args.n, "degree": args.degree}
        if which in ("exact", "all"):
            out["exact"] = target_dim_exact(args.n, args.degree)
        if which in ("paper-lower", "all"):
            out["paper_lower"] = target_dim_paper_lower(args.n, args.degree)
        if which in ("asymptotic", "all"):
            out["asymptotic"] = format_mpf(target_dim_asymptotic(args.n, args.degree))
        out["discrepancy_flags"] = ["sec3-binomial"]
        return out
    profile = parse_profile(args.profile)
    degree = profile.total
    out = {"n": args.n, "profile": list(profile.degrees), "degree": degree}
    if which in ("exact", "all"):
        out["exact"] = source_dim_exact(args.n, profile)
    if which in ("paper", "all"):
        out["paper"] = source_dim_paper(args.n, profile)
    if which in ("asymptotic", "all"):
        out["asymptotic"] = format_mpf(source_dim_asymptotic(args.n, degree))
    return out


def _ansatz_eval(args) -> dict:
    path = Path(args.spec)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError("bad-spec", f"{path} is not valid JSON: {exc}") from None
    try:
        config, phis = load_spec(obj)
    except (AnsatzError, CombinatError, PolynomialError, ValueError) as exc:
        raise CliError("bad-spec", str(exc)) from None
    poly = backflow_det(phis)
    out = {
        "n": config.n,
        "profile": list(config.profile.degrees),
        "polynomial": poly.to_json(),
        "text": str(poly),
    }
    if args.check:
        out["antisymmetric"] = symmetry_check(poly, "antisymmetric_all")
    return out


def _rank(args, command: str) -> dict:
    if args.profile:
        profiles = [parse_profile(args.profile)]
    elif args.all_profiles:
        profiles = "all"
    elif command == "verdict" and not getattr(args, "best_profile", False):
        profiles = "all"
    else:
        profiles = "best"
    started = time.perf_counter()
    report = surjectivity_verdict(
        args.n, args.degree, args.r, profiles=profiles, trials=args.trials, prime=args.prime, seed=args.seed
    )
    log.info("%s N=%d D=%d finished in %.2fs", command, args.n, args.degree, time.perf_counter() - started)
    return report.to_json()


def dispatch(args) -> dict:
    cmd = args.command
    if cmd == "partitions":
        return _partitions(args)
    if cmd == "dims":
        return _dims(args)
    if cmd == "mindeg":
        return {"n": args.n, "min_degree": min_degree(args.n)}
    if cmd == "bound":
        return {"n": args.n, "bound": determinant_count_bound(args.n)}
    if cmd == "gap":
        return gap_report(args.n, args.degree).to_json()
    if cmd == "ansatz":
        return _ansatz_eval(args)
    if cmd in ("rank", "verdict"):
        return _rank(args, cmd)
    raise CliError("usage", f"unknown command {cmd!r}")


def envelope(argv: list[str], args, payload: dict) -> dict:
    out = {"schema": SCHEMA, "tool_version": __version__, "command": list(argv)}
    if getattr(args, "command", None) in ("rank", "verdict"):
        out["seed"] = args.seed
        out["prime"] = args.prime
    out["payload"] = payload
    return out


def run_command(argv: list[str]) -> tuple[int, str]:
    """Run one invocation; returns the exit code and the JSON text for stdout."""
    args = None
    try:
        args = build_parser().parse_args(argv)
        body = envelope(argv, args, dispatch(args))
        code = 0
    except CliError as exc:
        body, code = _error(argv, exc.code, str(exc)), EXIT_CODES[exc.code]
    except ResourceGuardError as exc:
        body, code = _error(argv, "resource-guard", str(exc)), EXIT_CODES["resource-guard"]
    except (CombinatError, DimensionError, RankProbeError, AnsatzError, PolynomialError, ValueError) as exc:
        body, code = _error(argv, "domain", str(exc)), EXIT_CODES["domain"]
    return code, json.dumps(body, indent=2) + "\n"


def _error(argv, code: str, message: str) -> dict:
    return {
        "schema": SCHEMA,
        "tool_version": __version__,
        "command": list(argv),
        "error": {"code": code, "message": message},
    }


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    argv = sys.argv[1:] if argv is None else argv
    code, text = run_command(argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
