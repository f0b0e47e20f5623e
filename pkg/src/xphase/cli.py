"""Command-line front end.

    xphase <kind> --config <path> [--out <dir>] [--seed <u64>]
    xphase validate --config <path>

Exit codes: 0 all gates passed, 1 a gate failed, 2 error (details as one
line of JSON on stderr).
"""
from __future__ import annotations

import argparse
import json
import sys

from .fieldexpr import ExprError
from .runner import EXIT_ERROR, EXIT_GATE, EXIT_OK, run
from .scenario import KINDS, U64_MAX, ScenarioError, load_scenario


def _u64(text: str) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64 - 1], got {v}")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error({"error": "usage_error", "message": message})
        sys.exit(EXIT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="xphase", description="Extended phase-space mechanics: simulations and structure checks.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scenario")
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default="xphase-out", help="output directory (default: xphase-out)")
        p.add_argument("--seed", type=_u64, default=None, help="override the scenario seed")
    p = sub.add_parser("validate", help="check a scenario file without running it")
    p.add_argument("--config", required=True)
    return ap


def _emit_error(payload: dict) -> None:
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def _summary(report: dict) -> str:
    lines = [f"{report['kind']} {report['name'] or ''}".rstrip() + f"  seed={report['seed']}"]
    for name, g in sorted(report["gates"].items()):
        status = "PASS" if g["pass"] else "FAIL"
        bound = f"<= {g['tolerance']:.1e}" if "tolerance" in g else f"== {g['expected']}"
        value = g["value"] if isinstance(g["value"], str) else f"{g['value']:.3e}"
        lines.append(f"  {status} {name}: {value} {bound}")
    res = report["results"]
    if "verdict" in res:
        lines.append(f"  verdict: {res['verdict']}")
    lines.append("  all gates passed" if report["passed"] else "  gate failure")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.config)
        if args.command == "validate":
            print(f"ok: {args.config} ({sc.kind})")
            return EXIT_OK
        if sc.kind != args.command:
            raise ScenarioError("kind", f"scenario is {sc.kind!r} but the command is {args.command!r}", code="kind_mismatch")
        if args.seed is not None:
            sc = sc.with_seed(args.seed)
        result = run(sc, args.out)
    except ScenarioError as exc:
        _emit_error(exc.as_dict())
        return EXIT_ERROR
    except ExprError as exc:
        _emit_error(exc.as_dict())
        return EXIT_ERROR
    except (ArithmeticError, ValueError, RuntimeError, OSError) as exc:
        _emit_error({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_ERROR
    print(_summary(result.report))
    return EXIT_OK if result.exit_code == EXIT_OK else EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
