"""Command-line front end: ``mixchar analyze | verify | sweep``.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import report
from ._parallel import pmap
from .chain import SIZE_PARAM, family, load_chain
from .errors import InputError, SpecParse
from .verify import DEFAULT_SLACK, QUANTITIES, SUITES, Config, analyze, chain_summary, run_suite
from .sets import DEFAULT_CAP
from .spectral import DEFAULT_SEED
from .distance import BISECT_RTOL

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _quantities(text: str) -> list[str]:
    qs = [q.strip() for q in text.split(",") if q.strip()]
    if not qs:
        raise InputError("no quantities given")
    unknown = [q for q in qs if q not in QUANTITIES]
    if unknown:
        raise InputError(f"unknown quantities {unknown}; choose from {', '.join(QUANTITIES)}")
    return qs


def _param_range(text: str) -> list[int]:
    try:
        a, b = (int(v) for v in text.split(".."))
    except ValueError:
        raise InputError(f"--param-range must look like A..B with integers, got {text!r}") from None
    if b < a:
        raise InputError("--param-range upper end is below the lower end")
    return list(range(a, b + 1))


def cmd_analyze(args) -> int:
    chain = load_chain(args.chain)
    config = Config(seed=args.seed, max_subsets=args.max_subsets, tol=args.tol)
    doc, bad_input = analyze(chain, _quantities(args.quantities), config, timings=args.timings)
    report.write_json(doc, args.out)
    return EXIT_INPUT if bad_input else EXIT_OK


def cmd_verify(args) -> int:
    chain = load_chain(args.chain)
    config = Config(slack=args.slack, seed=args.seed)
    records = run_suite(chain, args.suite, config)
    doc = report.verification_doc(chain_summary(chain), args.suite, args.slack, args.seed, records)
    report.write_json(doc, args.out)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def cmd_sweep(args) -> int:
    if args.family not in SIZE_PARAM:
        raise InputError(f"family {args.family!r} has no size parameter; "
                         f"choose from {', '.join(SIZE_PARAM)}")
    qs = _quantities(args.quantities)
    values = _param_range(args.param_range)
    try:
        extra = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise SpecParse(f"malformed --params JSON: {exc.msg}", exc.lineno, exc.colno) from None
    key = SIZE_PARAM[args.family]
    config = Config(seed=args.seed, max_subsets=args.max_subsets, tol=args.tol)

    def run(v):
        chain = family(args.family, {**extra, key: v})
        doc, _ = analyze(chain, qs, config)
        row = {"family": args.family, "param": key, "value": v, "chain": chain.name, "n": chain.n}
        errors = []
        for q in qs:
            entry = doc["quantities"][q]
            row[q] = entry["value"]
            if "error" in entry:
                errors.append(f"{q}:{entry['error']}")
        row["errors"] = ";".join(errors)
        return row

    rows = pmap(run, values)
    report.write_csv(rows, ["family", "param", "value", "chain", "n", *qs, "errors"], args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixchar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="compute quantities for one chain")
    a.add_argument("--chain", required=True, help="chain spec JSON file")
    a.add_argument("--quantities", required=True,
                   help="comma-separated list from: " + ", ".join(QUANTITIES))
    a.add_argument("--tol", type=float, default=BISECT_RTOL,
                   help="relative root-finding tolerance for continuous mixing times")
    a.add_argument("--max-subsets", type=int, default=DEFAULT_CAP)
    a.add_argument("--seed", type=int, default=DEFAULT_SEED)
    a.add_argument("--timings", action="store_true", help="add wall-clock seconds per quantity")
    a.add_argument("--out", required=True, help="output JSON path ('-' for stdout)")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="run an inequality verification suite")
    v.add_argument("--chain", required=True)
    v.add_argument("--suite", required=True, choices=SUITES)
    v.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="tabulate quantities across a family's size parameter")
    s.add_argument("--family", required=True)
    s.add_argument("--param-range", required=True, help="inclusive integer range A..B")
    s.add_argument("--quantities", required=True)
    s.add_argument("--params", default="", help="extra family parameters as JSON")
    s.add_argument("--tol", type=float, default=BISECT_RTOL)
    s.add_argument("--max-subsets", type=int, default=DEFAULT_CAP)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--out", required=True, help="output CSV path")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"mixchar: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
