"""Command-line front end.

    torsionunits validate BUNDLE
    torsionunits analyze [--bundle PATH] [--orders kc|all|k1,k2,...] [--tables SEL]
                         [--format text|json] [--case-cap N] [--jobs N]
                         [--strict] [--expected FILE] [--no-timing]
    torsionunits prime-graph [--bundle PATH]

Exit codes: 0 done, 1 validation findings, 2 input or usage error,
3 undecided order under --strict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from .engine import AugmentationTuple
from .pipeline import (
    DEFAULT_CASE_CAP,
    Analyzer,
    OrderReport,
    Status,
    analyze_orders,
    candidate_orders,
    kc_check,
    kc_orders,
    prime_graph_of_group,
)
from .tables import BundleError, ParseError, TableBundle, load_bundle, load_shipped, validate_bundle

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_INPUT = 2
EXIT_UNDECIDED = 3


class UsageError(Exception):
    pass


def _load(path: str | None) -> TableBundle:
    return load_shipped("mcl") if path is None else load_bundle(path)


def _report_load_error(exc: Exception) -> int:
    if isinstance(exc, ParseError):
        print(f"error: parse error at byte {exc.offset}: {exc}", file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


def parse_orders(text: str, b: TableBundle) -> list[int]:
    allowed = candidate_orders(b)
    if text == "kc":
        return kc_orders(b)
    if text == "all":
        return allowed
    try:
        orders = sorted({int(x) for x in text.split(",") if x.strip()})
    except ValueError:
        raise UsageError(f"bad order list {text!r}") from None
    bad = [k for k in orders if k not in allowed]
    if bad:
        raise UsageError(f"orders {bad} do not divide the exponent {b.exponent} (or are 1)")
    if not orders:
        raise UsageError("empty order list")
    return orders


def _tuple_json(t: AugmentationTuple) -> dict[str, int]:
    return {c: v for c, v in t.entries}


def report_to_json(r: OrderReport, timing: bool = True) -> dict:
    return {
        "order": r.order,
        "status": r.status.value,
        "cases": [
            {
                "profile": {str(m): _tuple_json(t) for m, t in case.profile.tuples},
                "solutions": [_tuple_json(s) for s in case.solutions],
            }
            for case in r.cases
        ],
        "tables_used": list(r.tables_used),
        "notices": list(r.notices),
        "reason": r.reason,
        "elapsed_ms": r.elapsed_ms if timing else 0,
    }


def _fmt_tuple(t: AugmentationTuple) -> str:
    return "(" + ", ".join(f"{c}={v}" for c, v in t.entries) + ")"


def report_to_text(r: OrderReport, timing: bool = True) -> list[str]:
    n_sol = sum(len(c.solutions) for c in r.cases)
    head = f"order {r.order}: {r.status.value}  cases={len(r.cases)} solutions={n_sol}"
    if timing:
        head += f"  [{r.elapsed_ms} ms]"
    lines = [head]
    if r.tables_used:
        lines.append(f"  tables: {', '.join(r.tables_used)}")
    for note in r.notices:
        lines.append(f"  note: {note}")
    if r.reason:
        lines.append(f"  reason: {r.reason}")
    for i, case in enumerate(r.cases, 1):
        if not len(case.solutions):
            continue
        prof = "; ".join(f"u^{r.order // m} {_fmt_tuple(t)}" for m, t in case.profile.tuples)
        lines.append(f"  case {i}: {prof or 'no proper powers'}")
        for s in case.solutions:
            lines.append(f"    {_fmt_tuple(s)}")
    empty = sum(1 for c in r.cases if not len(c.solutions))
    if empty:
        lines.append(f"  {empty} case(s) without solutions")
    return lines


def _compare_expected(path: str, reports: Sequence[OrderReport]) -> tuple[list[str], bool]:
    raw = json.loads(Path(path).read_text())
    expected = {int(k): str(v) for k, v in raw.items()}
    lines = ["expected vs observed:"]
    ok = True
    for r in reports:
        want = expected.get(r.order)
        if want is None:
            continue
        mark = "ok" if want == r.status.value else "MISMATCH"
        ok &= mark == "ok"
        lines.append(f"  {r.order:>5}  {want:<22} {r.status.value:<22} {mark}")
    return lines, ok


def cmd_validate(args) -> int:
    try:
        b = load_bundle(args.bundle)
    except (BundleError, OSError) as exc:
        return _report_load_error(exc)
    findings = validate_bundle(b)
    for f in findings:
        print(f)
    if findings:
        return EXIT_FINDINGS
    print(f"{b.group_name}: ok ({len(b.classes)} classes, {len(b.tables())} tables)")
    return EXIT_OK


def cmd_prime_graph(args) -> int:
    try:
        b = _load(args.bundle)
    except (BundleError, OSError) as exc:
        return _report_load_error(exc)
    g = prime_graph_of_group(b)
    edges = g.sorted_edges()
    print(f"vertices ({len(g.vertices)}): {' '.join(map(str, sorted(g.vertices)))}")
    print(f"edges ({len(edges)}): {' '.join(f'{p}-{q}' for p, q in edges)}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        b = _load(args.bundle)
        orders = parse_orders(args.orders, b)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (BundleError, OSError) as exc:
        return _report_load_error(exc)
    timing = not args.no_timing
    analyzer = Analyzer(b, args.tables, case_cap=args.case_cap)
    reports = analyze_orders(analyzer, orders, jobs=args.jobs)

    kc = None
    if args.orders == "kc" or set(kc_orders(b)) <= set(orders):
        kc = kc_check(b, {r.order: r for r in reports})

    if args.format == "json":
        doc = {"group": b.group_name, "tables": args.tables, "reports": [report_to_json(r, timing) for r in reports]}
        if kc is not None:
            doc["kc"] = {"holds": kc.holds, "checked": [k for k, _ in kc.checked], "witnesses": list(kc.witnesses)}
        print(json.dumps(doc, indent=1, sort_keys=False))
    else:
        for r in reports:
            print("\n".join(report_to_text(r, timing)))
        if kc is not None:
            if kc.holds:
                print(f"KC holds (orders {', '.join(str(k) for k, _ in kc.checked)} eliminated)")
            else:
                print(f"KC not established; witnesses: {', '.join(map(str, kc.witnesses))}")

    if args.expected:
        try:
            lines, _ = _compare_expected(args.expected, reports)
        except (OSError, ValueError) as exc:
            print(f"error: cannot read expected results: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print("\n".join(lines), file=sys.stderr if args.format == "json" else sys.stdout)

    if args.strict and any(r.status is Status.UNDECIDED_BY_METHOD for r in reports):
        return EXIT_UNDECIDED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torsionunits", description="HeLP analysis of torsion units in integral group rings")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a character table bundle")
    v.add_argument("bundle")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="analyse unit orders")
    a.add_argument("--bundle", help="bundle path (default: shipped McL tables)")
    a.add_argument("--orders", default="kc", help="kc, all, or a comma list of orders")
    a.add_argument("--tables", default="all", help="all, ordinary, or e.g. ordinary,brauer3,brauer5")
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("--case-cap", type=int, default=DEFAULT_CASE_CAP)
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--strict", action="store_true", help="exit 3 if some order is undecided")
    a.add_argument("--expected", help="JSON file mapping order to expected status")
    a.add_argument("--no-timing", action="store_true", help="omit timings for byte-identical output")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("prime-graph", help="print the prime graph of the group")
    g.add_argument("--bundle", help="bundle path (default: shipped McL tables)")
    g.set_defaults(func=cmd_prime_graph)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        code = args.func(args)
        sys.stdout.flush()
        return code
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
