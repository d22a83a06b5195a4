"""Command-line entry point.

Exit status: 0 when every executed test passed, 1 when any failed or
errored, 2 on a tool error (bad store, parse failure, lock held, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from selertion.driver import commands
from selertion.errors import SelertionError
from selertion.runtime.runner import TestReport

EXIT_OK, EXIT_FAILURES, EXIT_ERROR = 0, 1, 2


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        sys.stdout.write(text)


def _report_text(report: TestReport) -> str:
    lines = [report.to_tsv().rstrip("\n")] if report.outcomes else []
    lines.append(f"# tests={report.tests_run} entities={report.entities_run} "
                 f"assertions={report.assertions_evaluated} failures={report.failures} errors={report.errors}")
    return "\n".join(lines) + "\n"


def _run_text(res: commands.RunResult) -> str:
    out = [f"# revision {res.revision}"]
    out += [f"{lv}\t{ent}\t{trig}" for lv, ent, trig in res.selection.manifest_rows()]
    m = res.metrics
    out.append(f"# selectedTestRatio={m.selected_test_ratio:.4f} "
               f"selectedAssertionRatio={m.selected_assertion_ratio:.4f}")
    return "\n".join(out) + "\n" + _report_text(res.report)


def _do_init(args) -> int:
    res = commands.cmd_init(args.dir, args.store, force=args.force, method_level=args.method_level)
    _emit(args, res.to_json(), _run_text(res))
    return res.report.exit_code


def _do_run(args) -> int:
    res = commands.cmd_analyze_and_run(args.dir, args.store, collect=args.collect,
                                       method_level=True if args.method_level else None)
    _emit(args, res.to_json(), _run_text(res))
    return res.report.exit_code


def _do_collect(args) -> int:
    state = commands.cmd_collect(args.dir, args.store)
    _emit(args, state.to_json(), f"# collected; revision {state.last_revision}\n")
    return EXIT_OK


def _do_retestall(args) -> int:
    report = commands.cmd_retestall(args.dir)
    _emit(args, report.to_json(), _report_text(report))
    return report.exit_code


def _do_mutate(args) -> int:
    mutant, out = commands.cmd_mutate(args.dir, args.seed, args.out)
    payload = {"seed": mutant.seed, "op": mutant.op, "location": mutant.location.entity,
               "baseRevisionId": mutant.base_revision, "dir": str(out)}
    _emit(args, payload, f"{out}\t{mutant.op}\t{mutant.location.entity}\n")
    return EXIT_OK


def _do_report(args) -> int:
    files = commands.cmd_report(args.dir, args.store, args.revision)
    text = "".join(f"# {k}\n{files[k]}" for k in ("selection", "report", "metrics"))
    _emit(args, files, f"# revision {files['revision']}\n{text}")
    return EXIT_OK


def _do_oracle(args) -> int:
    rep = commands.cmd_oracle(args.v1, args.v2)
    payload = {"outcomeDiff": sorted(rep.outcome_diff), "traceHits": sorted(rep.trace_hits),
               "affected": sorted(rep.affected)}
    text = "".join(f"{ent}\t{'outcome' if ent in rep.outcome_diff else 'trace'}\n" for ent in sorted(rep.affected))
    _emit(args, payload, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--store", help="store directory (default: $SELERTION_STORE or <dir>/.selertion)")

    ap = argparse.ArgumentParser(prog="selertion", description="Assertion-level regression test selection.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", parents=[common], help="analyze from scratch and run every test")
    p.add_argument("dir")
    p.add_argument("--force", action="store_true", help="rebuild an existing store")
    p.add_argument("--method-level", action="store_true", help="disable assertion slicing")
    p.set_defaults(func=_do_init)

    p = sub.add_parser("run", parents=[common], help="select and run the tests affected by changes")
    p.add_argument("dir")
    p.add_argument("--collect", action="store_true", help="refresh dependencies afterwards")
    p.add_argument("--method-level", action="store_true", help="require a method-level store")
    p.set_defaults(func=_do_run)

    p = sub.add_parser("collect", parents=[common], help="refresh dependencies of the last analyzed revision")
    p.add_argument("dir")
    p.set_defaults(func=_do_collect)

    p = sub.add_parser("retestall", parents=[common], help="run the whole suite without selection")
    p.add_argument("dir")
    p.set_defaults(func=_do_retestall)

    p = sub.add_parser("mutate", parents=[common], help="write a seeded mutant as a new directory")
    p.add_argument("dir")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="target directory (default: <dir>-mutant<seed>)")
    p.set_defaults(func=_do_mutate)

    p = sub.add_parser("report", parents=[common], help="show the stored results of a revision")
    p.add_argument("dir")
    p.add_argument("--revision", help="revision id (default: last analyzed)")
    p.set_defaults(func=_do_report)

    p = sub.add_parser("oracle", parents=[common], help="tests affected between two revisions, by brute force")
    p.add_argument("v1")
    p.add_argument("v2")
    p.set_defaults(func=_do_oracle)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SelertionError as exc:
        print(f"selertion: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
