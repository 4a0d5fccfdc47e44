"""Command-line front door: run scenarios, reproduce figures, check, serve.

Exit codes: 0 on completion, 2 when a run halts on an infeasible filter tick
(halt policy), 1 on usage or parse errors.  Machine-readable summary lines
are prefixed "RESULT ".
"""

import argparse
import json
import os
import sys
from typing import Dict, List, Optional, Tuple

from .scenario import ScenarioError, load_scenario, preset_scenario
from .sim import SimResult, run_scenario, write_trace


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the exit-code contract reserves 2 for
    infeasibility halts, so usage errors are raised and mapped to 1."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    p = _Parser(prog="safeteleop",
                description="Safety-and-passivity input filter: simulate, reproduce, check, serve.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario file and write its trace CSV")
    run.add_argument("--scenario", required=True, help="scenario file path")
    run.add_argument("--out", required=True, help="output trace CSV path")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("reproduce", help="run a named preset and write trace + summary")
    rep.add_argument("--figure", required=True, choices=["fig3", "fig4", "fig5"])
    rep.add_argument("--out-dir", required=True)
    rep.set_defaults(func=cmd_reproduce)

    chk = sub.add_parser("check", help="run the acceptance suite and write a JSON report")
    chk.add_argument("--report", required=True, help="report JSON path")
    chk.set_defaults(func=cmd_check)

    srv = sub.add_parser("serve", help="run the live teleoperation service")
    srv.add_argument("--bind", required=True, help="addr:port to listen on")
    srv.add_argument("--scenario", required=True, help="base scenario file path")
    srv.set_defaults(func=cmd_serve)
    return p


def _summary(res: SimResult) -> Dict[str, float]:
    x1 = res.records[-1].x1
    return {
        "ticks": len(res.records) - 1,
        "t_final": res.records[-1].t,
        "final_x1_1": float(x1[0]),
        "final_x1_2": float(x1[1]),
        "min_h_x": float(res.h_x.min()),
        "min_h_u": float(res.h_u.min()),
    }


def _result_line(command: str, fields: Dict) -> str:
    toks = [f"command={command}"]
    for k, v in fields.items():
        toks.append(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}")
    return "RESULT " + " ".join(toks)


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    res = run_scenario(sc)
    write_trace(res, args.out)
    fields = dict(status="infeasible" if res.halted else "ok", **_summary(res), trace=args.out)
    print(_result_line("run", fields))
    if res.halted:
        print(f"error: filter QP infeasible at t={res.records[-1].t:.6g}; "
              f"run halted with a partial trace", file=sys.stderr)
        return 2
    return 0


def reproduce_figure(figure: str, out_dir: str) -> Tuple[Dict, str, SimResult]:
    """Run the named preset, write its trace CSV, return (summary, path, result)."""
    sc = preset_scenario(figure)
    res = run_scenario(sc)
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, f"{figure}_trace.csv")
    write_trace(res, trace_path)
    summary = dict(figure=figure, mode=sc.mode.value,
                   status="infeasible" if res.halted else "ok",
                   **_summary(res), trace=trace_path)
    return summary, trace_path, res


def cmd_reproduce(args) -> int:
    summary, _, res = reproduce_figure(args.figure, args.out_dir)
    line = _result_line("reproduce", summary)
    print(line)
    with open(os.path.join(args.out_dir, f"{args.figure}_summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(line + "\n")
    if res.halted:
        print(f"error: filter QP infeasible at t={res.records[-1].t:.6g}", file=sys.stderr)
        return 2
    return 0


def cmd_check(args) -> int:
    from . import __version__
    from .acceptance import run_all

    results = run_all()
    ok = all(r.status in ("pass", "xfail") for r in results)
    report = {
        "suite": "acceptance",
        "version": __version__,
        "ok": ok,
        "criteria": [r.as_dict() for r in results],
    }
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=False)
        fh.write("\n")
    for r in results:
        fields = dict(status=r.status, **{k: v for k, v in r.details.items()
                                          if isinstance(v, (int, float, str))})
        print(_result_line(f"check/{r.name}", fields))
    print(_result_line("check", {"status": "ok" if ok else "fail",
                                 "criteria": len(results), "report": args.report}))
    return 0 if ok else 1


def _parse_bind(text: str) -> Tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise UsageError(f"--bind expects addr:port, got {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise UsageError(f"--bind port must be an integer, got {port!r}") from None


def cmd_serve(args) -> int:
    import asyncio

    from .service import serve_forever

    host, port = _parse_bind(args.bind)
    sc = load_scenario(args.scenario)
    try:
        asyncio.run(serve_forever(host, port, sc))
    except KeyboardInterrupt:
        pass
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
