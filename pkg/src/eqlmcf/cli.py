"""Command-line interface.

::

    eqlmcf run <config.json> [--output-root DIR] [--no-plots]
    eqlmcf soliton <kind> [--alpha A] [--lambda L] [--vertex-distance D] [--out DIR]
    eqlmcf soliton expander --table 0.3,0.6,1.0 [--out DIR]
    eqlmcf analyze <traj.jsonl> [--report OUT.json] [--plots DIR]
    eqlmcf scenario list

Exit codes: 0 success (all declared checks passed), 1 checks failed,
2 invalid input or a module error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import __version__
from .geometry import curve_to_json
from .scenarios.config import ConfigError, ScenarioConfig, output_root
from .scenarios.runner import EXIT_ERROR, EXIT_PASS

SOLITON_KINDS = ("circle", "grim_reaper", "lawlor", "shrinker", "expander", "minimal")


def _cmd_run(args):
    from .scenarios.runner import run_scenario

    try:
        cfg = ScenarioConfig.from_json(args.config)
    except (OSError, ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    res = run_scenario(cfg, root=args.output_root, plots=not args.no_plots)
    for c in res.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['metric']} = {c['value']!r}")
    if res.error:
        print(f"error: {res.error}", file=sys.stderr)
    print(f"{res.name}: {'passed' if res.passed else 'failed'} -> {res.out_dir}")
    return res.exit_code


def _make_soliton(args):
    from . import solitons as S

    if args.kind == "circle":
        return S.circle_shrinker(args.lam if args.lam is not None else -0.5)
    if args.kind == "grim_reaper":
        return S.grim_reaper()
    if args.kind == "lawlor":
        return S.lawlor_profile(args.c)
    if args.kind == "expander" and args.alpha is not None:
        return S.expander_for_angle(args.alpha)
    if args.vertex_distance is None:
        raise S.SolitonError(f"{args.kind}: --vertex-distance is required"
                             + (" (or --alpha)" if args.kind == "expander" else ""))
    return S.shoot_profile(args.kind, args.vertex_distance, lam=args.lam)


def _cmd_soliton(args):
    from .solitons import SolitonError, expander_for_angle

    out = Path(args.out) if args.out else output_root() / "solitons"
    try:
        if args.table:
            if args.kind != "expander":
                raise SolitonError("--table is only available for expanders")
            alphas = [float(a) for a in args.table.split(",") if a.strip()]
            out.mkdir(parents=True, exist_ok=True)
            path = out / "expander_table.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["alpha", "vertex_distance", "residual"])
                for a in alphas:
                    p = expander_for_angle(a)
                    row = [repr(a), repr(p.info["vertex_distance"]), repr(p.residual)]
                    w.writerow(row)
                    print(",".join(row))
            return EXIT_PASS
        prof = _make_soliton(args)
    except (SolitonError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out.mkdir(parents=True, exist_ok=True)
    stem = args.kind
    (out / f"{stem}.curve.json").write_text(curve_to_json(prof.curve) + "\n")
    report = prof.report()
    report = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
              for k, v in report.items()}
    (out / f"{stem}.residual.json").write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps(report))
    return EXIT_PASS


def _cmd_analyze(args):
    from .flow import load_trajectory
    from .scenarios.plots import emit_plots
    from .singularity import analyze, report_to_json_dict

    try:
        traj = load_trajectory(args.trajectory)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read trajectory: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report = analyze(traj, force_type2=args.force_type2)
    text = json.dumps(report_to_json_dict(report), indent=2, allow_nan=False)
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(text + "\n")
    else:
        print(text)
    if args.plots:
        for p in emit_plots(traj, report, args.plots, mirror=not traj[0].curve.closed):
            print(p, file=sys.stderr)
    return EXIT_PASS


def _cmd_scenario(args):
    from .scenarios.catalog import list_scenarios

    for name, desc in list_scenarios():
        print(f"{name:18s} {desc}")
    return EXIT_PASS


def build_parser():
    p = argparse.ArgumentParser(prog="eqlmcf", description="Equivariant Lagrangian MCF profile-curve simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config")
    r.add_argument("--output-root", default=None, help="overrides $EQLMCF_OUTPUT_ROOT")
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("soliton", help="emit a soliton profile and its residual report")
    s.add_argument("kind", choices=SOLITON_KINDS)
    s.add_argument("--alpha", type=float, default=None, help="expander opening angle")
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--vertex-distance", type=float, default=None)
    s.add_argument("--c", type=float, default=1 / 3, help="Lawlor neck constant")
    s.add_argument("--table", default=None, help="comma-separated alphas: CSV table mode")
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_soliton)

    a = sub.add_parser("analyze", help="singularity analysis of a saved trajectory")
    a.add_argument("trajectory")
    a.add_argument("--report", default=None, help="write the report JSON here")
    a.add_argument("--plots", default=None, help="directory for SVG figures")
    a.add_argument("--force-type2", action="store_true")
    a.set_defaults(func=_cmd_analyze)

    c = sub.add_parser("scenario", help="scenario catalog")
    c.add_argument("action", choices=["list"])
    c.set_defaults(func=_cmd_scenario)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
