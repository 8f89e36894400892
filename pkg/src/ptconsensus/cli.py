"""Command-line entry point: ``ptconsensus {run,sweep,tbg,graph-check,plot}``.

Exit codes: 0 success, 1 validation error (bad arguments, bad scenario,
missing file), 2 runtime fault (divergence, singular input gain).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dynamics import SingularInputGain
from .engine import DivergenceError, run, sweep_agent_count, sweep_initial_norm, sweep_tf
from .plotting import PLOT_KINDS, plot_svg
from .protocols import ConfigWarning, is_hurwitz, reduced_error_poles
from .scenario import DEFAULT_SEED, ScenarioError, atomic_write_text, load, write_csv
from .tbg import boundary_residuals, build_basis, check_hdot_identity
from .topology import leader_rooted, pinning_certificate, topological_order

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2
MODE_ALIASES = {"buffered": "buffered", "topo": "topological", "topological": "topological"}
DEFAULT_SWEEP_BASE = "paper_g2_linear"
DEFAULT_LISTS = {
    "x0": "1,2,3,4,5,6,7,8,9,10",
    "tf": "2.5,5,10,20",
    "agents": "10,20,50,100,200",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ptconsensus", description="Prescribed-time leader-following consensus simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sim_flags(sp):
        sp.add_argument("--seed", type=int, default=None, help=f"RNG seed (scenario value, else {DEFAULT_SEED})")
        sp.add_argument("--dt", type=float, default=None, help="integration step in seconds")
        sp.add_argument("--stride", type=int, default=None, help="record every K-th step")
        sp.add_argument("--mode", choices=sorted(MODE_ALIASES), default=None, help="neighbour-input evaluation")

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("scenario", help="scenario file or bundled name")
    r.add_argument("--out", default=None, help="directory for CSV, summary and plots")
    r.add_argument("--plot", action="append", choices=PLOT_KINDS, default=[], help="also write this SVG (repeatable)")
    sim_flags(r)

    s = sub.add_parser("sweep", help="parameter sweeps over x(0) norm, t_f or agent count")
    s.add_argument("scenario", nargs="?", default=DEFAULT_SWEEP_BASE, help="base scenario (x0 and tf kinds)")
    s.add_argument("--kind", choices=("x0", "tf", "agents"), required=True)
    s.add_argument("--list", dest="points", default=None, help="comma-separated sweep points")
    s.add_argument("--out", default=None, help="also write the table to this CSV file")
    sim_flags(s)

    t = sub.add_parser("tbg", help="print TBG coefficients")
    t.add_argument("--order", type=int, required=True)
    t.add_argument("--tf", type=float, required=True)
    t.add_argument("--check", action="store_true", help="verify boundary conditions and the H-dot identity")

    g = sub.add_parser("graph-check", help="connectivity and gain diagnostics of a scenario")
    g.add_argument("scenario")

    pl = sub.add_parser("plot", help="SVG figure from a result CSV")
    pl.add_argument("csv")
    pl.add_argument("--what", choices=PLOT_KINDS, required=True)
    pl.add_argument("--out", default=None, help="output SVG path (default: next to the CSV)")
    return p


def _load_scenario(args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConfigWarning)
        scn = load(args.scenario, seed=getattr(args, "seed", None))
    for note in scn.warnings:
        print(f"warning: {note}", file=sys.stderr)
    overrides = {}
    if getattr(args, "dt", None) is not None:
        overrides["dt"] = args.dt
    if getattr(args, "stride", None) is not None:
        overrides["stride"] = args.stride
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = MODE_ALIASES[args.mode]
    if overrides:
        scn = replace(scn, sim=replace(scn.sim, **overrides))
    _check_sim(scn)
    return scn


def _check_sim(scn):
    issues = []
    try:
        scn.sim.resolved(scn.settling_time)
    except ValueError as exc:
        issues.append(("sim", str(exc)))
    if scn.sim.mode == "topological":
        try:
            topological_order(scn.network)
        except ValueError as exc:
            issues.append(("sim.mode", str(exc)))
    if issues:
        raise ScenarioError(issues)


def _summary_lines(res, wall: float) -> list[str]:
    m = res.metrics
    return [
        f"scenario: {res.meta.get('scenario')}",
        f"final_error_norm: {m.final_error_norm:.6e}",
        f"max_abs_v: {m.max_abs_v:.6e}",
        f"wall_time_s: {wall:.3f}",
    ]


def cmd_run(args) -> int:
    scn = _load_scenario(args)
    t0 = time.perf_counter()
    res = run(scn)
    wall = time.perf_counter() - t0
    lines = _summary_lines(res, wall)
    print("\n".join(lines))
    if args.out:
        out = Path(args.out)
        csv_path = out / f"{scn.name}.csv"
        write_csv(res, csv_path)
        summary = {
            "scenario": scn.name,
            "seed": scn.seed,
            "final_error_norm": res.metrics.final_error_norm,
            "max_abs_v": res.metrics.max_abs_v,
            "first_below_time": res.metrics.first_below_time,
            "wall_time_s": wall,
            "warnings": list(scn.warnings),
        }
        atomic_write_text(out / f"{scn.name}.summary.json", json.dumps(summary, indent=2) + "\n")
        for what in args.plot:
            plot_svg(res, what, out / f"{scn.name}_{what}.svg")
        print(f"wrote: {csv_path}")
    elif args.plot:
        raise UsageError("--plot requires --out")
    return EXIT_OK


def _parse_points(text: str, kind: str):
    try:
        if kind == "agents":
            pts = [int(p) for p in text.split(",") if p.strip()]
        else:
            pts = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"--list must be comma-separated {'integers' if kind == 'agents' else 'numbers'}, got {text!r}")
    return pts


def cmd_sweep(args) -> int:
    points = _parse_points(args.points if args.points is not None else DEFAULT_LISTS[args.kind], args.kind)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    t0 = time.perf_counter()
    if args.kind == "agents":
        if any(p < 2 for p in points):
            raise UsageError("agent counts must be >= 2")
        kw = {"dt": args.dt} if args.dt is not None else {}
        rows = sweep_agent_count(points, seed=seed, **kw)
        header = "N,final_error_norm,max_abs_v"
    else:
        scn = _load_scenario(args)
        if args.kind == "x0":
            rows = sweep_initial_norm(scn, points, seed=seed)
            header = "x0_norm,final_error_norm,max_abs_v"
        else:
            if any(p <= 0 for p in points):
                raise UsageError("t_f values must be positive")
            rows = sweep_tf(scn, points)
            header = "t_f,final_error_norm,max_abs_v"
    wall = time.perf_counter() - t0
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join(format(v, ".17g") if isinstance(v, float) else str(v) for v in row) + "\n")
    sys.stdout.write(buf.getvalue())
    print(f"# wall_time_s: {wall:.3f}")
    if args.out:
        atomic_write_text(args.out, buf.getvalue())
    return EXIT_OK


def cmd_tbg(args) -> int:
    if args.order < 1 or not args.tf > 0:
        raise UsageError("--order must be >= 1 and --tf > 0")
    basis = build_basis(args.order, args.tf)
    for k, row in enumerate(basis.coeffs, start=1):
        print(f"h{k}: " + " ".join(format(c, ".17g") for c in row))
    if args.check:
        bres = float(np.max(np.abs(boundary_residuals(basis))))
        inner = np.linspace(0, args.tf, 102)[1:-1]
        step = args.tf * 1e-5
        ident = max(check_hdot_identity(basis, float(t), step) for t in inner)
        print(f"boundary_residual_max: {bres:.3e}")
        print(f"hdot_identity_residual_max: {ident:.3e}")
        if bres >= 1e-9:
            print("check failed: boundary residual", file=sys.stderr)
            return EXIT_RUNTIME
    return EXIT_OK


def cmd_graph_check(args) -> int:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConfigWarning)
        scn = load(args.scenario)
    net = scn.network
    cert = pinning_certificate(net)
    print(f"followers: {net.N}")
    print(f"directed: {net.directed}")
    print(f"leader_rooted: {leader_rooted(net)}")
    print(f"L+M_nonsingular: {cert.invertible} (identity residual {cert.identity_residual:.2e})")
    try:
        order = topological_order(net)
        print(f"acyclic: True (topological order {[i + 1 for i in order]})")
    except ValueError:
        print("acyclic: False (buffered mode only)")
    print(f"beta_degree: {net.beta_degree.tolist()}")
    K_fr = scn.protocol.K_fr
    if scn.protocol.protocol != "continuous_fixed_time":
        poles = reduced_error_poles(K_fr)
        print(f"K_fr_hurwitz: {is_hurwitz(K_fr)} (poles {np.round(poles, 6).tolist()})")
    for note in scn.warnings:
        print(f"warning: {note}")
    return EXIT_OK


def cmd_plot(args) -> int:
    src = Path(args.csv)
    if not src.is_file():
        raise FileNotFoundError(f"result file not found: {src}")
    out = Path(args.out) if args.out else src.with_name(f"{src.stem}_{args.what}.svg")
    plot_svg(src, args.what, out)
    print(f"wrote: {out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "tbg": cmd_tbg, "graph-check": cmd_graph_check, "plot": cmd_plot}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DivergenceError, SingularInputGain) as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
