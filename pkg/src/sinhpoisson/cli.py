"""Batch front-end: reproducible experiments from flat config files.

Subcommands: mu1, region, bubble-scan, solve, sweep, analyze.  Every
output file starts with a '#' block echoing the full effective
configuration; CSV bodies are bit-reproducible for identical inputs
(timestamps only appear behind --timestamp).  Report-producing commands
also render a PNG next to each CSV unless --no-figures is given.

Exit codes: 0 success, 1 precondition rejection, 2 solver failure,
64 usage errors, 65 malformed field file.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from datetime import datetime, timezone

from .torus import (
    FieldFormatError,
    mu1,
    read_field,
    write_field,
)
from .model import Parameters
from .region import RegionSpec, clause_report, triangles
from .bubbles import BubbleSpec, verify_expansions
from .minimax import SolverError, continuation, mountain_pass
from .analysis import analyze_field
from .config import ConfigError, RunConfig, apply_assignment, parse_config_text

__all__ = ["main"]

_SOLVE_COLUMNS = ("lambda1", "lambda2", "gamma", "J", "residual", "iters",
                  "supnorm", "dirichlet_norm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="sinh-poisson",
        description="Mean-field sinh-Poisson laboratory on flat tori.",
    )
    parser.add_argument("--config", help="path to a key=value config file")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    parser.add_argument("--outdir", help="output directory (overrides config)")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering next to CSV outputs")
    parser.add_argument("--timestamp", action="store_true",
                        help="embed a timestamp in output headers (off by default)")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    sub.add_parser("mu1", help="first Laplace eigenvalue of the configured torus")

    p_region = sub.add_parser("region", help="admissible-region triangles and membership")
    p_region.add_argument(
        "--point",
        action="append",
        default=[],
        metavar="L1,L2",
        help="evaluate membership of a (lambda1, lambda2) point (repeatable)",
    )

    sub.add_parser("bubble-scan", help="bubble-family expansion slopes")
    sub.add_parser("solve", help="mountain-pass solve at the configured parameters")
    sub.add_parser("sweep", help="parameter continuation with per-step records")

    p_an = sub.add_parser("analyze", help="concentration report for a stored field")
    p_an.add_argument("--field", required=True, help="path to a field file")
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        cfg = parse_config_text(text, cfg)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        cfg = apply_assignment(cfg, key.strip(), raw)
    if args.outdir:
        cfg.outdir = args.outdir
    cfg.validate()
    return cfg


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _header_lines(cfg: RunConfig, args) -> list[str]:
    lines = [f"# {line}" for line in cfg.effective_lines()]
    if args.timestamp:
        lines.append(f"# timestamp = {datetime.now(timezone.utc).isoformat()}")
    return lines


def _write_csv(path, cfg, args, columns, rows, footer=None):
    with open(path, "w") as fh:
        for line in _header_lines(cfg, args):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")
        for line in footer or []:
            fh.write(f"# {line}\n")


def _outpath(cfg, name) -> str:
    os.makedirs(cfg.outdir, exist_ok=True)
    return os.path.join(cfg.outdir, name)


def _record_row(rec) -> dict:
    p = rec.parameters
    return {
        "lambda1": p.lambda1,
        "lambda2": p.lambda2,
        "gamma": p.gamma,
        "J": rec.j_value,
        "residual": rec.residual_norm,
        "iters": rec.iterations,
        "supnorm": rec.sup_norm,
        "dirichlet_norm": rec.dirichlet_norm,
    }


def _cmd_mu1(cfg, args) -> int:
    grid = cfg.grid()
    m = mu1(grid)
    print(f"mu1 = {m:.17g}")
    print(f"volume = {grid.volume:.17g}")
    print(f"mu1_volume = {m * grid.volume:.17g}")
    if cfg.gamma is not None:
        lo = 8.0 * math.pi
        hi = 16.0 * math.pi * (1.0 + cfg.gamma)
        ok = lo < m * grid.volume < hi
        print(f"window = ({lo:.17g}, {hi:.17g})")
        print(f"admissible = {ok}")
    return 0


def _parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--point expects L1,L2 with two numbers, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"--point expects numbers, got {text!r}") from exc


def _cmd_region(cfg, args) -> int:
    if cfg.gamma is None:
        raise ConfigError("region needs gamma in the config")
    grid = cfg.grid()
    spec = RegionSpec(cfg.gamma, mu1(grid) * grid.volume)
    t1, t2 = triangles(spec)
    rows = []
    for name, tri in (("T1", t1), ("T2", t2)):
        for i, (x, y) in enumerate(tri.vertices):
            rows.append({"triangle": name, "vertex": i, "lambda1": x, "lambda2": y})
    _write_csv(
        _outpath(cfg, "region_triangles.csv"), cfg, args,
        ("triangle", "vertex", "lambda1", "lambda2"), rows,
    )
    points, results = [], []
    for text in args.point:
        l1, l2 = _parse_point(text)
        report = clause_report(spec, l1, l2)
        inside = all(report.values())
        points.append((l1, l2))
        results.append(inside)
        print(f"point {l1:g},{l2:g}: {'inside' if inside else 'outside'}")
        for clause, ok in report.items():
            print(f"  {clause}: {ok}")
    if not args.no_figures:
        from .figures import save_region_figure

        save_region_figure(spec, points, results, _outpath(cfg, "region.png"))
    return 0


def _cmd_bubble_scan(cfg, args) -> int:
    grid = cfg.grid()
    p = cfg.parameters()
    center = (0.5 * grid.Lx, 0.5 * grid.Ly)
    specs = [BubbleSpec(eps, center, cfg.scan_r0) for eps in cfg.scan_eps()]
    report = verify_expansions(specs, grid, p)
    by = {f.name: f for f in report.fits}
    columns = ("eps", "dirichlet", "logIntExp", "logIntExpNegGamma", "J_v",
               "J_negv_over_gamma")
    names = ("dirichlet", "log_int_exp", "log_int_exp_neg_gamma", "J_v",
             "J_negv_over_gamma")
    rows = []
    for i, eps in enumerate(report.eps):
        row = {"eps": eps}
        for col, name in zip(columns[1:], names):
            row[col] = by[name].values[i]
        rows.append(row)
    footer = []
    for f in report.fits:
        footer.append(
            f"slope {f.name} = {f.slope:.17g} (expected {f.expected_slope:.17g}, "
            f"intercept {f.intercept:.17g}, resolution_warning={int(f.resolution_warning)})"
        )
    _write_csv(_outpath(cfg, "bubble_scan.csv"), cfg, args, columns, rows, footer)
    if not args.no_figures:
        from .figures import save_bubble_scan_figure

        save_bubble_scan_figure(report, _outpath(cfg, "bubble_scan.png"))
    return 0


def _cmd_solve(cfg, args) -> int:
    grid = cfg.grid()
    p = cfg.parameters()
    rec = mountain_pass(p, grid, cfg.solver())
    _write_csv(_outpath(cfg, "solve.csv"), cfg, args, _SOLVE_COLUMNS,
               [_record_row(rec)])
    write_field(_outpath(cfg, "solve_field.txt"), rec.field,
                extra_comments=cfg.effective_lines())
    print(
        f"solved ({p.lambda1:g}, {p.lambda2:g}, gamma={p.gamma:g}): "
        f"J = {rec.j_value:.12g}, residual = {rec.residual_norm:.3e}, "
        f"iterations = {rec.iterations}"
    )
    if not args.no_figures:
        from .figures import save_field_figure

        save_field_figure(rec.field, _outpath(cfg, "solve_field.png"),
                          title=f"J={rec.j_value:.6g}")
    return 0


def _monotone(seq, *, nondecreasing=True) -> bool:
    pairs = zip(seq, seq[1:])
    if nondecreasing:
        return all(b >= a for a, b in pairs)
    return all(b <= a for a, b in pairs)


def _cmd_sweep(cfg, args) -> int:
    grid = cfg.grid()
    p_start = cfg.parameters()
    p_end = cfg.end_parameters()
    records = continuation(p_start, p_end, cfg.sweep_steps, grid, cfg.solver())
    manifest, trend = [], []
    for i, rec in enumerate(records):
        row = _record_row(rec)
        row["converged"] = rec.converged
        manifest.append(row)
        write_field(
            _outpath(cfg, f"sweep_field_{i:03d}.txt"),
            rec.field,
            extra_comments=cfg.effective_lines()
            + [f"lambda1 = {rec.parameters.lambda1:.17g}",
               f"lambda2 = {rec.parameters.lambda2:.17g}"],
        )
        report = analyze_field(
            rec.field, rec.parameters,
            radius=cfg.ball_radius, threshold_factor=cfg.threshold_factor,
        )
        dominant = report.candidates[0] if report.candidates else None
        trend.append({
            "step": i,
            "lambda1": rec.parameters.lambda1,
            "lambda2": rec.parameters.lambda2,
            "supnorm": rec.sup_norm,
            "m1_dominant": dominant.m1 if dominant else float("nan"),
            "m2_dominant": dominant.m2 if dominant else float("nan"),
        })
    _write_csv(
        _outpath(cfg, "sweep_manifest.csv"), cfg, args,
        _SOLVE_COLUMNS + ("converged",), manifest,
    )
    tail = trend[-5:] if len(trend) >= 5 else trend
    footer = [
        "trend window = final {} steps".format(len(tail)),
        "supnorm_monotone_nondecreasing = {}".format(
            int(_monotone([r["supnorm"] for r in tail]))),
        "m1_dominant_monotone_nondecreasing = {}".format(
            int(_monotone([r["m1_dominant"] for r in tail]))),
    ]
    _write_csv(
        _outpath(cfg, "sweep_trend.csv"), cfg, args,
        ("step", "lambda1", "lambda2", "supnorm", "m1_dominant", "m2_dominant"),
        trend, footer,
    )
    print(f"sweep finished: {sum(r.converged for r in records)}/{len(records)} converged")
    if not args.no_figures:
        from .figures import save_sweep_figure

        save_sweep_figure(manifest, trend, _outpath(cfg, "sweep.png"))
    return 0


def _cmd_analyze(cfg, args) -> int:
    f = read_field(args.field)
    if cfg.gamma is None:
        raise ConfigError("analyze needs gamma (and lambda1, lambda2) in the config")
    base = cfg.parameters()
    p = Parameters(base.lambda1, base.lambda2, base.gamma, f.grid.volume)
    report = analyze_field(
        f, p, radius=cfg.ball_radius, threshold_factor=cfg.threshold_factor
    )
    rows = []
    for cand in report.candidates:
        rows.append({
            "px": cand.point[0],
            "py": cand.point[1],
            "m1": cand.m1,
            "m2": cand.m2,
            "identquad_residual": cand.check.residual,
            "flag_m1_ge_8pi": cand.check.m1_at_least_8pi,
            "flag_m2_ge_8pi_over_gamma": cand.check.m2_at_least_8pi_over_gamma,
            "flag_sum_ge_16pi": cand.check.sum_at_least_16pi,
        })
    footer = [
        f"totals total_m1 = {report.total_m1:.17g} total_m2 = {report.total_m2:.17g}"
    ]
    _write_csv(
        _outpath(cfg, "analyze.csv"), cfg, args,
        ("px", "py", "m1", "m2", "identquad_residual", "flag_m1_ge_8pi",
         "flag_m2_ge_8pi_over_gamma", "flag_sum_ge_16pi"),
        rows, footer,
    )
    print(f"candidates: {len(rows)}; totals m1 = {report.total_m1:.12g}, "
          f"m2 = {report.total_m2:.12g}")
    if not args.no_figures:
        from .figures import save_analysis_figure

        save_analysis_figure(report, f.grid, _outpath(cfg, "analyze.png"))
    return 0


_DISPATCH = {
    "mu1": _cmd_mu1,
    "region": _cmd_region,
    "bubble-scan": _cmd_bubble_scan,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "analyze": _cmd_analyze,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        sys.stderr.write("sinh-poisson: error: a subcommand is required\n")
        return 64
    try:
        cfg = _load_config(args)
        return _DISPATCH[args.command](cfg, args)
    except FieldFormatError as exc:
        sys.stderr.write(f"sinh-poisson: malformed field file: {exc}\n")
        return 65
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"sinh-poisson: {exc}\n")
        return 1
    except SolverError as exc:
        sys.stderr.write(f"sinh-poisson: solver failure: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
