"""Command-line entry point.

Subcommands: ``run``, ``grid``, ``tables``, ``ostat``, ``figures`` and ``all``.
Outputs go under ``--out`` (default ``$EDEM_OUT_DIR`` or ``./results``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, loads_config, parse_seeds
from .experiments import (
    GRID_CB,
    GRID_SIGMA,
    GridSummary,
    aggregate,
    preset_by_name,
    preset_names,
    presets_for_run,
    run_batch,
    sensitivity_grid,
    summarize_runs,
)
from .io import read_dataset, read_table, write_aggregate, write_dataset, write_table, format_table
from .ostat import jensen_gap_check, rbar_stats, verify_closed_form

log = logging.getLogger("edem")

TABLE1_RUNS = (("Run 6", "run6"), ("Run 7 (C_b=+1)", "run7_cb+1"), ("Run 7 (C_b=-1)", "run7_cb-1"), ("Run 8", "run8"))
TABLE2_RUNS = ("run1", "run2", "run3", "run4", "run5A", "run5B", "run6", "run7_cb+1", "run7_cb0", "run7_cb-1", "run8")
FIGURES = (
    ("fig1_run1.svg", "de", ("run1",)),
    ("fig2_run2.svg", "de", ("run2",)),
    ("fig3_run3.svg", "de", ("run3",)),
    ("fig4_run4.svg", "de", ("run4",)),
    ("fig5_run5.svg", "shock", ("run5A", "run5B")),
    ("fig6_run6.svg", "edem", ("run6",)),
    ("fig7_run7.svg", "edem", ("run7_cb+1", "run7_cb0", "run7_cb-1")),
    ("fig8_run8.svg", "sigma", ("run8",)),
    ("fig9_grid.svg", "grid", ()),
)


class CliError(Exception):
    """A user-facing failure; reported without a traceback."""


def default_out() -> Path:
    return Path(os.environ.get("EDEM_OUT_DIR", "results"))


def dataset_path(out: Path, name: str) -> Path:
    return out / "datasets" / f"{name}.csv"


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    target = args.target
    if Path(target).is_file():
        try:
            config = loads_config(Path(target).read_text())
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot read config {target}: {exc}") from exc
    else:
        try:
            config = preset_by_name(target)
        except ConfigError as exc:
            raise CliError(f"{exc}; presets are {', '.join(preset_names())} or a config file path") from exc
    if args.seeds:
        config = config.replace(seeds=tuple(parse_seeds(args.seeds)))
    run_config(config, args.out)
    return 0


def run_config(config, out: Path) -> Path:
    t0 = time.perf_counter()
    dataset = run_batch(config)
    path = write_dataset(dataset_path(out, config.name), dataset)
    write_aggregate(out / "aggregates" / f"{config.name}_aggregate.csv", aggregate(dataset))
    log.info("%s: %d seeds x %d ticks in %.1fs -> %s", config.name, len(dataset.seeds), dataset.ticks,
             time.perf_counter() - t0, path)
    return path


def cmd_grid(args) -> int:
    seeds = parse_seeds(args.seeds) if args.seeds else None
    grid = sensitivity_grid(seeds=seeds, ticks=args.ticks)
    write_grid(args.out, grid)
    print(format_grid(grid))
    return 0


def write_grid(out: Path, grid: GridSummary) -> Path:
    rows = [
        (cb, s, float(grid.cells[i, j]), float(grid.log10[i, j]))
        for i, cb in enumerate(grid.c_b)
        for j, s in enumerate(grid.sigma)
    ]
    path = write_table(out / "tables" / "grid.csv", ("c_b", "sigma_bar", "median_ratio", "log10_median"), rows)
    summary = [
        ("fraction_above_1.5", grid.fraction_above(1.5)),
        ("fraction_above_10", grid.fraction_above(10.0)),
        ("max_cell", grid.max_cell),
        ("zero_column_max_count", grid.zero_column_max_count()),
    ]
    write_table(out / "tables" / "grid_summary.csv", ("statistic", "value"), summary)
    return path


def read_grid(out: Path) -> GridSummary:
    path = out / "tables" / "grid.csv"
    if not path.is_file():
        raise CliError(f"missing grid table {path}; run the 'grid' subcommand first")
    rows = read_table(path)
    c_b = tuple(sorted({float(r["c_b"]) for r in rows}))
    sigma = tuple(sorted({float(r["sigma_bar"]) for r in rows}))
    cells = np.empty((len(c_b), len(sigma)))
    for r in rows:
        cells[c_b.index(float(r["c_b"])), sigma.index(float(r["sigma_bar"]))] = float(r["median_ratio"])
    return GridSummary(c_b, sigma, cells)


def format_grid(grid: GridSummary) -> str:
    header = ["C_b \\ sigma"] + [f"{round(s * 100)}%" for s in grid.sigma]
    rows = [[f"{cb:+g}"] + [float(v) for v in grid.cells[i]] for i, cb in enumerate(grid.c_b)]
    lines = [format_table(header, rows, ".1f")]
    lines.append(f"cells > 1.5x: {grid.fraction_above(1.5):.0%}  cells > 10x: {grid.fraction_above(10):.0%}  "
                 f"max: {grid.max_cell:.1f}  C_b=0 column maxima: {grid.zero_column_max_count()}/{len(grid.sigma)}")
    return "\n".join(lines)


def load_available(out: Path, names: Sequence[str]) -> dict:
    found = {}
    for name in names:
        path = dataset_path(out, name)
        if path.is_file():
            found[name] = read_dataset(path)
    return found


def cmd_tables(args) -> int:
    out = args.out
    datasets = load_available(out, TABLE2_RUNS)
    if not datasets:
        raise CliError(f"no datasets under {out / 'datasets'}; run the presets first")

    table1 = []
    for label, name in TABLE1_RUNS:
        if name not in datasets:
            table1.append((label, None, None, None, None, None, "missing"))
            continue
        sample = rbar_stats(datasets[name])
        report = jensen_gap_check(sample)
        table1.append((label, sample.mean, sample.pr_above_one, sample.mean_log, sample.median, report.gap, ""))
    header1 = ("regime", "mean_rbar", "pr_rbar_gt_1", "mean_log_rbar", "median_rbar", "jensen_gap", "note")
    write_table(out / "tables" / "table1.csv", header1, table1)
    print(format_table(header1, table1))

    outcomes = summarize_runs(datasets, TABLE2_RUNS)
    table2 = [(o.label, o.variant, o.metric, o.value, o.low, o.high) for o in outcomes]
    header2 = ("run", "variant", "metric", "value", "low", "high")
    write_table(out / "tables" / "table2.csv", header2, table2)
    print()
    print(format_table(header2, table2))
    missing = [o.label for o in outcomes if o.missing]
    if missing:
        print(f"missing datasets: {', '.join(missing)}", file=sys.stderr)
        return 1
    return 0


def cmd_ostat(args) -> int:
    rows = verify_closed_form(samples=args.samples, seed=args.seed)
    header = ("n", "sigma", "closed_form", "mc_mean", "se", "z", "result")
    table = [(r.n, r.sigma, r.closed_form, r.mc_mean, r.se, r.z, "pass" if r.passed else "FAIL") for r in rows]
    write_table(args.out / "tables" / "ostat.csv", header, table)
    print(format_table(header, table, ".6f"))
    return 0 if all(r.passed for r in rows) else 1


def cmd_figures(args) -> int:
    from . import figures

    out = args.out
    status = 0
    for filename, kind, names in FIGURES:
        try:
            if kind == "grid":
                fig = figures.grid_figure(read_grid(out))
            else:
                datasets = load_available(out, names)
                if len(datasets) != len(names):
                    missing = [n for n in names if n not in datasets]
                    raise CliError(f"missing datasets {missing}")
                dss = [datasets[n] for n in names]
                if any(ds.ticks == 0 for ds in dss):
                    raise CliError("empty dataset")
                if kind == "de":
                    fig = figures.de_figure(dss[0])
                elif kind == "shock":
                    fig = figures.shock_figure(*dss)
                elif kind == "edem":
                    labels = [n.split("_", 1)[-1] if "_" in n else n for n in names]
                    fig = figures.edem_figure(dss, labels)
                else:
                    fig = figures.edem_figure(dss, sigma_panel=True)
        except CliError as exc:
            print(f"{filename}: skipped ({exc})", file=sys.stderr)
            status = 1
            continue
        path = figures.save(fig, out / "figures" / filename)
        log.info("wrote %s", path)
    return status


def cmd_all(args) -> int:
    t0 = time.perf_counter()
    for run_id in range(1, 9):
        for config in presets_for_run(run_id):
            run_config(config, args.out)
    t_grid = time.perf_counter()
    grid = sensitivity_grid()
    write_grid(args.out, grid)
    log.info("grid: %d cells in %.1fs", grid.cells.size, time.perf_counter() - t_grid)
    print(format_grid(grid))
    status = cmd_tables(args)
    args.samples, args.seed = 1_000_000, 0
    status |= cmd_ostat(args)
    status |= cmd_figures(args)
    print(f"all outputs written to {args.out} in {time.perf_counter() - t0:.0f}s")
    return status


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edem", description="Agent-based housing market simulator and experiment harness")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", type=Path, default=None, help="output root (default $EDEM_OUT_DIR or ./results)")

    p = sub.add_parser("run", help="run one preset or config file over its seeds")
    p.add_argument("target", help=f"preset ({', '.join(preset_names())}) or path to a key = value config file")
    p.add_argument("--seeds", help="seed list such as 0,1,2 or 0-9 (overrides the preset)")
    add_out(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help=f"sensitivity sweep over C_b {GRID_CB} x sigma {GRID_SIGMA}")
    p.add_argument("--seeds", help="seed list (default 0-4)")
    p.add_argument("--ticks", type=int, default=None, help="ticks per cell (default 1500)")
    add_out(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("tables", help="r-bar table and per-run outcome table from saved datasets")
    add_out(p)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("ostat", help="closed-form max-bid bias against a Monte Carlo oracle")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=cmd_ostat)

    p = sub.add_parser("figures", help="render SVG figures from saved datasets")
    add_out(p)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("all", help="every preset, the grid, the tables, the oracle check and the figures")
    add_out(p)
    p.set_defaults(func=cmd_all)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.out is None:
        args.out = default_out()
    try:
        return args.func(args)
    except (CliError, ConfigError, OSError, ValueError) as exc:
        print(f"edem: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
