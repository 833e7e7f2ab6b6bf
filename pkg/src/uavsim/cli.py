"""Command-line entry point: ``uavsim simulate | compare | export-plot``.

Exit codes: 0 success, 2 validation error, 3 runtime error, 4 no overlap.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import (
    ALIGN_MODES,
    PLOT_KINDS,
    MappingError,
    NoOverlap,
    align,
    compare,
    export_plot_series,
    fit_offsets,
    load_column_map,
    read_emulation_csv,
    trace_from_records,
    write_plot_series,
)
from .engine import SimulationError, run
from .logio import LogFormatError, read_log, write_log
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_NO_OVERLAP = 4


def _err(msg: str) -> None:
    print(f"uavsim: {msg}", file=sys.stderr)


def _manifest(scenario_path: Path, out_path: Path, n_records: int, complete: bool) -> dict:
    return {
        "scenario": str(scenario_path),
        "output": str(out_path),
        "tool_version": __version__,
        "scenario_sha256": hashlib.sha256(scenario_path.read_bytes()).hexdigest(),
        "record_count": n_records,
        "complete": complete,
    }


def simulate_one(scenario_path: str | Path, out_path: str | Path) -> int:
    scenario_path, out_path = Path(scenario_path), Path(out_path)
    try:
        scenario = load_scenario(scenario_path)
    except ScenarioError as exc:
        _err(f"{scenario_path}: invalid scenario: {exc}")
        return EXIT_VALIDATION
    code = EXIT_OK
    try:
        records = run(scenario)
    except SimulationError as exc:
        _err(f"{scenario_path}: simulation aborted at {exc}")
        records, code = exc.records, EXIT_RUNTIME
    except ValueError as exc:
        _err(f"{scenario_path}: invalid scenario: {exc}")
        return EXIT_VALIDATION
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_log(out_path, records, scenario.bs_ids)
    manifest = _manifest(scenario_path, out_path, len(records), code == EXIT_OK)
    Path(f"{out_path}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return code


def _simulate_job(args: tuple[str, str]) -> int:
    return simulate_one(*args)


def cmd_simulate(ns: argparse.Namespace) -> int:
    scenarios = ns.scenario
    if len(scenarios) == 1:
        return simulate_one(scenarios[0], ns.out)
    outdir = Path(ns.out)
    jobs = [(s, str(outdir / f"{Path(s).stem}.csv")) for s in scenarios]
    if len({j[1] for j in jobs}) != len(jobs):
        _err("scenario file names must be distinct when simulating a batch")
        return EXIT_VALIDATION
    if ns.jobs > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            codes = list(pool.map(_simulate_job, jobs))
    else:
        codes = [_simulate_job(j) for j in jobs]
    return max(codes)


def cmd_compare(ns: argparse.Namespace) -> int:
    if ns.map is None:
        _err("--map is required to read the emulation CSV")
        return EXIT_VALIDATION
    try:
        sim_records, _ = read_log(ns.sim)
        cmap = load_column_map(ns.map)
        emu = read_emulation_csv(ns.emu, cmap)
    except (OSError, LogFormatError, MappingError) as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    try:
        pairs = align(trace_from_records(sim_records), emu, ns.mode, ns.tolerance)
    except NoOverlap as exc:
        _err(str(exc))
        return EXIT_NO_OVERLAP
    except ValueError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    report = compare(pairs).as_dict()
    report["mode"] = ns.mode
    report["tolerance"] = ns.tolerance
    if ns.fit_offsets:
        try:
            report["fitted_offsets_db"] = fit_offsets(pairs)
        except ValueError as exc:
            report["fitted_offsets_db"] = None
            _err(f"offset fit skipped: {exc}")
    text = json.dumps(report, indent=2) + "\n"
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_plot(ns: argparse.Namespace) -> int:
    if ns.kind not in PLOT_KINDS:
        _err(f"unknown kind {ns.kind!r}; expected one of {', '.join(PLOT_KINDS)}")
        return EXIT_VALIDATION
    try:
        records, _ = read_log(ns.log)
    except (OSError, LogFormatError) as exc:
        _err(f"cannot parse log {ns.log}: {exc}")
        return EXIT_VALIDATION
    for p in write_plot_series(export_plot_series(records, ns.kind), ns.outdir, ns.kind):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavsim", description="UAV LTE link simulator and log comparison")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run scenario(s) and write log CSV + manifest")
    p.add_argument("--scenario", action="append", required=True, help="scenario JSON (repeat for a batch)")
    p.add_argument("--out", required=True, help="log CSV path, or output directory for a batch")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for a batch")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare a simulation log against an emulation CSV")
    p.add_argument("--sim", required=True)
    p.add_argument("--emu", required=True)
    p.add_argument("--map", help="JSON column mapping for the emulation CSV")
    p.add_argument("--mode", choices=ALIGN_MODES, default="time")
    p.add_argument("--tolerance", type=float, default=0.5, help="seconds (time) or bucket meters (distance)")
    p.add_argument("--fit-offsets", action="store_true", help="also report least-squares per-BS offsets")
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-plot", help="write per-BS plot series CSVs")
    p.add_argument("--log", required=True)
    p.add_argument("--kind", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_export_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
