"""Command-line entry point: ``synthpower generate|evaluate|report|validate``."""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import evaluation as ev
from .config import RunConfig, apply_overrides, load_config
from .core import ValidationError, nearest_grid_node
from .pipeline import DatasetBundle, assemble_location, read_bundle, write_bundle
from .sampler import read_catalog, sample_pv_meta, sample_wind_meta
from .wind_model import builtin_turbine_curve

KINDS = ("pv", "wind")


# --------------------------------------------------------------------------
# generate

def plan_plants(cfg: RunConfig) -> list[tuple[str, object, int]]:
    """(kind, plant meta, NWP grid node) for every requested plant."""
    catalog = read_catalog(cfg.catalog)
    nodes = cfg.grid.nodes()
    plan = []
    for kind, count in (("pv", cfg.pv_plants), ("wind", cfg.wind_plants)):
        for station in cfg.stations[:count]:
            if kind == "pv":
                plant = sample_pv_meta(cfg.seed, station.station_id, station.location)
            else:
                plant = sample_wind_meta(cfg.seed, station.station_id, station.location, catalog)
            plan.append((kind, plant, nearest_grid_node(station.location, nodes)))
    return plan


def _assemble(task):
    kind, plant, node, cfg = task
    curve = builtin_turbine_curve(plant.turbine_type) if kind == "wind" else None
    return assemble_location(
        kind, plant, cfg.seed, cfg.start, cfg.days, cfg.noise_level,
        cfg.smoothing_hours, nwp_key=f"node-{node}", curve=curve,
    )


def _workers(jobs) -> int:
    return jobs or os.cpu_count() or 1


def build_bundles(cfg: RunConfig) -> dict[str, DatasetBundle]:
    plan = plan_plants(cfg)
    tasks = [(kind, plant, node, cfg) for kind, plant, node in plan]
    n = _workers(cfg.jobs)
    if n <= 1 or len(tasks) <= 1:
        tables = [_assemble(t) for t in tasks]
    else:
        with ProcessPoolExecutor(n) as pool:
            tables = list(pool.map(_assemble, tasks))
    bundles = {}
    for (kind, plant, _), (inputs, targets) in zip(plan, tables):
        b = bundles.setdefault(kind, DatasetBundle(kind))
        b.plants.append(plant)
        b.inputs[plant.loc_id] = inputs
        b.targets[plant.loc_id] = targets
    return bundles


def cmd_generate(cfg: RunConfig, out: Path) -> int:
    bundles = build_bundles(cfg)
    for kind, bundle in bundles.items():
        write_bundle(bundle, out / kind)
        for plant in bundle.plants:
            tgt = bundle.targets[plant.loc_id]
            n_test = int(tgt["is_test"].sum())
            print(f"{kind} {plant.loc_id}: {len(tgt) - n_test} train / {n_test} test samples -> {out / kind}")
    return 0


# --------------------------------------------------------------------------
# evaluate / report

def _bundle_dirs(path: Path) -> list[Path]:
    if (path / "meta.csv").exists():
        return [path]
    dirs = [path / k for k in KINDS if (path / k / "meta.csv").exists()]
    if not dirs:
        raise ValidationError(f"no bundle found at {path} (expected meta.csv or pv/ and wind/ subdirectories)")
    return dirs


def write_report(results, stem: Path, by_season: bool = False) -> str:
    """Write ``<stem>.txt`` and ``<stem>.json``; returns the text."""
    reports = ev.report_tables(results, by_season=by_season)
    if by_season:
        text = "".join(f"== {s} ==\n{r.to_text()}\n" for s, r in reports.items())
        payload = "{\n" + ",\n".join(f'"{s}": {r.to_json()}' for s, r in reports.items()) + "\n}\n"
    else:
        text = reports.to_text()
        payload = reports.to_json() + "\n"
    stem.with_suffix(".txt").write_text(text)
    stem.with_suffix(".json").write_text(payload)
    return text


def cmd_evaluate(cfg: RunConfig, bundle_path: Path, out: Path, models=None, days=None, seasons=None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    failures = []
    for directory in _bundle_dirs(bundle_path):
        bundle = read_bundle(directory)
        kind_models = models or cfg.evaluate.models(bundle.kind)
        applicable = [m for m in kind_models if m in ev.MODELS[bundle.kind]]
        unknown = [m for m in kind_models if m not in ev.MODELS["pv"] + ev.MODELS["wind"]]
        if unknown:
            raise ValidationError(f"unknown model names: {', '.join(unknown)}")
        if not applicable:
            print(f"{bundle.kind}: none of the requested models apply, skipped")
            continue
        jobs = ev.expand_jobs(bundle, applicable, days or cfg.evaluate.training_days, seasons or cfg.evaluate.seasons)
        results, errors = ev.run_jobs(bundle, jobs, _workers(cfg.jobs), cfg.evaluate.gbrt, cfg.mclean_curves)
        failures.extend((bundle.kind, j, e) for j, e in errors)
        if results:
            ev.write_results(results, out / f"results_{bundle.kind}.csv")
            print(f"== {bundle.kind} ==")
            print(write_report(results, out / f"report_{bundle.kind}"))
    if failures:
        print(f"{len(failures)} job(s) failed:", file=sys.stderr)
        for kind, job, err in failures:
            sc = job.scenario
            print(f"  {kind} park {job.loc_id} {job.model} {sc.training_days}d {sc.season}: {err}", file=sys.stderr)
        return 1
    return 0


def cmd_report(results_path: Path, by_season: bool) -> int:
    results = ev.read_results(results_path)
    print(write_report(results, results_path.with_name(results_path.stem + "_report"), by_season))
    return 0


def cmd_validate(path: Path) -> int:
    for directory in _bundle_dirs(path):
        bundle = read_bundle(directory)
        rows = sum(len(t) for t in bundle.targets.values())
        print(f"{directory}: valid {bundle.kind} bundle, {len(bundle.plants)} locations, {rows} rows")
    return 0


# --------------------------------------------------------------------------
# argument parsing

def _csv_list(kind):
    def parse(text: str):
        try:
            return tuple(kind(v) for v in text.split(",") if v)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    common.add_argument("--out", type=Path, help="output directory")

    parser = argparse.ArgumentParser(prog="synthpower", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="simulate plants and write pv/ and wind/ bundles")
    g.add_argument("--days", type=int, help="number of simulated days")
    g.add_argument("--noise-level", type=float, help="relative NWP error scale")

    e = sub.add_parser("evaluate", parents=[common], help="run baselines and GBRT over training scenarios")
    e.add_argument("bundle", type=Path, help="bundle directory, or a directory holding pv/ and wind/")
    e.add_argument("--models", type=_csv_list(str), help="comma-separated model names")
    e.add_argument("--training-days", type=_csv_list(int), help="comma-separated subset of 7,14,30,60,90,365")
    e.add_argument("--seasons", type=_csv_list(str), help="comma-separated subset of DJF,MAM,JJA,SON")

    r = sub.add_parser("report", help="format a results CSV as tables")
    r.add_argument("results", type=Path)
    r.add_argument("--by-season", action="store_true", help="one table per season")

    v = sub.add_parser("validate", help="check a bundle directory")
    v.add_argument("bundle", type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.results, args.by_season)
        if args.command == "validate":
            return cmd_validate(args.bundle)
        flags = {"seed": args.seed, "jobs": args.jobs, "out": str(args.out) if args.out else None}
        if args.command == "generate":
            flags.update(days=args.days, noise_level=args.noise_level)
        cfg = apply_overrides(load_config(args.config), flags)
        if args.command == "generate":
            return cmd_generate(cfg, Path(cfg.out))
        for name in args.training_days or ():
            if name not in ev.TRAINING_DAYS:
                raise ValidationError(f"training days must be among {ev.TRAINING_DAYS}, got {name}")
        for name in args.seasons or ():
            if name not in ev.SEASONS:
                raise ValidationError(f"unknown season {name!r}")
        return cmd_evaluate(cfg, args.bundle, Path(cfg.out), args.models, args.training_days, args.seasons)
    except (ValidationError, KeyError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
