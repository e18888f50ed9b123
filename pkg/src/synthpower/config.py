"""Run configuration: YAML file, environment overrides, and validation.

Every problem is reported with the file and line it comes from, and the
whole file is checked before any work starts.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from .core import GeoLocation, ValidationError
from .evaluation import MODELS, SEASONS, TRAINING_DAYS, GbrtSettings

ENV_PREFIX = "SYNTHPOWER_"


@dataclass(frozen=True)
class Station:
    station_id: int
    name: str
    location: GeoLocation


# Synoptic-style station sites spread over Germany.
DEFAULT_STATIONS = (
    Station(1, "north-sea-coast", GeoLocation(53.71, 7.15, 5.0)),
    Station(2, "baltic-coast", GeoLocation(54.18, 12.08, 4.0)),
    Station(3, "north-german-plain", GeoLocation(52.93, 10.08, 60.0)),
    Station(4, "brandenburg", GeoLocation(52.21, 14.12, 98.0)),
    Station(5, "lower-rhine", GeoLocation(51.50, 6.55, 30.0)),
    Station(6, "central-uplands", GeoLocation(50.98, 10.96, 316.0)),
    Station(7, "saxony", GeoLocation(51.13, 13.75, 227.0)),
    Station(8, "upper-rhine", GeoLocation(49.04, 8.36, 112.0)),
    Station(9, "franconia", GeoLocation(49.50, 11.05, 314.0)),
    Station(10, "alpine-foreland", GeoLocation(48.16, 11.54, 515.0)),
)


@dataclass(frozen=True)
class GridConfig:
    """Regular NWP grid in degrees; forecasts come from the node nearest to a station."""

    lat_min: float = 47.0
    lat_max: float = 55.5
    lon_min: float = 5.5
    lon_max: float = 15.5
    spacing_deg: float = 0.0625

    def nodes(self) -> list[GeoLocation]:
        lats = np.arange(self.lat_min, self.lat_max + 1e-9, self.spacing_deg)
        lons = np.arange(self.lon_min, self.lon_max + 1e-9, self.spacing_deg)
        return [GeoLocation(float(a), float(o)) for a in lats for o in lons]


@dataclass(frozen=True)
class EvaluateConfig:
    pv_models: tuple = MODELS["pv"]
    wind_models: tuple = MODELS["wind"]
    training_days: tuple = TRAINING_DAYS
    seasons: tuple = tuple(SEASONS)
    gbrt: GbrtSettings = GbrtSettings()

    def models(self, kind: str) -> tuple:
        return self.pv_models if kind == "pv" else self.wind_models


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    start: datetime = datetime(2019, 10, 2, tzinfo=timezone.utc)
    days: int = 90
    noise_level: float = 0.3
    smoothing_hours: int = 3
    pv_plants: int = 5
    wind_plants: int = 5
    stations: tuple = DEFAULT_STATIONS
    grid: GridConfig = GridConfig()
    catalog: str | None = None
    mclean_curves: str | None = None
    jobs: int | None = None
    out: str = "out"
    # the default window only has autumn training days
    evaluate: EvaluateConfig = field(default_factory=lambda: EvaluateConfig(seasons=("SON",)))


# --------------------------------------------------------------------------
# parsing

class _Errors:
    def __init__(self, source: str):
        self.source = source
        self.items: list[str] = []

    def add(self, node, message: str) -> None:
        line = node.start_mark.line + 1 if node is not None else 0
        self.items.append(f"{self.source}:{line}: {message}")


def _mapping(node, errs: _Errors, where: str) -> dict:
    if not isinstance(node, yaml.MappingNode):
        errs.add(node, f"{where} must be a mapping")
        return {}
    out = {}
    for key, value in node.value:
        if key.value in out:
            errs.add(key, f"duplicate key {key.value!r}")
        out[key.value] = (key, value)
    return out


def _scalar(node, errs: _Errors, key: str, kind, check=None, hint: str = ""):
    data = yaml.safe_load(yaml.serialize(node)) if node is not None else None
    ok = isinstance(data, kind) and not (kind in (int, float) and isinstance(data, bool))
    if kind is float and isinstance(data, int) and not isinstance(data, bool):
        data, ok = float(data), True
    if not ok or (check is not None and not check(data)):
        errs.add(node, f"{key}: expected {hint or kind.__name__}, got {data!r}")
        return None
    return data


def _seq(node, errs: _Errors, key: str, kind, check=None, hint: str = ""):
    if not isinstance(node, yaml.SequenceNode) or not node.value:
        errs.add(node, f"{key}: expected a non-empty list")
        return None
    items = [_scalar(v, errs, key, kind, check, hint) for v in node.value]
    return None if any(i is None for i in items) else tuple(items)


def _date(node, errs: _Errors, key: str):
    data = yaml.safe_load(yaml.serialize(node))
    if isinstance(data, datetime):
        return data if data.tzinfo else data.replace(tzinfo=timezone.utc)
    if isinstance(data, date):
        return datetime(data.year, data.month, data.day, tzinfo=timezone.utc)
    errs.add(node, f"{key}: expected a date like 2019-10-02, got {data!r}")
    return None


def _unknown(entries: dict, allowed, errs: _Errors, where: str) -> None:
    for name, (key, _) in entries.items():
        if name not in allowed:
            errs.add(key, f"unknown key {name!r} in {where}; allowed: {', '.join(sorted(allowed))}")


def _positive(v):
    return v > 0


def _parse_stations(node, errs: _Errors):
    if not isinstance(node, yaml.SequenceNode) or not node.value:
        errs.add(node, "stations: expected a non-empty list")
        return None
    out = []
    for item in node.value:
        e = _mapping(item, errs, "station")
        _unknown(e, {"id", "name", "latitude", "longitude", "altitude"}, errs, "station")
        missing = [k for k in ("id", "latitude", "longitude") if k not in e]
        if missing:
            errs.add(item, f"station lacks {', '.join(missing)}")
            continue
        sid = _scalar(e["id"][1], errs, "id", int)
        lat = _scalar(e["latitude"][1], errs, "latitude", float, lambda v: -90 <= v <= 90, "latitude in [-90, 90]")
        lon = _scalar(e["longitude"][1], errs, "longitude", float, lambda v: -180 <= v <= 180, "longitude in [-180, 180]")
        alt = _scalar(e["altitude"][1], errs, "altitude", float) if "altitude" in e else 0.0
        name = _scalar(e["name"][1], errs, "name", str) if "name" in e else f"station-{sid}"
        if None in (sid, lat, lon, alt, name):
            continue
        out.append(Station(sid, name, GeoLocation(lat, lon, alt)))
    ids = [s.station_id for s in out]
    if len(set(ids)) != len(ids):
        errs.add(node, "stations: duplicate id")
    return tuple(out)


def _parse_evaluate(node, errs: _Errors, base: EvaluateConfig) -> EvaluateConfig:
    e = _mapping(node, errs, "evaluate")
    allowed = {"pv_models", "wind_models", "training_days", "seasons", "lr_grid", "depth_grid", "folds", "n_estimators"}
    _unknown(e, allowed, errs, "evaluate")
    cfg = base
    for kind in ("pv", "wind"):
        key = f"{kind}_models"
        if key in e:
            valid = MODELS[kind]
            v = _seq(e[key][1], errs, key, str, lambda m: m in valid, f"one of {', '.join(valid)}")
            if v is not None:
                cfg = replace(cfg, **{key: v})
    if "training_days" in e:
        v = _seq(e["training_days"][1], errs, "training_days", int, lambda d: d in TRAINING_DAYS, f"one of {TRAINING_DAYS}")
        if v is not None:
            cfg = replace(cfg, training_days=v)
    if "seasons" in e:
        v = _seq(e["seasons"][1], errs, "seasons", str, lambda s: s in SEASONS, f"one of {', '.join(SEASONS)}")
        if v is not None:
            cfg = replace(cfg, seasons=v)
    g = cfg.gbrt
    if "lr_grid" in e:
        v = _seq(e["lr_grid"][1], errs, "lr_grid", float, _positive, "positive number")
        if v is not None:
            g = replace(g, lr_grid=v)
    if "depth_grid" in e:
        v = _seq(e["depth_grid"][1], errs, "depth_grid", int, _positive, "positive integer")
        if v is not None:
            g = replace(g, depth_grid=v)
    for key in ("folds", "n_estimators"):
        if key in e:
            v = _scalar(e[key][1], errs, key, int, lambda x: x >= (2 if key == "folds" else 1), "integer >= 2" if key == "folds" else "positive integer")
            if v is not None:
                g = replace(g, **{key: v})
    return replace(cfg, gbrt=g)


def _parse_grid(node, errs: _Errors) -> GridConfig:
    e = _mapping(node, errs, "nwp_grid")
    fields_ = ("lat_min", "lat_max", "lon_min", "lon_max", "spacing_deg")
    _unknown(e, set(fields_), errs, "nwp_grid")
    values = {}
    for k in fields_:
        if k in e:
            v = _scalar(e[k][1], errs, k, float)
            if v is not None:
                values[k] = v
    grid = replace(GridConfig(), **values)
    if grid.spacing_deg <= 0 or grid.lat_min > grid.lat_max or grid.lon_min > grid.lon_max:
        errs.add(node, "nwp_grid: need spacing_deg > 0 and min <= max bounds")
    return grid


TOP_LEVEL = {
    "seed", "start", "days", "noise_level", "smoothing_hours", "plants", "stations",
    "nwp_grid", "catalog", "mclean_curves", "jobs", "out", "evaluate",
}


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse YAML text into a RunConfig; all problems are raised together."""
    errs = _Errors(source)
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 0
        raise ValidationError(f"{source}:{line}: YAML syntax error: {getattr(exc, 'problem', exc)}") from exc
    cfg = RunConfig()
    if root is None:
        return cfg
    entries = _mapping(root, errs, "configuration")
    _unknown(entries, TOP_LEVEL, errs, "configuration")
    simple = {
        "seed": (int, lambda v: v >= 0, "non-negative integer"),
        "days": (int, _positive, "positive integer"),
        "noise_level": (float, lambda v: v >= 0, "non-negative number"),
        "smoothing_hours": (int, _positive, "positive integer"),
        "jobs": (int, _positive, "positive integer"),
        "out": (str, None, "path"),
        "catalog": (str, None, "path"),
        "mclean_curves": (str, None, "path"),
    }
    updates = {}
    for key, (kind, check, hint) in simple.items():
        if key in entries:
            v = _scalar(entries[key][1], errs, key, kind, check, hint)
            if v is not None:
                updates[key] = v
    if "start" in entries:
        v = _date(entries["start"][1], errs, "start")
        if v is not None:
            updates["start"] = v
    if "plants" in entries:
        p = _mapping(entries["plants"][1], errs, "plants")
        _unknown(p, {"pv", "wind"}, errs, "plants")
        for kind in ("pv", "wind"):
            if kind in p:
                v = _scalar(p[kind][1], errs, kind, int, lambda x: x >= 0, "non-negative integer")
                if v is not None:
                    updates[f"{kind}_plants"] = v
    if "stations" in entries:
        v = _parse_stations(entries["stations"][1], errs)
        if v is not None:
            updates["stations"] = v
    if "nwp_grid" in entries:
        updates["grid"] = _parse_grid(entries["nwp_grid"][1], errs)
    if "evaluate" in entries:
        updates["evaluate"] = _parse_evaluate(entries["evaluate"][1], errs, cfg.evaluate)
    cfg = replace(cfg, **updates)
    need = max(cfg.pv_plants, cfg.wind_plants)
    if need > len(cfg.stations):
        node = entries["plants"][1] if "plants" in entries else root
        errs.add(node, f"plants: {need} plants per source requested but only {len(cfg.stations)} stations")
    if errs.items:
        raise ValidationError("\n".join(errs.items))
    return cfg


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} not found")
    return parse_config(path.read_text(), str(path))


ENV_KEYS = {"SEED": ("seed", int), "JOBS": ("jobs", int), "OUT": ("out", str),
            "DAYS": ("days", int), "NOISE_LEVEL": ("noise_level", float)}


def apply_overrides(cfg: RunConfig, flags: dict, environ=None) -> RunConfig:
    """Layer ``SYNTHPOWER_*`` environment values, then command-line flags, over the file."""
    environ = os.environ if environ is None else environ
    updates = {}
    for suffix, (key, kind) in ENV_KEYS.items():
        raw = environ.get(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        try:
            updates[key] = kind(raw)
        except ValueError as exc:
            raise ValidationError(f"{ENV_PREFIX}{suffix}: cannot parse {raw!r} as {kind.__name__}") from exc
    updates.update({k: v for k, v in flags.items() if v is not None})
    cfg = replace(cfg, **updates)
    if cfg.seed < 0 or cfg.days < 1 or cfg.noise_level < 0 or (cfg.jobs is not None and cfg.jobs < 1):
        raise ValidationError("seed must be >= 0, days >= 1, noise_level >= 0 and jobs >= 1")
    return cfg

