"""Physical baselines, the truncated-training experiment runner, and report tables."""
from __future__ import annotations

import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from datetime import timedelta
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .core import (
    DIFFUSE,
    DIRECT,
    FEATURES,
    U100,
    V100,
    NwpRecord,
    PowerSeries,
    ValidationError,
    interpolate_15min,
    to_datetime64,
)
from .gbrt import (
    DEFAULT_DEPTHS,
    DEFAULT_FOLDS,
    DEFAULT_LEARNING_RATES,
    DEFAULT_N_ESTIMATORS,
    fit_gbrt,
    grid_search_cv,
    predict,
)
from .metrics import nrmse, skill
from .pipeline import NWP_WIND_HEIGHT_M, TEST_START, DatasetBundle, test_flags
from .pv_model import PvPlantMeta, normalized_pv_output
from .wind_model import (
    MCLEAN_TERRAINS,
    PowerCurve,
    WindPlantMeta,
    builtin_turbine_curve,
    extrapolate_wind,
    load_mclean_curve,
    power_curve_lookup,
)

__all__ = [
    "nrmse",
    "skill",
    "ScenarioConfig",
    "ScenarioResult",
    "physical_baseline_pv",
    "physical_baseline_wind",
    "run_scenario",
    "run_jobs",
    "report_tables",
]

TRAINING_DAYS = (7, 14, 30, 60, 90, 365)
FULL = 365
SEASONS = {"DJF": (12, 1, 2), "MAM": (3, 4, 5), "JJA": (6, 7, 8), "SON": (9, 10, 11)}
ALL_SEASONS = "all"
MCLEAN_MODELS = {f"mclean_{t.lower()}": t for t in MCLEAN_TERRAINS}
MODELS = {"pv": ("gbrt", "pv_physical"), "wind": ("gbrt", "enercon", *MCLEAN_MODELS)}
PHYSICAL_MODELS = {"pv_physical", "enercon", *MCLEAN_MODELS}


@dataclass(frozen=True)
class ScenarioConfig:
    training_days: int
    season: str = ALL_SEASONS

    def __post_init__(self):
        if self.training_days not in TRAINING_DAYS:
            raise ValueError(f"training_days must be one of {TRAINING_DAYS}")
        if self.training_days == FULL:
            object.__setattr__(self, "season", ALL_SEASONS)
        elif self.season not in SEASONS:
            raise ValueError(f"season must be one of {tuple(SEASONS)}")

    @property
    def resolution_minutes(self) -> int:
        return 60 if self.training_days == FULL else 15


@dataclass(frozen=True)
class ScenarioResult:
    park: int
    model: str
    season: str
    training_days: int
    nrmse: float


@dataclass(frozen=True)
class GbrtSettings:
    """Grid-search settings for the GBRT path; defaults are the full benchmark protocol."""

    lr_grid: tuple = DEFAULT_LEARNING_RATES
    depth_grid: tuple = DEFAULT_DEPTHS
    folds: int = DEFAULT_FOLDS
    n_estimators: int = DEFAULT_N_ESTIMATORS


# --------------------------------------------------------------------------
# physical baselines

def _nwp_frame(nwp, kind: str) -> pd.DataFrame:
    if isinstance(nwp, pd.DataFrame):
        frame = nwp
    else:
        records: Sequence[NwpRecord] = list(nwp)
        if any(r.kind != kind for r in records):
            raise ValidationError(f"NWP records do not follow the {kind} schema")
        frame = pd.DataFrame([dict(r.features) for r in records], columns=list(FEATURES[kind]))
        frame.insert(0, "fcst_time", pd.to_datetime(to_datetime64([r.fcst_time for r in records])).tz_localize("UTC"))
    missing = [c for c in FEATURES[kind] if c not in frame.columns]
    if missing:
        raise ValidationError(f"NWP input lacks {kind} features {missing}")
    return frame


def _series(frame: pd.DataFrame, pw) -> PowerSeries:
    times = to_datetime64(frame["fcst_time"])
    return PowerSeries(times, np.asarray(pw, dtype=float), test_flags(times))


def physical_baseline_pv(nwp, meta: PvPlantMeta) -> PowerSeries:
    """Run the target-synthesis PV chain on forecast irradiance and sun angles."""
    frame = _nwp_frame(nwp, "pv")
    dhi = frame[DIFFUSE].to_numpy(dtype=float)
    ghi = frame[DIRECT].to_numpy(dtype=float) + dhi
    pw = normalized_pv_output(
        None, ghi, dhi, meta,
        zenith=frame["solar_zenith"].to_numpy(dtype=float),
        azimuth=frame["solar_azimuth"].to_numpy(dtype=float),
    )
    return _series(frame, pw)


def physical_baseline_wind(nwp, meta: WindPlantMeta, curve: PowerCurve) -> PowerSeries:
    """Power-curve lookup of the ~100 m forecast wind extrapolated to hub height."""
    frame = _nwp_frame(nwp, "wind")
    speed = np.hypot(frame[U100].to_numpy(dtype=float), frame[V100].to_numpy(dtype=float))
    u_hub = extrapolate_wind(speed, meta.hub_height_m, z_ref=NWP_WIND_HEIGHT_M)
    return _series(frame, power_curve_lookup(u_hub, curve))


def curve_for(model_kind: str, meta: WindPlantMeta, mclean_source=None) -> PowerCurve:
    if model_kind == "enercon":
        return builtin_turbine_curve(meta.turbine_type)
    return load_mclean_curve(MCLEAN_MODELS[model_kind], mclean_source)


# --------------------------------------------------------------------------
# scenario splitting

def training_mask(times, scenario: ScenarioConfig) -> np.ndarray:
    """Rows of the (already test-free) training table used by a scenario.

    Truncated scenarios keep the ``training_days`` calendar days nearest
    before the test start whose month lies in the season, reaching back into
    earlier years when the season is not adjacent.
    """
    t = to_datetime64(times)
    if scenario.training_days == FULL:
        return np.ones(len(t), dtype=bool)
    months = SEASONS[scenario.season]
    days = t.astype("datetime64[D]")
    if len(days) == 0:
        return np.zeros(0, dtype=bool)
    earliest = days.min()
    chosen = []
    day = np.datetime64(TEST_START.date()) - np.timedelta64(1, "D")
    while len(chosen) < scenario.training_days and day >= earliest:
        if day.astype(object).month in months:
            chosen.append(day)
        day -= np.timedelta64(1, "D")
    return np.isin(days, np.array(chosen, dtype="datetime64[D]"))


def _segments(secs: np.ndarray) -> list[slice]:
    breaks = np.flatnonzero(np.diff(secs) != 3600) + 1
    bounds = [0, *breaks.tolist(), len(secs)]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def interpolate_table_15min(inputs: pd.DataFrame, targets: pd.DataFrame) -> tuple[pd.DataFrame, pd.DataFrame]:
    """15-minute linear interpolation of aligned input/target tables.

    Each gap-free hourly run is interpolated separately. Forecast horizons
    continue from the earlier row instead of blending across run changes.
    """
    secs = to_datetime64(inputs["fcst_time"]).astype(np.int64)
    feats = [c for c in inputs.columns if c not in ("fcst_time", "nwp_fcst_horiz_hours")]
    frac = np.array([0.0, 0.25, 0.5, 0.75])
    in_parts, tgt_parts = [], []
    for seg in _segments(secs):
        s = secs[seg]
        tgt = targets.iloc[seg]
        if len(s) < 2:
            in_parts.append(inputs.iloc[seg])
            tgt_parts.append(tgt)
            continue
        series = interpolate_15min(PowerSeries(s.astype("datetime64[s]"), tgt["pw"].to_numpy(), tgt["is_test"].to_numpy()))
        values = inputs[feats].iloc[seg].to_numpy(dtype=float)
        lo, hi = values[:-1], values[1:]
        interp = (lo[:, None, :] + frac[None, :, None] * (hi - lo)[:, None, :]).reshape(-1, len(feats))
        interp = np.vstack([interp, values[-1:]])
        hz = inputs["nwp_fcst_horiz_hours"].iloc[seg].to_numpy(dtype=float)
        horizons = np.append((hz[:-1, None] + frac[None, :]).ravel(), hz[-1])
        times = pd.to_datetime(series.times).tz_localize("UTC")
        block = pd.DataFrame(interp, columns=feats)
        block.insert(0, "nwp_fcst_horiz_hours", horizons)
        block.insert(0, "fcst_time", times)
        in_parts.append(block[list(inputs.columns)])
        tgt_parts.append(pd.DataFrame({"fcst_time": times, "pw": series.pw, "is_test": series.is_test}))
    return (
        pd.concat(in_parts, ignore_index=True),
        pd.concat(tgt_parts, ignore_index=True),
    )


@dataclass
class ScenarioSplit:
    train_inputs: pd.DataFrame
    train_targets: pd.DataFrame
    test_inputs: pd.DataFrame
    test_targets: pd.DataFrame


def split_scenario(bundle: DatasetBundle, loc_id, scenario: ScenarioConfig) -> ScenarioSplit:
    inputs = bundle.inputs[loc_id]
    targets = bundle.targets[loc_id]
    test = targets["is_test"].to_numpy(dtype=bool)
    train_in, train_tgt = inputs[~test], targets[~test]
    keep = training_mask(train_in["fcst_time"], scenario)
    train_in = train_in[keep].reset_index(drop=True)
    train_tgt = train_tgt[keep].reset_index(drop=True)
    if len(train_in) == 0:
        raise ValueError(
            f"park {loc_id}: empty training window for {scenario.training_days} days ({scenario.season})"
        )
    if scenario.resolution_minutes == 15:
        train_in, train_tgt = interpolate_table_15min(train_in, train_tgt)
    return ScenarioSplit(
        train_in,
        train_tgt,
        inputs[test].reset_index(drop=True),
        targets[test].reset_index(drop=True),
    )


# --------------------------------------------------------------------------
# experiment runner

def feature_matrix(inputs: pd.DataFrame) -> np.ndarray:
    return inputs.drop(columns="fcst_time").to_numpy(dtype=float)


def forecast(bundle: DatasetBundle, loc_id, model_kind: str, split: ScenarioSplit,
             gbrt: GbrtSettings = GbrtSettings(), mclean_source=None) -> np.ndarray:
    """Predictions of one model on the test inputs of a split."""
    if model_kind not in MODELS[bundle.kind]:
        raise ValueError(f"model {model_kind!r} not available for {bundle.kind} bundles")
    plant = bundle.plant(loc_id)
    if model_kind == "pv_physical":
        return physical_baseline_pv(split.test_inputs, plant).pw
    if model_kind in PHYSICAL_MODELS:
        return physical_baseline_wind(split.test_inputs, plant, curve_for(model_kind, plant, mclean_source)).pw
    X = feature_matrix(split.train_inputs)
    y = split.train_targets["pw"].to_numpy(dtype=float)
    cfg = grid_search_cv(X, y, gbrt.lr_grid, gbrt.depth_grid, gbrt.folds, gbrt.n_estimators)
    model = fit_gbrt(X, y, cfg)
    return predict(model, feature_matrix(split.test_inputs))


def run_scenario(bundle: DatasetBundle, loc_id, model_kind: str, scenario: ScenarioConfig,
                 gbrt: GbrtSettings = GbrtSettings(), mclean_source=None) -> ScenarioResult:
    """nRMSE of one model for one park on the flagged test rows."""
    split = split_scenario(bundle, loc_id, scenario)
    if len(split.test_targets) == 0:
        raise ValueError(f"park {loc_id}: no test rows")
    yhat = forecast(bundle, loc_id, model_kind, split, gbrt, mclean_source)
    err = nrmse(split.test_targets["pw"].to_numpy(dtype=float), yhat)
    return ScenarioResult(int(loc_id), model_kind, scenario.season, scenario.training_days, err)


@dataclass(frozen=True)
class Job:
    loc_id: int
    model: str
    scenario: ScenarioConfig


def expand_jobs(bundle: DatasetBundle, models: Iterable[str], days: Iterable[int], seasons: Iterable[str]) -> list[Job]:
    scenarios = []
    for d in days:
        if d == FULL:
            scenarios.append(ScenarioConfig(FULL))
        else:
            scenarios.extend(ScenarioConfig(d, s) for s in seasons)
    models = list(models)
    for m in models:
        if m not in MODELS[bundle.kind]:
            raise ValueError(f"unknown model {m!r} for {bundle.kind} bundles; choose from {MODELS[bundle.kind]}")
    return [Job(p.loc_id, m, sc) for p in bundle.plants for sc in scenarios for m in models]


_WORKER_STATE: dict = {}


def _init_worker(bundle, gbrt, mclean_source):
    _WORKER_STATE.update(bundle=bundle, gbrt=gbrt, mclean_source=mclean_source)


def _run_job(job: Job):
    try:
        res = run_scenario(_WORKER_STATE["bundle"], job.loc_id, job.model, job.scenario,
                           _WORKER_STATE["gbrt"], _WORKER_STATE["mclean_source"])
        return job, res, None
    except Exception as exc:  # reported per job by the caller
        return job, None, f"{type(exc).__name__}: {exc}"


def run_jobs(bundle: DatasetBundle, jobs: Sequence[Job], n_workers: int | None = None,
             gbrt: GbrtSettings = GbrtSettings(), mclean_source=None):
    """Run jobs, in parallel when ``n_workers > 1``.

    Returns ``(results, errors)``; results are sorted so output does not
    depend on scheduling.
    """
    n_workers = n_workers or os.cpu_count() or 1
    if n_workers <= 1 or len(jobs) <= 1:
        _init_worker(bundle, gbrt, mclean_source)
        outcomes = [_run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(n_workers, initializer=_init_worker, initargs=(bundle, gbrt, mclean_source)) as pool:
            outcomes = list(pool.map(_run_job, jobs))
    results = sorted((r for _, r, _ in outcomes if r is not None), key=_result_key)
    errors = [(j, e) for j, _, e in outcomes if e is not None]
    return results, errors


def _result_key(r: ScenarioResult):
    return (r.park, r.model, r.training_days, r.season)


RESULT_COLUMNS = ["park", "model", "season", "training_days", "nrmse"]


def write_results(results: Sequence[ScenarioResult], path) -> None:
    frame = pd.DataFrame([asdict(r) for r in results], columns=RESULT_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def read_results(path) -> list[ScenarioResult]:
    frame = pd.read_csv(path, float_precision="round_trip", dtype={"season": str})
    if list(frame.columns) != RESULT_COLUMNS:
        raise ValidationError(f"results file columns must be {','.join(RESULT_COLUMNS)}")
    return [
        ScenarioResult(int(r.park), str(r.model), str(r.season), int(r.training_days), float(r.nrmse))
        for r in frame.itertuples(index=False)
    ]


# --------------------------------------------------------------------------
# reporting

@dataclass
class Report:
    table: pd.DataFrame  # rows: training days, columns: models, mean nRMSE
    best: dict  # training days -> best model
    skill: pd.DataFrame  # distribution of per-park skill against each reference

    def to_text(self) -> str:
        lines = ["Mean nRMSE (best per row marked with *)"]
        models = list(self.table.columns)
        width = max([14, *(len(m) + 2 for m in models)])
        lines.append("days".ljust(6) + "".join(m.rjust(width) for m in models))
        for days, row in self.table.iterrows():
            cells = []
            for m in models:
                v = row[m]
                cell = "-" if pd.isna(v) else f"{v:.3f}" + ("*" if self.best.get(days) == m else " ")
                cells.append(cell.rjust(width))
            lines.append(str(days).ljust(6) + "".join(cells))
        if len(self.skill):
            lines.append("")
            lines.append("Skill distribution per park (model - reference; below zero = improvement)")
            lines.append(self.skill.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        table = {
            str(days): {m: (None if pd.isna(v) else float(v)) for m, v in row.items()}
            for days, row in self.table.iterrows()
        }
        return json.dumps(
            {
                "mean_nrmse": table,
                "best": {str(k): v for k, v in self.best.items()},
                "skill": self.skill.to_dict(orient="records"),
            },
            indent=2,
            sort_keys=True,
        )


def _park_means(results: Sequence[ScenarioResult]) -> dict:
    """(model, days) -> {park: value}, averaging seasons with exact rounding."""
    buckets: dict = {}
    for r in results:
        buckets.setdefault((r.model, r.training_days, r.park), []).append(r.nrmse)
    out: dict = {}
    for (model, days, park), vals in buckets.items():
        # statistics.mean is exactly rounded, so repeated identical values
        # average to themselves and constant baseline columns stay bit-identical
        out.setdefault((model, days), {})[park] = statistics.mean(vals)
    return out


def report_tables(results: Sequence[ScenarioResult], reference_model: str = "gbrt", by_season: bool = False):
    """Mean nRMSE by training days (rows) and model (columns), plus skill spreads.

    With ``by_season`` a dict of per-season reports is returned instead of a
    single report averaging seasons per park first.
    """
    if not results:
        raise ValueError("no results to report")
    if by_season:
        seasons = sorted({r.season for r in results})
        return {
            s: report_tables([r for r in results if r.season in (s, ALL_SEASONS)], reference_model)
            for s in seasons
            if s != ALL_SEASONS
        } or {ALL_SEASONS: report_tables(results, reference_model)}

    per_park = _park_means(results)
    models = sorted({m for m, _ in per_park}, key=lambda m: (m != reference_model, m))
    days = sorted({d for _, d in per_park})
    table = pd.DataFrame(index=pd.Index(days, name="training_days"), columns=models, dtype=float)
    for (m, d), parks in per_park.items():
        table.loc[d, m] = statistics.mean(parks.values())
    best = {d: table.loc[d].astype(float).idxmin() for d in days if table.loc[d].notna().any()}

    rows = []
    if reference_model in models:
        refs = [m for m in models if m != reference_model] or [reference_model]
        for d in days:
            ours = per_park.get((reference_model, d), {})
            for ref in refs:
                theirs = per_park.get((ref, d), {})
                parks = sorted(set(ours) & set(theirs))
                if not parks:
                    continue
                s = np.array([skill(ours[p], theirs[p]) for p in parks])
                q = np.quantile(s, [0.0, 0.25, 0.5, 0.75, 1.0])
                rows.append({
                    "training_days": d, "model": reference_model, "reference": ref, "parks": len(parks),
                    "min": q[0], "q1": q[1], "median": q[2], "q3": q[3], "max": q[4],
                })
    skill_frame = pd.DataFrame(rows, columns=["training_days", "model", "reference", "parks", "min", "q1", "median", "q3", "max"])
    return Report(table, best, skill_frame)
