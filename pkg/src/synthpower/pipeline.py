"""Dataset assembly: synthetic inputs, target simulation, day-ahead sync, CSV bundles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .core import (
    DIFFUSE,
    DIRECT,
    PV_LAGGED,
    TARGET_COLUMNS,
    TIME_FORMAT,
    U10,
    U100,
    V10,
    V100,
    WIND_LAGGED,
    GeoLocation,
    PowerSeries,
    ValidationError,
    WeatherSample,
    as_utc,
    format_time,
    input_columns,
    to_datetime64,
)
from .irradiance import accumulate_run, deaccumulate_run, energy_sum_to_power
from .pv_model import INVERTER_NAME, MODULE_NAME, PvPlantMeta
from .sampler import plant_rng
from .solar_geometry import solar_position
from .wind_model import WindPlantMeta, extrapolate_wind

TEST_START = datetime(2019, 12, 1, tzinfo=timezone.utc)
DAY_AHEAD_HORIZONS = range(24, 48)
RUN_HORIZONS = range(1, 49)
NWP_WIND_HEIGHT_M = 100.0
DIFFUSE_ACC = "ASWDIFDS_SFC_0_M"
DIRECT_ACC = "ASWDIRS_SFC_0_M"

META_COMMON = [
    "loc_id",
    "longitude",
    "latitude",
    "altitude",
    "input_file_name",
    "target_file_name",
    "num_train_samples",
    "num_test_samples",
]
META_PV = META_COMMON + [
    "tilt",
    "azimuth",
    "module_name",
    "inverter_name",
    "module_peak_w",
    "inverter_ac_limit_w",
    "temp_coeff_per_k",
    "albedo",
    "modules_per_string",
    "strings_per_inverter",
]
META_WIND = META_COMMON + ["hub_height", "rotor_diameter", "rated_power_kw", "turbine_type"]
META_COLUMNS = {"pv": META_PV, "wind": META_WIND}
FLOAT_FORMAT = "%.17g"


def assign_test_flag(t) -> bool:
    return as_utc(t) >= TEST_START


def test_flags(times) -> np.ndarray:
    return to_datetime64(times) >= np.datetime64(TEST_START.replace(tzinfo=None), "s")


# --------------------------------------------------------------------------
# NWP runs and feature preparation

@dataclass(frozen=True, eq=False)
class NwpRun:
    """One 00:00 model run: a table indexed by consecutive forecast horizon."""

    run_start: datetime
    table: pd.DataFrame

    def __post_init__(self):
        object.__setattr__(self, "run_start", as_utc(self.run_start))


def _check_consecutive(horizons: np.ndarray) -> None:
    if len(horizons) > 1 and not (np.diff(horizons) == 1).all():
        raise ValueError("non-consecutive horizons")


def build_lag_features(records: pd.DataFrame, lagged_names: Sequence[str]) -> pd.DataFrame:
    """Add ``<name>_m1`` / ``<name>_p1`` columns holding the previous/next hour.

    Run boundaries are zero-filled.
    """
    _check_consecutive(records["nwp_fcst_horiz_hours"].to_numpy())
    out = records.copy()
    for name in lagged_names:
        col = out[name].astype(float)
        out[f"{name}_m1"] = col.shift(1, fill_value=0.0)
        out[f"{name}_p1"] = col.shift(-1, fill_value=0.0)
    return out


def prepare_run_features(run: NwpRun, kind: str, location: GeoLocation) -> pd.DataFrame:
    """Turn a raw run into model features for every horizon in the run.

    De-accumulates irradiance, builds lags on the full run (so horizon 24 sees
    horizon 23), and adds sun angles at the forecast time for PV.
    """
    table = run.table.sort_values("nwp_fcst_horiz_hours", kind="stable").reset_index(drop=True)
    horizons = table["nwp_fcst_horiz_hours"].to_numpy(dtype=np.int64)
    table[DIFFUSE] = deaccumulate_run(table[DIFFUSE_ACC].to_numpy(), horizons)
    table[DIRECT] = deaccumulate_run(table[DIRECT_ACC].to_numpy(), horizons)
    table = build_lag_features(table, PV_LAGGED if kind == "pv" else WIND_LAGGED)
    start = np.datetime64(run.run_start.replace(tzinfo=None), "s")
    fcst = start + horizons.astype("timedelta64[h]")
    if kind == "pv":
        sun = solar_position(fcst, location)
        table["solar_azimuth"] = sun.azimuth_deg
        table["solar_zenith"] = sun.zenith_deg
    table.insert(0, "fcst_time", pd.to_datetime(fcst).tz_localize("UTC"))
    return table[input_columns(kind)]


def synchronize_day_ahead(nwp_runs: Sequence[tuple[datetime, pd.DataFrame]], targets: PowerSeries) -> pd.DataFrame:
    """Join horizons 24-47 of each daily 00:00 run with the target series."""
    parts = []
    for run_start, records in nwp_runs:
        run_start = as_utc(run_start)
        if (run_start.hour, run_start.minute, run_start.second) != (0, 0, 0):
            raise ValueError(f"run start {format_time(run_start)} is not at 00:00")
        horizons = records["nwp_fcst_horiz_hours"].to_numpy()
        sel = records[(horizons >= DAY_AHEAD_HORIZONS.start) & (horizons < DAY_AHEAD_HORIZONS.stop)].copy()
        start = pd.Timestamp(run_start)
        sel["fcst_time"] = start + pd.to_timedelta(sel["nwp_fcst_horiz_hours"].astype(np.int64), unit="h")
        parts.append(sel)
    if parts:
        inputs = pd.concat(parts, ignore_index=True)
    else:
        inputs = pd.DataFrame(columns=["fcst_time", "nwp_fcst_horiz_hours"])
    if inputs["fcst_time"].duplicated().any():
        raise ValueError("overlapping runs produce duplicate forecast times")
    tgt = pd.DataFrame(
        {
            "fcst_time": pd.to_datetime(targets.times).tz_localize("UTC"),
            "pw": targets.pw,
            "is_test": targets.is_test,
        }
    )
    joined = inputs.merge(tgt, on="fcst_time", how="inner")
    cols = ["fcst_time"] + [c for c in joined.columns if c != "fcst_time"]
    return joined[cols].sort_values("fcst_time", kind="stable").reset_index(drop=True)


# --------------------------------------------------------------------------
# synthetic weather

def _ar1(rng: np.random.Generator, n: int, rho: float) -> np.ndarray:
    """Stationary unit-variance AR(1) sequence."""
    eps = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = eps[0] if n else 0.0
    scale = math.sqrt(1.0 - rho * rho)
    for i in range(1, n):
        out[i] = rho * out[i - 1] + scale * eps[i]
    return out


def clear_sky_ghi(zenith_deg) -> np.ndarray:
    """Haurwitz clear-sky global irradiance in W/m^2."""
    cos_z = np.cos(np.radians(zenith_deg))
    up = cos_z > 0
    safe = np.where(up, cos_z, 1.0)
    return np.where(up, 1098.0 * safe * np.exp(-0.057 / safe), 0.0)


def _cloud_factor(rng: np.random.Generator, n: int, rho_slow: float, rho_fast: float) -> np.ndarray:
    z = math.sqrt(0.8) * _ar1(rng, n, rho_slow) + math.sqrt(0.2) * _ar1(rng, n, rho_fast)
    return 1.0 / (1.0 + np.exp(-(0.3 + 2.2 * z)))


def _sky_components(zenith_deg, clearness):
    ghi = clear_sky_ghi(zenith_deg) * (0.12 + 0.88 * clearness)
    dhi = ghi * np.minimum(1.0, 0.15 + 0.8 * (1.0 - clearness))
    return ghi, np.minimum(dhi, ghi)


def _wind_speeds(rng: np.random.Generator, n: int, rho_slow: float, rho_fast: float) -> np.ndarray:
    # Rayleigh magnitude of two correlated Gaussians = Weibull with shape 2.
    scale = rng.uniform(4.5, 6.0)
    comps = []
    for _ in range(2):
        comps.append(math.sqrt(0.85) * _ar1(rng, n, rho_slow) + math.sqrt(0.15) * _ar1(rng, n, rho_fast))
    return scale / math.sqrt(2.0) * np.hypot(comps[0], comps[1])


def generate_synthetic_weather(
    seed: int,
    location: GeoLocation,
    days: int,
    kind: str,
    start: datetime = datetime(2019, 8, 1, tzinfo=timezone.utc),
    key="",
) -> list[WeatherSample]:
    """10-minute synthetic station measurements.

    Wind speeds are Weibull(k=2) with AR(1) persistence. For ``kind='pv'``
    radiation sums come from a Haurwitz clear-sky envelope scaled by a
    persistent cloud factor; wind stations carry no radiation.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    if kind not in ("pv", "wind"):
        raise ValueError(f"unknown kind {kind!r}")
    rng = plant_rng(seed, "weather", kind, key, location.latitude, location.longitude)
    n = days * 144
    start = as_utc(start)
    t0 = np.datetime64(start.replace(tzinfo=None), "s")
    times = t0 + (np.arange(n) * 600).astype("timedelta64[s]")
    wind = _wind_speeds(rng, n, 0.995, 0.9)
    if kind == "pv":
        clearness = _cloud_factor(rng, n, 0.99, 0.9)
        zen = solar_position(times, location).zenith_deg
        ghi, dhi = _sky_components(zen, clearness)
        ghi_e, dhi_e = ghi * 0.06, dhi * 0.06  # W/m^2 over 600 s -> J/cm^2
    py_times = times.astype(datetime)
    out = []
    for i in range(n):
        t = py_times[i].replace(tzinfo=timezone.utc)
        if kind == "pv":
            out.append(WeatherSample(t, float(wind[i]), float(ghi_e[i]), float(dhi_e[i])))
        else:
            out.append(WeatherSample(t, float(wind[i])))
    return out


def _smooth(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return values.copy()
    half = window // 2
    padded = np.concatenate([[0.0] * half, values, [0.0] * half])
    ones = np.concatenate([[0.0] * half, np.ones(len(values)), [0.0] * half])
    kernel = np.ones(2 * half + 1)
    return np.convolve(padded, kernel, "valid") / np.convolve(ones, kernel, "valid")


def noise_sd(noise_level: float, horizon) -> np.ndarray:
    """Relative forecast-error scale, growing linearly with horizon."""
    return noise_level * (0.5 + np.asarray(horizon, dtype=float) / 48.0)


def generate_synthetic_nwp(
    weather: Sequence[WeatherSample],
    seed: int,
    noise_level: float,
    smoothing_hours: int = 3,
    location: GeoLocation | None = None,
    key="",
) -> list[NwpRun]:
    """Emulate daily 00:00 NWP runs (horizons 1-48) from hourly weather.

    Each forecast is the true weather smoothed over ``smoothing_hours``
    times ``max(0, 1 + sd(h) * e)`` with ``e`` an AR(1) error per run and
    variable. Irradiance is emitted as the since-run-start mean. Weather
    without radiation needs ``location`` to synthesize an irradiance field.
    """
    if noise_level < 0:
        raise ValueError("noise_level must be non-negative")
    if not weather:
        raise ValueError("insufficient weather coverage: no samples")
    times = to_datetime64([s.time for s in weather])
    secs = times.astype(np.int64)
    if not (np.diff(secs) == 3600).all() or secs[0] % 3600:
        raise ValueError("NWP synthesis needs a gap-free hourly weather series")
    n = len(weather)
    rng = plant_rng(seed, "nwp", key)
    u10 = np.array([s.wind_speed_10m for s in weather])
    if all(s.has_radiation for s in weather):
        ghi = energy_sum_to_power(np.array([s.ghi_energy for s in weather]))
        dhi = energy_sum_to_power(np.array([s.dhi_energy for s in weather]))
    else:
        if location is None:
            raise ValueError("location required to synthesize irradiance for wind stations")
        zen = solar_position(times, location).zenith_deg
        ghi, dhi = _sky_components(zen, _cloud_factor(rng, n, 0.9, 0.5))

    truth = {
        "u10": _smooth(u10, smoothing_hours),
        "dir": _smooth(ghi - dhi, smoothing_hours),
        "dif": _smooth(dhi, smoothing_hours),
    }
    direction = np.cumsum(rng.normal(0.0, 0.15, n)) + rng.uniform(0, 2 * np.pi)
    day_frac = (secs % 86400) / 86400.0
    year_frac = ((secs / 86400.0) % 365.25) / 365.25
    temp = (
        283.0
        - 8.0 * np.cos(2 * np.pi * (year_frac - 0.03))
        - 4.0 * np.cos(2 * np.pi * (day_frac - 0.125))
        + 2.0 * _ar1(rng, n, 0.97)
    )
    relhum = np.clip(75.0 - 0.02 * ghi + 8.0 * _ar1(rng, n, 0.95), 15.0, 100.0)
    pressure = 101325.0 + 900.0 * _ar1(rng, n, 0.99)

    first_day = secs[0] - secs[0] % 86400
    if first_day < secs[0]:
        first_day += 86400
    h = np.arange(1, 49)
    sd = noise_sd(noise_level, h)
    runs = []
    for start in range(first_day, int(secs[-1]) + 1, 86400):
        idx0 = (start + 3600 - secs[0]) // 3600
        if idx0 + 48 > n:
            break
        sl = slice(idx0, idx0 + 48)
        factors = {}
        for var in ("u10", "dir", "dif"):
            e = _ar1(rng, 48, 0.7)
            factors[var] = np.maximum(0.0, 1.0 + sd * e)
        wind10 = truth["u10"][sl] * factors["u10"]
        wind100 = extrapolate_wind(wind10, NWP_WIND_HEIGHT_M)
        theta = direction[sl]
        direct = truth["dir"][sl] * factors["dir"]
        diffuse = truth["dif"][sl] * factors["dif"]
        table = pd.DataFrame(
            {
                "nwp_fcst_horiz_hours": h,
                "T_HAG_2_M": temp[sl],
                "RELHUM_HAG_2_M": relhum[sl],
                "PS_SFC_0_M": pressure[sl],
                U10: -wind10 * np.sin(theta),
                V10: -wind10 * np.cos(theta),
                U100: -wind100 * np.sin(theta),
                V100: -wind100 * np.cos(theta),
                DIFFUSE_ACC: accumulate_run(diffuse, h),
                DIRECT_ACC: accumulate_run(direct, h),
            }
        )
        run_start = datetime.fromtimestamp(start, tz=timezone.utc)
        runs.append(NwpRun(run_start, table))
    if not runs:
        raise ValueError("insufficient weather coverage: no complete 48 h run")
    return runs


# --------------------------------------------------------------------------
# bundles

@dataclass(eq=False)
class DatasetBundle:
    """Per-location input/target tables of one energy source plus plant metadata."""

    kind: str
    plants: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    targets: dict = field(default_factory=dict)

    def plant(self, loc_id):
        for p in self.plants:
            if p.loc_id == loc_id:
                return p
        raise KeyError(f"no plant with loc_id {loc_id!r}")

    def equals(self, other: "DatasetBundle") -> bool:
        if self.kind != other.kind or self.plants != other.plants:
            return False
        if self.inputs.keys() != other.inputs.keys() or self.targets.keys() != other.targets.keys():
            return False
        return all(self.inputs[k].equals(other.inputs[k]) for k in self.inputs) and all(
            self.targets[k].equals(other.targets[k]) for k in self.targets
        )


def input_file_name(loc_id) -> str:
    return f"data_input_{loc_id}.csv"


def target_file_name(loc_id) -> str:
    return f"data_target_{loc_id}.csv"


def _validate_tables(loc_id, kind: str, inp: pd.DataFrame, tgt: pd.DataFrame) -> list[str]:
    errs = []
    if list(inp.columns) != input_columns(kind):
        errs.append(f"{loc_id}: input columns differ from the {kind} schema")
        return errs
    if list(tgt.columns) != TARGET_COLUMNS:
        errs.append(f"{loc_id}: target columns must be {','.join(TARGET_COLUMNS)}")
        return errs
    pw = tgt["pw"].to_numpy(dtype=float)
    if np.isnan(pw).any():
        errs.append(f"{loc_id}: pw contains NaN")
    elif ((pw < 0) | (pw > 1)).any():
        errs.append(f"{loc_id}: pw outside [0, 1]")
    if inp.drop(columns="fcst_time").isna().any().any():
        errs.append(f"{loc_id}: input features contain NaN")
    for name, table in (("input", inp), ("target", tgt)):
        t = to_datetime64(table["fcst_time"]).astype(np.int64)
        if len(t) > 1 and not (np.diff(t) > 0).all():
            errs.append(f"{loc_id}: {name} timestamps not strictly increasing")
    if len(inp) != len(tgt):
        errs.append(f"{loc_id}: input has {len(inp)} rows, target has {len(tgt)}")
    elif not (to_datetime64(inp["fcst_time"]) == to_datetime64(tgt["fcst_time"])).all():
        errs.append(f"{loc_id}: input and target timestamps differ")
    flags = tgt["is_test"].to_numpy()
    if flags.dtype != bool:
        errs.append(f"{loc_id}: is_test must be boolean")
    elif not (flags == test_flags(tgt["fcst_time"])).all():
        errs.append(f"{loc_id}: is_test disagrees with the {TEST_START:%Y-%m-%d} cutoff")
    return errs


def validate_bundle(bundle: DatasetBundle) -> None:
    if bundle.kind not in META_COLUMNS:
        raise ValidationError(f"unknown bundle kind {bundle.kind!r}")
    errs = []
    ids = [p.loc_id for p in bundle.plants]
    if len(set(ids)) != len(ids):
        errs.append("duplicate loc_id in plant list")
    expected_type = PvPlantMeta if bundle.kind == "pv" else WindPlantMeta
    for p in bundle.plants:
        if not isinstance(p, expected_type):
            errs.append(f"{p.loc_id}: plant type does not match bundle kind {bundle.kind}")
    if set(ids) != set(bundle.inputs) or set(ids) != set(bundle.targets):
        errs.append("plant list, input tables and target tables name different locations")
    else:
        for loc_id in ids:
            errs.extend(_validate_tables(loc_id, bundle.kind, bundle.inputs[loc_id], bundle.targets[loc_id]))
    if errs:
        raise ValidationError("; ".join(errs))


def _meta_row(plant, target: pd.DataFrame) -> dict:
    n_test = int(target["is_test"].sum())
    row = {
        "loc_id": plant.loc_id,
        "longitude": plant.location.longitude,
        "latitude": plant.location.latitude,
        "altitude": plant.location.altitude_m,
        "input_file_name": input_file_name(plant.loc_id),
        "target_file_name": target_file_name(plant.loc_id),
        "num_train_samples": len(target) - n_test,
        "num_test_samples": n_test,
    }
    if isinstance(plant, PvPlantMeta):
        row.update(
            tilt=plant.tilt_deg,
            azimuth=plant.azimuth_deg,
            module_name=MODULE_NAME,
            inverter_name=INVERTER_NAME,
            module_peak_w=plant.module_peak_w,
            inverter_ac_limit_w=plant.inverter_ac_limit_w,
            temp_coeff_per_k=plant.temp_coeff_per_k,
            albedo=plant.albedo,
            modules_per_string=plant.modules_per_string,
            strings_per_inverter=plant.strings_per_inverter,
        )
    else:
        row.update(
            hub_height=plant.hub_height_m,
            rotor_diameter=plant.rotor_diameter_m,
            rated_power_kw=plant.rated_power_kw,
            turbine_type=plant.turbine_type,
        )
    return row


def _to_csv(frame: pd.DataFrame, path: Path) -> None:
    out = frame.copy()
    if "fcst_time" in out:
        out["fcst_time"] = out["fcst_time"].dt.strftime(TIME_FORMAT)
    out.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_location(bundle_kind: str, plant, inputs: pd.DataFrame, targets: pd.DataFrame, directory) -> None:
    """Write one location's input/target pair (meta.csv is written separately)."""
    directory = Path(directory)
    errs = _validate_tables(plant.loc_id, bundle_kind, inputs, targets)
    if errs:
        raise ValidationError("; ".join(errs))
    directory.mkdir(parents=True, exist_ok=True)
    _to_csv(inputs, directory / input_file_name(plant.loc_id))
    _to_csv(targets, directory / target_file_name(plant.loc_id))


def write_meta(bundle: DatasetBundle, directory) -> None:
    rows = [_meta_row(p, bundle.targets[p.loc_id]) for p in bundle.plants]
    meta = pd.DataFrame(rows, columns=META_COLUMNS[bundle.kind])
    Path(directory).mkdir(parents=True, exist_ok=True)
    _to_csv(meta, Path(directory) / "meta.csv")


def write_bundle(bundle: DatasetBundle, directory) -> None:
    """Validate, then emit meta.csv and one input/target pair per location."""
    validate_bundle(bundle)
    directory = Path(directory)
    for plant in bundle.plants:
        write_location(bundle.kind, plant, bundle.inputs[plant.loc_id], bundle.targets[plant.loc_id], directory)
    write_meta(bundle, directory)


def _read_csv(path: Path, expected: list[str]) -> pd.DataFrame:
    if not path.exists():
        raise ValidationError(f"missing file {path}")
    frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=True)
    if list(frame.columns) != expected:
        unknown = sorted(set(frame.columns) - set(expected))
        missing = [c for c in expected if c not in frame.columns]
        raise ValidationError(f"{path.name}: schema drift (unknown columns {unknown}, missing {missing})")
    if "fcst_time" in frame:
        try:
            frame["fcst_time"] = pd.to_datetime(frame["fcst_time"], format=TIME_FORMAT, utc=True)
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"{path.name}: bad timestamp ({exc})") from exc
    return frame


def _plant_from_row(kind: str, row) -> object:
    loc = GeoLocation(float(row["latitude"]), float(row["longitude"]), float(row["altitude"]))
    loc_id = int(row["loc_id"])
    if kind == "pv":
        return PvPlantMeta(
            loc_id=loc_id,
            location=loc,
            tilt_deg=float(row["tilt"]),
            azimuth_deg=float(row["azimuth"]),
            module_peak_w=float(row["module_peak_w"]),
            inverter_ac_limit_w=float(row["inverter_ac_limit_w"]),
            temp_coeff_per_k=float(row["temp_coeff_per_k"]),
            albedo=float(row["albedo"]),
            modules_per_string=int(row["modules_per_string"]),
            strings_per_inverter=int(row["strings_per_inverter"]),
        )
    return WindPlantMeta(
        loc_id=loc_id,
        location=loc,
        hub_height_m=float(row["hub_height"]),
        rotor_diameter_m=float(row["rotor_diameter"]),
        rated_power_kw=float(row["rated_power_kw"]),
        turbine_type=str(row["turbine_type"]),
    )


def read_bundle(directory) -> DatasetBundle:
    """Parse and fully validate a bundle directory."""
    directory = Path(directory)
    meta_path = directory / "meta.csv"
    if not meta_path.exists():
        raise ValidationError(f"missing file {meta_path}")
    header = list(pd.read_csv(meta_path, nrows=0).columns)
    kinds = [k for k, cols in META_COLUMNS.items() if cols == header]
    if not kinds:
        raise ValidationError("meta.csv columns match neither the PV nor the wind schema")
    kind = kinds[0]
    meta = _read_csv(meta_path, META_COLUMNS[kind])
    bundle = DatasetBundle(kind=kind)
    for _, row in meta.iterrows():
        plant = _plant_from_row(kind, row)
        if row["input_file_name"] != input_file_name(plant.loc_id) or row["target_file_name"] != target_file_name(plant.loc_id):
            raise ValidationError(f"{plant.loc_id}: unexpected data file names in meta.csv")
        inp = _read_csv(directory / row["input_file_name"], input_columns(kind))
        tgt = _read_csv(directory / row["target_file_name"], TARGET_COLUMNS)
        if tgt["is_test"].dtype != bool:
            raise ValidationError(f"{plant.loc_id}: is_test must be True/False")
        n_test = int(tgt["is_test"].sum())
        if (int(row["num_train_samples"]), int(row["num_test_samples"])) != (len(tgt) - n_test, n_test):
            raise ValidationError(f"{plant.loc_id}: sample counts in meta.csv disagree with the target file")
        bundle.plants.append(plant)
        bundle.inputs[plant.loc_id] = inp
        bundle.targets[plant.loc_id] = tgt
    validate_bundle(bundle)
    return bundle


# --------------------------------------------------------------------------
# per-location assembly

def assemble_location(
    kind: str,
    plant,
    seed: int,
    start: datetime,
    days: int,
    noise_level: float,
    smoothing_hours: int = 3,
    nwp_key="",
    curve=None,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Simulate targets and synthesize day-ahead inputs for one plant.

    Returns the ``(inputs, targets)`` tables covering ``days`` days from
    ``start`` (UTC midnight).
    """
    from .pv_model import simulate_pv_series
    from .wind_model import simulate_wind_series
    from .core import downsample_to_hourly

    start = as_utc(start)
    # one extra day on each side so every delivered hour has a complete run
    weather = generate_synthetic_weather(
        seed, plant.location, days + 2, kind, start=start - timedelta(days=1), key=plant.loc_id
    )
    hourly = downsample_to_hourly(weather)
    lo, hi = start, start + timedelta(days=days)
    window = [s for s in hourly if lo <= s.time < hi]
    if kind == "pv":
        series = simulate_pv_series(window, plant)
    else:
        if curve is None:
            raise ValueError("wind assembly needs a power curve")
        series = simulate_wind_series(window, plant, curve)
    targets = PowerSeries(series.times, series.pw, test_flags(series.times))
    runs = generate_synthetic_nwp(
        hourly, seed, noise_level, smoothing_hours, location=plant.location, key=nwp_key
    )
    prepared = [(r.run_start, prepare_run_features(r, kind, plant.location)) for r in runs]
    joined = synchronize_day_ahead(prepared, targets)
    inputs = joined[input_columns(kind)].reset_index(drop=True)
    tgt = joined[TARGET_COLUMNS].reset_index(drop=True)
    tgt["is_test"] = tgt["is_test"].astype(bool)
    return inputs, tgt
