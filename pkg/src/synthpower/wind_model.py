"""Wind power from 10 m measurements: power-law extrapolation + curve lookup."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import GeoLocation, PowerSeries, ValidationError, WeatherSample, to_datetime64

ALPHA = 1.0 / 7.0
REFERENCE_HEIGHT_M = 10.0
MAX_CURVE_SPEED = 25.0
MCLEAN_TERRAINS = ("Lowland", "Lowland-Regulated", "Offshore", "Upland")
CURVE_HEADER = ["speed_ms", "power_kw"]


@dataclass(frozen=True)
class WindPlantMeta:
    loc_id: int
    location: GeoLocation
    hub_height_m: float
    rotor_diameter_m: float
    rated_power_kw: float
    turbine_type: str

    def __post_init__(self):
        for name in ("hub_height_m", "rotor_diameter_m", "rated_power_kw"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"plant {self.loc_id}: {name} must be positive")


@dataclass(frozen=True, eq=False)
class PowerCurve:
    speeds: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        speeds = np.asarray(self.speeds, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if speeds.ndim != 1 or speeds.shape != powers.shape or len(speeds) < 2:
            raise ValidationError("power curve needs matching speed/power columns with >= 2 knots")
        if not (np.diff(speeds) > 0).all():
            raise ValidationError("power curve speeds must be strictly increasing")
        if (powers < 0).any() or not np.isfinite(powers).all():
            raise ValidationError("power curve powers must be finite and non-negative")
        if speeds[0] != 0.0 or speeds[-1] < MAX_CURVE_SPEED:
            raise ValidationError("power curve must cover 0-25 m/s")
        if not powers.max() > 0:
            raise ValidationError("power curve is identically zero")
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "powers", powers)

    @property
    def rated_power(self) -> float:
        return float(self.powers.max())

    def __eq__(self, other):
        if not isinstance(other, PowerCurve):
            return NotImplemented
        return np.array_equal(self.speeds, other.speeds) and np.array_equal(self.powers, other.powers)


def extrapolate_wind(u_ref, z, z_ref=REFERENCE_HEIGHT_M, alpha=ALPHA):
    """Wind profile power law ``u = u_ref * (z / z_ref) ** alpha``."""
    z = np.asarray(z, dtype=float)
    if (z <= 0).any() or z_ref <= 0:
        raise ValueError("heights must be positive")
    u_ref = np.asarray(u_ref, dtype=float)
    if (u_ref < 0).any():
        raise ValueError("negative wind speed")
    u = u_ref * (z / z_ref) ** alpha
    return float(u) if np.ndim(u) == 0 else u


def power_curve_lookup(u, curve: PowerCurve):
    """Normalized power at hub-height speed ``u``; speeds above 25 m/s hold the 25 m/s value."""
    u = np.asarray(u, dtype=float)
    if (u < 0).any():
        raise ValueError("negative wind speed")
    p = np.interp(np.minimum(u, MAX_CURVE_SPEED), curve.speeds, curve.powers) / curve.rated_power
    return float(p) if np.ndim(p) == 0 else p


def simulate_wind_series(weather: Sequence[WeatherSample], meta: WindPlantMeta, curve: PowerCurve) -> PowerSeries:
    times = to_datetime64([s.time for s in weather])
    u10 = np.array([s.wind_speed_10m for s in weather], dtype=float)
    if np.isnan(u10).any():
        bad = weather[int(np.flatnonzero(np.isnan(u10))[0])].time
        raise ValueError(f"missing wind speed at {bad:%Y-%m-%d %H:%M:%S}")
    u_hub = extrapolate_wind(u10, meta.hub_height_m)
    pw = np.asarray(power_curve_lookup(u_hub, curve), dtype=float)
    return PowerSeries(times=times, pw=pw, is_test=np.zeros(len(times), dtype=bool))


# --------------------------------------------------------------------------
# curve files

def _data_text(name: str) -> str:
    return resources.files("synthpower").joinpath("data", name).read_text()


def _rows(text: str) -> list[list[str]]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    return list(csv.reader(lines))


def _curve_from_rows(rows, source) -> PowerCurve:
    try:
        speeds = [float(r[0]) for r in rows]
        powers = [float(r[1]) for r in rows]
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"{source}: malformed curve row") from exc
    return PowerCurve(np.array(speeds), np.array(powers))


def read_power_curve(path) -> PowerCurve:
    """Read a ``speed_ms,power_kw`` curve file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    rows = _rows(path.read_text())
    if not rows or rows[0] != CURVE_HEADER:
        raise ValidationError(f"{path}: expected header {','.join(CURVE_HEADER)}")
    return _curve_from_rows(rows[1:], path)


def write_power_curve(curve: PowerCurve, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for s, p in zip(curve.speeds, curve.powers):
        w.writerow([repr(float(s)), repr(float(p))])
    Path(path).write_text(buf.getvalue())


def builtin_turbine_curve(turbine_type: str) -> PowerCurve:
    """Placeholder manufacturer curve shipped for a catalog turbine type."""
    try:
        text = _data_text(f"curve_{turbine_type}.csv")
    except FileNotFoundError:
        raise KeyError(f"no power curve for turbine type {turbine_type!r}") from None
    rows = _rows(text)
    if rows[0] != CURVE_HEADER:
        raise ValidationError(f"curve_{turbine_type}.csv: bad header")
    return _curve_from_rows(rows[1:], turbine_type)


def read_mclean_curves(source=None) -> dict[str, PowerCurve]:
    """Parse a ``terrain,speed_ms,power_kw`` file holding all terrain curves.

    Without ``source`` the shipped placeholder file is used; its values are
    illustrative shapes, not the published McLean tables.
    """
    if source is None:
        text, origin = _data_text("mclean_placeholder.csv"), "mclean_placeholder.csv"
    else:
        path = Path(source)
        if not path.exists():
            raise FileNotFoundError(path)
        text, origin = path.read_text(), str(path)
    rows = _rows(text)
    if not rows or rows[0] != ["terrain", *CURVE_HEADER]:
        raise ValidationError(f"{origin}: expected header terrain,speed_ms,power_kw")
    grouped: dict[str, list] = {}
    for r in rows[1:]:
        grouped.setdefault(r[0], []).append(r[1:])
    return {t: _curve_from_rows(rs, f"{origin}:{t}") for t, rs in grouped.items()}


def load_mclean_curve(terrain: str, source=None) -> PowerCurve:
    if terrain not in MCLEAN_TERRAINS:
        raise KeyError(f"unknown terrain {terrain!r}; expected one of {', '.join(MCLEAN_TERRAINS)}")
    curves = read_mclean_curves(source)
    if terrain not in curves:
        raise KeyError(f"terrain {terrain!r} missing from curve file")
    return curves[terrain]


def write_mclean_curves(curves: dict[str, PowerCurve], path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["terrain", *CURVE_HEADER])
    for terrain, curve in curves.items():
        for s, p in zip(curve.speeds, curve.powers):
            w.writerow([terrain, repr(float(s)), repr(float(p))])
    Path(path).write_text(buf.getvalue())
