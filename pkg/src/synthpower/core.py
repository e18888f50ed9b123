"""Domain types, timebase helpers, grid matching and resampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Optional, Sequence

import numpy as np

TIME_FORMAT = "%Y-%m-%d %H:%M:%S"
EARTH_RADIUS_KM = 6371.0


class ValidationError(ValueError):
    """Raised when domain data violates its invariants."""


# --------------------------------------------------------------------------
# timestamps

def parse_time(text: str) -> datetime:
    """Parse a ``yyyy-mm-dd HH:MM:SS`` string as a UTC instant."""
    return datetime.strptime(text, TIME_FORMAT).replace(tzinfo=timezone.utc)


def format_time(t: datetime) -> str:
    return as_utc(t).strftime(TIME_FORMAT)


def as_utc(t) -> datetime:
    """Coerce a datetime-like value to an aware UTC ``datetime``.

    Naive values are taken to already be UTC; aware values in other zones
    are rejected rather than silently converted.
    """
    if isinstance(t, np.datetime64):
        t = t.astype("datetime64[s]").astype(datetime)
    if hasattr(t, "to_pydatetime"):
        t = t.to_pydatetime()
    if not isinstance(t, datetime):
        raise TypeError(f"not a timestamp: {t!r}")
    if t.tzinfo is None:
        return t.replace(tzinfo=timezone.utc)
    if t.utcoffset() != timezone.utc.utcoffset(None):
        raise ValidationError(f"non-UTC timestamp {t!r}")
    return t.astimezone(timezone.utc)


def to_datetime64(times) -> np.ndarray:
    """Convert a sequence of timestamps into a ``datetime64[s]`` array (UTC)."""
    if isinstance(times, np.ndarray) and np.issubdtype(times.dtype, np.datetime64):
        return times.astype("datetime64[s]")
    if hasattr(times, "dt"):  # pandas Series
        if times.dt.tz is not None:
            times = times.dt.tz_convert("UTC").dt.tz_localize(None)
        return times.to_numpy().astype("datetime64[s]")
    if isinstance(times, (datetime, np.datetime64)):
        times = [times]
    return np.array(
        [np.datetime64(as_utc(t).replace(tzinfo=None), "s") for t in times],
        dtype="datetime64[s]",
    )


def unix_seconds(times) -> np.ndarray:
    return to_datetime64(times).astype(np.int64).astype(np.float64)


# --------------------------------------------------------------------------
# domain types

@dataclass(frozen=True)
class GeoLocation:
    latitude: float
    longitude: float
    altitude_m: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class WeatherSample:
    """One on-site measurement record.

    Radiation values are 10-minute energy sums in J/cm^2.
    """

    time: datetime
    wind_speed_10m: float
    ghi_energy: Optional[float] = None
    dhi_energy: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "time", as_utc(self.time))
        if not self.wind_speed_10m >= 0:
            raise ValidationError(f"{format_time(self.time)}: negative wind speed")
        if (self.ghi_energy is None) != (self.dhi_energy is None):
            raise ValidationError(
                f"{format_time(self.time)}: radiation fields must be both present or both absent"
            )
        if self.ghi_energy is not None:
            if self.ghi_energy < 0 or self.dhi_energy < 0:
                raise ValidationError(f"{format_time(self.time)}: negative radiation sum")
            if self.dhi_energy > self.ghi_energy:
                raise ValidationError(f"{format_time(self.time)}: diffuse exceeds global")

    @property
    def has_radiation(self) -> bool:
        return self.ghi_energy is not None


# Raw NWP fields before lagging; the irradiance pair is de-accumulated first.
NWP_BASE_FIELDS = ("T_HAG_2_M", "RELHUM_HAG_2_M", "PS_SFC_0_M")
DIFFUSE = "ASWDIFDS_SFC_0_M_INSTANT"
DIRECT = "ASWDIRS_SFC_0_M_INSTANT"
U10, V10 = "U_GVL_60_HL", "V_GVL_60_HL"
U100, V100 = "U_GVL_58_HL", "V_GVL_58_HL"


def lag_names(name: str) -> list[str]:
    return [f"{name}_m1", name, f"{name}_p1"]


PV_FEATURES: tuple[str, ...] = (
    *NWP_BASE_FIELDS,
    U10,
    V10,
    *lag_names(DIFFUSE),
    *lag_names(DIRECT),
    "solar_azimuth",
    "solar_zenith",
)
WIND_FEATURES: tuple[str, ...] = (
    *NWP_BASE_FIELDS,
    *lag_names(U100),
    *lag_names(V100),
    *lag_names(U10),
    *lag_names(V10),
    DIFFUSE,
    DIRECT,
)
FEATURES = {"pv": PV_FEATURES, "wind": WIND_FEATURES}
PV_LAGGED = (DIFFUSE, DIRECT)
WIND_LAGGED = (U100, V100, U10, V10)
IRRADIANCE_FEATURES = frozenset(n for n in PV_FEATURES + WIND_FEATURES if "ASWD" in n)


def input_columns(kind: str) -> list[str]:
    """Column order of ``data_input_<loc_id>.csv`` for an energy source."""
    return ["fcst_time", "nwp_fcst_horiz_hours", *FEATURES[kind]]


TARGET_COLUMNS = ["fcst_time", "pw", "is_test"]


@dataclass(frozen=True)
class NwpRecord:
    fcst_time: datetime
    nwp_fcst_horiz_hours: int
    features: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "fcst_time", as_utc(self.fcst_time))
        if int(self.nwp_fcst_horiz_hours) != self.nwp_fcst_horiz_hours or self.nwp_fcst_horiz_hours < 0:
            raise ValidationError("forecast horizon must be a non-negative integer")
        self.kind  # schema check
        for name in IRRADIANCE_FEATURES & set(self.features):
            if self.features[name] < 0:
                raise ValidationError(f"{format_time(self.fcst_time)}: negative {name}")

    @property
    def kind(self) -> str:
        names = set(self.features)
        for kind, expected in FEATURES.items():
            if names == set(expected):
                return kind
        raise ValidationError("feature set matches neither the PV nor the wind schema")


@dataclass(frozen=True, eq=False)
class PowerSeries:
    """Normalized power values with test flags, stored as parallel arrays."""

    times: np.ndarray
    pw: np.ndarray
    is_test: np.ndarray

    def __post_init__(self):
        times = to_datetime64(self.times)
        pw = np.asarray(self.pw, dtype=np.float64)
        is_test = np.asarray(self.is_test, dtype=bool)
        if not (len(times) == len(pw) == len(is_test)):
            raise ValidationError("times, pw and is_test lengths differ")
        if np.isnan(pw).any():
            raise ValidationError("pw contains NaN")
        if ((pw < 0) | (pw > 1)).any():
            raise ValidationError("pw outside [0, 1]")
        if len(times) > 1 and not (np.diff(times.astype(np.int64)) > 0).all():
            raise ValidationError("timestamps not strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "pw", pw)
        object.__setattr__(self, "is_test", is_test)

    def __len__(self):
        return len(self.pw)

    def __eq__(self, other):
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.pw, other.pw)
            and np.array_equal(self.is_test, other.is_test)
        )

    @property
    def entries(self) -> list[tuple[datetime, float, bool]]:
        return [
            (as_utc(t), float(p), bool(f))
            for t, p, f in zip(self.times, self.pw, self.is_test)
        ]


# --------------------------------------------------------------------------
# operations

def haversine_km(a: GeoLocation, b: GeoLocation) -> float:
    phi1, phi2 = math.radians(a.latitude), math.radians(b.latitude)
    dphi = phi2 - phi1
    dlmb = math.radians(b.longitude - a.longitude)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def nearest_grid_node(target: GeoLocation, nodes: Sequence[GeoLocation]) -> int:
    """Index of the node with the smallest great-circle distance to ``target``.

    Ties resolve to the lowest index.
    """
    if len(nodes) == 0:
        raise ValueError("no grid nodes")
    lat = np.radians([n.latitude for n in nodes])
    lon = np.radians([n.longitude for n in nodes])
    phi = math.radians(target.latitude)
    h = np.sin((lat - phi) / 2) ** 2 + math.cos(phi) * np.cos(lat) * np.sin(
        (lon - math.radians(target.longitude)) / 2
    ) ** 2
    dist = 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))
    return int(np.argmin(dist))  # argmin returns the first minimum


def downsample_to_hourly(samples: Sequence[WeatherSample]) -> list[WeatherSample]:
    """Keep the on-the-hour records of a 10-minute series (no aggregation)."""
    for prev, cur in zip(samples, samples[1:]):
        if cur.time <= prev.time:
            raise ValueError(f"samples not sorted at {format_time(cur.time)}")
    return [s for s in samples if s.time.minute == 0 and s.time.second == 0]


def interpolate_15min(series: PowerSeries) -> PowerSeries:
    """Linearly interpolate an hourly series onto a 15-minute grid.

    Interpolated entries take the test flag of the earlier endpoint.
    """
    if len(series) < 2:
        raise ValueError("need at least 2 entries to interpolate")
    secs = series.times.astype(np.int64)
    if not (np.diff(secs) == 3600).all():
        raise ValueError("series is not at hourly spacing")
    frac = np.array([0.0, 0.25, 0.5, 0.75])
    lo, hi = series.pw[:-1], series.pw[1:]
    pw = (lo[:, None] + frac[None, :] * (hi - lo)[:, None]).ravel()
    # guard against rounding leaving the [lo, hi] envelope
    pw = np.clip(pw, np.repeat(np.minimum(lo, hi), 4), np.repeat(np.maximum(lo, hi), 4))
    times = (secs[:-1, None] + (frac * 3600).astype(np.int64)[None, :]).ravel()
    flags = np.repeat(series.is_test[:-1], 4)
    return PowerSeries(
        times=np.append(times, secs[-1]).astype("datetime64[s]"),
        pw=np.append(pw, series.pw[-1]),
        is_test=np.append(flags, series.is_test[-1]),
    )
