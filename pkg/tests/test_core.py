from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthpower.core import (
    FEATURES,
    GeoLocation,
    NwpRecord,
    PowerSeries,
    ValidationError,
    WeatherSample,
    downsample_to_hourly,
    format_time,
    haversine_km,
    input_columns,
    interpolate_15min,
    nearest_grid_node,
    parse_time,
)

UTC = timezone.utc
T0 = datetime(2019, 11, 30, 22, tzinfo=UTC)

lats = st.floats(-90, 90, allow_nan=False)
lons = st.floats(-180, 180, allow_nan=False)


def hourly(values, start=T0, flags=None):
    times = [start + timedelta(hours=i) for i in range(len(values))]
    return PowerSeries(times, values, flags if flags is not None else [False] * len(values))


def test_time_format_round_trip():
    text = "2019-12-01 00:00:00"
    assert format_time(parse_time(text)) == text
    assert parse_time(text).tzinfo is not None


def test_geolocation_bounds():
    with pytest.raises(ValidationError):
        GeoLocation(91, 0)
    with pytest.raises(ValidationError):
        GeoLocation(0, -181)
    assert GeoLocation(1, 2).altitude_m == 0


def test_weather_sample_radiation_pairing():
    with pytest.raises(ValidationError):
        WeatherSample(T0, 3.0, ghi_energy=1.0)
    with pytest.raises(ValidationError):
        WeatherSample(T0, 3.0, ghi_energy=1.0, dhi_energy=2.0)
    assert not WeatherSample(T0, 3.0).has_radiation


def test_nwp_record_schema():
    pv = dict.fromkeys(FEATURES["pv"], 1.0)
    assert NwpRecord(T0, 24, pv).kind == "pv"
    assert NwpRecord(T0, 24, dict.fromkeys(FEATURES["wind"], 1.0)).kind == "wind"
    mixed = {**pv, "U_GVL_58_HL": 1.0}
    with pytest.raises(ValidationError):
        NwpRecord(T0, 24, mixed)
    with pytest.raises(ValidationError):
        NwpRecord(T0, 24, {**pv, "ASWDIRS_SFC_0_M_INSTANT": -1.0})


def test_feature_counts():
    # usable features include the horizon column
    assert len(input_columns("pv")) - 1 == 14
    assert len(input_columns("wind")) - 1 == 18


def test_power_series_invariants():
    with pytest.raises(ValidationError):
        hourly([0.2, 1.5])
    with pytest.raises(ValidationError):
        PowerSeries([T0, T0], [0.1, 0.2], [False, False])
    with pytest.raises(ValidationError):
        hourly([np.nan])


class TestNearestGridNode:
    def test_exact_match(self):
        nodes = [GeoLocation(50, 10), GeoLocation(51, 10), GeoLocation(52, 11)]
        assert nearest_grid_node(GeoLocation(52, 11), nodes) == 2

    def test_derived_distances(self):
        target = GeoLocation(50, 10)
        nodes = [GeoLocation(50, 11), GeoLocation(51, 10)]
        assert haversine_km(target, nodes[0]) == pytest.approx(71.47, abs=0.05)
        assert haversine_km(target, nodes[1]) == pytest.approx(111.19, abs=0.05)
        assert nearest_grid_node(target, nodes) == 0

    def test_tie_goes_to_lowest_index(self):
        nodes = [GeoLocation(50, 11), GeoLocation(50, 11)]
        assert nearest_grid_node(GeoLocation(50, 10), nodes) == 0

    def test_empty(self):
        with pytest.raises(ValueError, match="no grid nodes"):
            nearest_grid_node(GeoLocation(0, 0), [])

    @given(lats, lons, lats, lons)
    def test_haversine_symmetric(self, a1, o1, a2, o2):
        a, b = GeoLocation(a1, o1), GeoLocation(a2, o2)
        assert haversine_km(a, b) == pytest.approx(haversine_km(b, a), abs=1e-9)
        assert haversine_km(a, a) == 0.0

    @settings(max_examples=50)
    @given(st.lists(st.tuples(lats, lons), min_size=1, max_size=20), lats, lons)
    def test_matches_linear_scan(self, pts, lat, lon):
        nodes = [GeoLocation(a, o) for a, o in pts]
        target = GeoLocation(lat, lon)
        dists = [haversine_km(target, n) for n in nodes]
        idx = nearest_grid_node(target, nodes)
        assert dists[idx] <= min(dists) + 1e-6


class TestDownsample:
    def samples(self, n, start=T0):
        return [WeatherSample(start + timedelta(minutes=10 * i), 1.0) for i in range(n)]

    def test_one_hour(self):
        out = downsample_to_hourly(self.samples(6))
        assert [s.time for s in out] == [T0]

    def test_one_day(self):
        assert len(downsample_to_hourly(self.samples(144))) == 24

    def test_no_full_hours(self):
        assert downsample_to_hourly(self.samples(5, T0 + timedelta(minutes=10))) == []

    def test_unsorted(self):
        s = self.samples(3)
        with pytest.raises(ValueError):
            downsample_to_hourly([s[1], s[0], s[2]])

    @given(st.integers(0, 500), st.integers(0, 5))
    def test_count_matches_hour_stamps(self, n, offset):
        s = self.samples(n, T0 + timedelta(minutes=10 * offset))
        expected = sum(1 for x in s if x.time.minute == 0)
        assert len(downsample_to_hourly(s)) == expected


class TestInterpolate:
    def test_linear(self):
        out = interpolate_15min(hourly([0.0, 1.0]))
        assert out.pw.tolist() == [0, 0.25, 0.5, 0.75, 1.0]
        assert (np.diff(out.times.astype(np.int64)) == 900).all()

    def test_constant(self):
        assert (interpolate_15min(hourly([0.4, 0.4])).pw == 0.4).all()

    def test_midpoint(self):
        out = interpolate_15min(hourly([0.2, 0.6]))
        assert out.entries[2][0] == T0 + timedelta(minutes=30)
        assert out.pw[2] == pytest.approx(0.4)

    def test_flags_from_earlier_endpoint(self):
        out = interpolate_15min(hourly([0.1, 0.2, 0.3], flags=[False, True, True]))
        assert out.is_test.tolist() == [False] * 4 + [True] * 5

    def test_too_short(self):
        with pytest.raises(ValueError):
            interpolate_15min(hourly([0.5]))

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=40))
    def test_range_preserving(self, values):
        out = interpolate_15min(hourly(values))
        assert out.pw.min() >= min(values) and out.pw.max() <= max(values)
        assert len(out) == 4 * (len(values) - 1) + 1
        assert out.pw[::4].tolist() == values
