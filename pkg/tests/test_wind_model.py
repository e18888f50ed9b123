from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import power_law
from synthpower.core import GeoLocation, ValidationError, WeatherSample
from synthpower.sampler import read_catalog
from synthpower.wind_model import (
    MCLEAN_TERRAINS,
    PowerCurve,
    WindPlantMeta,
    builtin_turbine_curve,
    extrapolate_wind,
    load_mclean_curve,
    power_curve_lookup,
    read_mclean_curves,
    read_power_curve,
    simulate_wind_series,
    write_mclean_curves,
    write_power_curve,
)

UTC = timezone.utc
SPEEDS = np.arange(0.0, 26.0)


def curve_with(points=None):
    powers = np.clip((SPEEDS - 3) ** 3, 0, 1000.0)
    for s, p in (points or {}).items():
        powers[int(s)] = p
    return PowerCurve(SPEEDS, powers)


def wind_meta(hub):
    return WindPlantMeta(1, GeoLocation(53, 8), hub, 82.0, 1000.0, "test")


class TestExtrapolate:
    def test_reference_height(self):
        assert extrapolate_wind(7.3, 10.0) == 7.3

    def test_calm(self):
        assert extrapolate_wind(0.0, 120.0) == 0.0

    def test_80m(self):
        assert extrapolate_wind(5.0, 80.0) == pytest.approx(6.7295, abs=1e-4)

    def test_bad_height(self):
        with pytest.raises(ValueError):
            extrapolate_wind(5.0, 0.0)

    @given(st.floats(0, 30), st.floats(20, 160))
    def test_matches_power_law(self, u, z):
        assert extrapolate_wind(u, z) == pytest.approx(power_law(u, z), rel=1e-12, abs=0)

    @given(st.floats(0.1, 30), st.floats(1, 200), st.floats(1, 200))
    def test_increasing_in_height(self, u, z1, z2):
        lo, hi = sorted((z1, z2))
        assert extrapolate_wind(u, lo) <= extrapolate_wind(u, hi)
        # the 1/7 power can map heights a few ulps apart to the same float
        if hi > lo * (1 + 1e-9):
            assert extrapolate_wind(u, lo) < extrapolate_wind(u, hi)


class TestCurve:
    def test_validation(self):
        with pytest.raises(ValidationError):
            PowerCurve([0, 2, 1], [0, 1, 2])
        with pytest.raises(ValidationError):
            PowerCurve([0, 10], [0, 5])  # does not reach 25 m/s
        with pytest.raises(ValidationError):
            PowerCurve(SPEEDS, -np.ones(26))

    def test_below_cut_in(self):
        assert power_curve_lookup(2.0, curve_with()) == 0.0

    def test_linear_midpoint(self):
        c = curve_with({10: 500.0, 11: 700.0})
        assert power_curve_lookup(10.5, c) * c.rated_power == pytest.approx(600.0)

    def test_hold_above_25(self):
        c = curve_with()
        assert power_curve_lookup(30.0, c) == power_curve_lookup(25.0, c) == 1.0

    @given(st.lists(st.floats(0, 40), min_size=1, max_size=50))
    def test_range_and_knots(self, us):
        c = builtin_turbine_curve(read_catalog()[0].turbine_type)
        p = power_curve_lookup(np.array(us), c)
        assert ((p >= 0) & (p <= 1)).all()
        knots = power_curve_lookup(c.speeds, c)
        assert np.array_equal(knots, c.powers / c.rated_power)

    def test_rated_plateau(self):
        for spec in read_catalog():
            c = builtin_turbine_curve(spec.turbine_type)
            assert c.rated_power == spec.rated_kw
            assert abs(power_curve_lookup(25.0, c) - 1.0) <= 1e-12

    def test_round_trip(self, tmp_path):
        c = curve_with({7: 123.456789012345678})
        write_power_curve(c, tmp_path / "c.csv")
        assert read_power_curve(tmp_path / "c.csv") == c


class TestMcLean:
    def test_four_distinct_curves(self):
        curves = [load_mclean_curve(t) for t in MCLEAN_TERRAINS]
        for i, a in enumerate(curves):
            for b in curves[i + 1:]:
                assert a != b

    def test_unknown_terrain(self):
        with pytest.raises(KeyError):
            load_mclean_curve("Desert")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_mclean_curve("Upland", tmp_path / "none.csv")

    def test_round_trip(self, tmp_path):
        curves = read_mclean_curves()
        write_mclean_curves(curves, tmp_path / "m.csv")
        again = read_mclean_curves(tmp_path / "m.csv")
        assert curves.keys() == again.keys()
        assert all(curves[k] == again[k] for k in curves)


class TestSimulate:
    def weather(self, speeds):
        t0 = datetime(2019, 11, 1, tzinfo=UTC)
        return [WeatherSample(t0 + timedelta(hours=i), u) for i, u in enumerate(speeds)]

    def test_calm(self):
        assert (simulate_wind_series(self.weather([0.0] * 5), wind_meta(100), curve_with()).pw == 0).all()

    def test_single_sample(self):
        c = curve_with()
        pw = simulate_wind_series(self.weather([5.0]), wind_meta(80), c).pw[0]
        assert pw == pytest.approx(power_curve_lookup(6.7295, c), abs=1e-4)

    def test_hub_at_reference_height(self):
        c = curve_with()
        speeds = [0.0, 3.5, 7.25, 12.0, 30.0]
        pw = simulate_wind_series(self.weather(speeds), wind_meta(10), c).pw
        assert np.array_equal(pw, power_curve_lookup(np.array(speeds), c))
