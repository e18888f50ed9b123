"""Simplified PV model chain: transposition, DC derate, inverter clipping.

The chain is isotropic-sky POA irradiance -> linear DC power with a
temperature coefficient -> constant-efficiency inverter with an AC limit,
normalized by module peak power.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GeoLocation, PowerSeries, ValidationError, WeatherSample, format_time, to_datetime64
from .irradiance import IrradianceTriple, energy_sum_to_power, estimate_dni
from .solar_geometry import SolarPosition, solar_position

INVERTER_EFFICIENCY = 0.96
CELL_TEMP_C = 20.0
MODULE_NAME = "CS5P-220M"
INVERTER_NAME = "MICRO-0.25-I-OUTD-US-208"


@dataclass(frozen=True)
class PvPlantMeta:
    loc_id: int
    location: GeoLocation
    tilt_deg: float
    azimuth_deg: float
    module_peak_w: float = 220.0
    inverter_ac_limit_w: float = 250.0
    temp_coeff_per_k: float = -0.0045
    albedo: float = 0.25
    modules_per_string: int = 1
    strings_per_inverter: int = 1

    def __post_init__(self):
        if not 0.0 <= self.tilt_deg <= 90.0:
            raise ValidationError(f"plant {self.loc_id}: tilt {self.tilt_deg} outside [0, 90]")
        if not 90.0 <= self.azimuth_deg <= 270.0:
            raise ValidationError(f"plant {self.loc_id}: azimuth {self.azimuth_deg} outside [90, 270]")
        if not self.module_peak_w > 0 or not self.inverter_ac_limit_w > 0:
            raise ValidationError(f"plant {self.loc_id}: ratings must be positive")
        if not 0.0 <= self.albedo <= 1.0:
            raise ValidationError(f"plant {self.loc_id}: albedo outside [0, 1]")


def angle_of_incidence(sun: SolarPosition, tilt_deg, surface_azimuth_deg):
    """Angle between the sun vector and the plane normal, in degrees."""
    zen = np.radians(sun.zenith_deg)
    tilt = np.radians(tilt_deg)
    cos_aoi = np.cos(zen) * np.cos(tilt) + np.sin(zen) * np.sin(tilt) * np.cos(
        np.radians(np.asarray(sun.azimuth_deg) - surface_azimuth_deg)
    )
    aoi = np.degrees(np.arccos(np.clip(cos_aoi, -1.0, 1.0)))
    return float(aoi) if np.ndim(aoi) == 0 else aoi


def poa_irradiance(irr: IrradianceTriple, sun: SolarPosition, meta: PvPlantMeta):
    """Plane-of-array irradiance with an isotropic sky and ground reflection."""
    aoi = np.radians(angle_of_incidence(sun, meta.tilt_deg, meta.azimuth_deg))
    cos_tilt = np.cos(np.radians(meta.tilt_deg))
    beam = np.asarray(irr.dni) * np.maximum(0.0, np.cos(aoi))
    sky = np.asarray(irr.dhi) * (1 + cos_tilt) / 2
    ground = np.asarray(irr.ghi) * meta.albedo * (1 - cos_tilt) / 2
    poa = np.maximum(beam + sky + ground, 0.0)
    return float(poa) if np.ndim(poa) == 0 else poa


def pv_power(poa, cell_temp_c, meta: PvPlantMeta):
    poa = np.asarray(poa, dtype=float)
    p_dc = meta.module_peak_w * (poa / 1000.0) * (1 + meta.temp_coeff_per_k * (np.asarray(cell_temp_c) - 25.0))
    p_ac = np.minimum(p_dc * INVERTER_EFFICIENCY, meta.inverter_ac_limit_w)
    out = np.clip(p_ac / meta.module_peak_w, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def normalized_pv_output(times, ghi, dhi, meta: PvPlantMeta, zenith=None, azimuth=None) -> np.ndarray:
    """Run the chain on W/m^2 inputs; sun angles are computed unless given."""
    if zenith is None or azimuth is None:
        sun = solar_position(to_datetime64(times), meta.location)
    else:
        sun = SolarPosition(azimuth_deg=np.asarray(azimuth, float), zenith_deg=np.asarray(zenith, float))
    ghi = np.asarray(ghi, dtype=float)
    dhi = np.asarray(dhi, dtype=float)
    dni = estimate_dni(ghi, dhi, sun.zenith_deg)
    poa = poa_irradiance(IrradianceTriple(ghi, dhi, dni), sun, meta)
    return np.asarray(pv_power(poa, CELL_TEMP_C, meta), dtype=float)


def simulate_pv_series(weather: Sequence[WeatherSample], meta: PvPlantMeta) -> PowerSeries:
    for s in weather:
        if not s.has_radiation:
            raise ValueError(f"missing radiation at {format_time(s.time)}")
    times = to_datetime64([s.time for s in weather])
    ghi = energy_sum_to_power(np.array([s.ghi_energy for s in weather], dtype=float))
    dhi = energy_sum_to_power(np.array([s.dhi_energy for s in weather], dtype=float))
    pw = normalized_pv_output(times, ghi, dhi, meta)
    return PowerSeries(times=times, pw=pw, is_test=np.zeros(len(times), dtype=bool))
