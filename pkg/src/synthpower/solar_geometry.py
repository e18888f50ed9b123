"""Solar position from the PSA (Plataforma Solar de Almeria) algorithm.

Blanco-Muriel et al., "Computing the solar vector", Solar Energy 70 (2001).
Accuracy is roughly 0.01 degrees for the years around 2000, degrading slowly
outside 1999-2015. Atmospheric refraction is not applied.

Azimuth is measured clockwise from north (east 90, south 180, west 270).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GeoLocation, unix_seconds

_EARTH_MEAN_RADIUS_KM = 6371.01
_ASTRONOMICAL_UNIT_KM = 149597890.0


@dataclass(frozen=True)
class SolarPosition:
    """Sun angles in degrees; fields are floats or equally shaped arrays."""

    azimuth_deg: float | np.ndarray
    zenith_deg: float | np.ndarray

    @property
    def elevation_deg(self):
        return 90.0 - self.zenith_deg


def _psa(unix: np.ndarray, lat_deg, lon_deg) -> tuple[np.ndarray, np.ndarray]:
    jd = unix / 86400.0 + 2440587.5
    n = jd - 2451545.0
    decimal_hours = np.mod(unix, 86400.0) / 3600.0

    omega = 2.1429 - 0.0010394594 * n
    mean_longitude = 4.8950630 + 0.017202791698 * n
    mean_anomaly = 6.2400600 + 0.0172019699 * n
    ecliptic_longitude = (
        mean_longitude
        + 0.03341607 * np.sin(mean_anomaly)
        + 0.00034894 * np.sin(2 * mean_anomaly)
        - 0.0001134
        - 0.0000203 * np.sin(omega)
    )
    obliquity = 0.4090928 - 6.2140e-9 * n + 0.0000396 * np.cos(omega)

    sin_lon = np.sin(ecliptic_longitude)
    right_ascension = np.mod(
        np.arctan2(np.cos(obliquity) * sin_lon, np.cos(ecliptic_longitude)), 2 * np.pi
    )
    declination = np.arcsin(np.sin(obliquity) * sin_lon)

    gmst = 6.6974243242 + 0.0657098283 * n + decimal_hours
    lmst = np.radians(gmst * 15.0 + lon_deg)
    hour_angle = lmst - right_ascension

    lat = np.radians(lat_deg)
    cos_lat, sin_lat = np.cos(lat), np.sin(lat)
    cos_ha = np.cos(hour_angle)
    cos_zen = cos_lat * cos_ha * np.cos(declination) + np.sin(declination) * sin_lat
    zenith = np.arccos(np.clip(cos_zen, -1.0, 1.0))
    azimuth = np.mod(
        np.arctan2(-np.sin(hour_angle), np.tan(declination) * cos_lat - sin_lat * cos_ha),
        2 * np.pi,
    )
    parallax = (_EARTH_MEAN_RADIUS_KM / _ASTRONOMICAL_UNIT_KM) * np.sin(zenith)
    zenith = zenith + parallax
    return np.degrees(azimuth), np.degrees(zenith)


def solar_position(time, loc: GeoLocation) -> SolarPosition:
    """Apparent sun position for one timestamp or an array of timestamps.

    ``time`` may be a ``datetime``, ``numpy.datetime64`` or a sequence of
    either; array input yields array-valued angles.
    """
    scalar = not (isinstance(time, (list, tuple, np.ndarray)) or hasattr(time, "dt"))
    unix = unix_seconds(time)
    azimuth, zenith = _psa(unix, loc.latitude, loc.longitude)
    # degrees(2*pi - tiny) can round up to exactly 360
    azimuth = np.where(azimuth >= 360.0, 0.0, azimuth)
    if scalar:
        return SolarPosition(azimuth_deg=float(azimuth[0]), zenith_deg=float(zenith[0]))
    return SolarPosition(azimuth_deg=azimuth, zenith_deg=zenith)
