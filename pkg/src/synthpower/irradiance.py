"""Irradiance unit conversions and component decomposition.

All functions accept floats or numpy arrays and broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ValidationError

INTERVAL_S = 600.0
ZENITH_CUTOFF_DEG = 87.0
DNI_MAX = 1500.0


@dataclass(frozen=True)
class IrradianceTriple:
    ghi: float | np.ndarray
    dhi: float | np.ndarray
    dni: float | np.ndarray

    def __post_init__(self):
        ghi, dhi, dni = (np.asarray(v, dtype=float) for v in (self.ghi, self.dhi, self.dni))
        if (ghi < 0).any() or (dhi < 0).any() or (dni < 0).any():
            raise ValidationError("irradiance components must be non-negative")
        if (dhi > ghi).any():
            raise ValidationError("diffuse exceeds global")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def energy_sum_to_power(energy):
    """Convert a 10-minute energy sum in J/cm^2 into mean irradiance in W/m^2."""
    energy = np.asarray(energy, dtype=float)
    if (energy < 0).any():
        raise ValueError("negative energy sum")
    return _out(energy * 1e4 / INTERVAL_S)


def estimate_dni(ghi, dhi, zenith_deg):
    """Direct normal irradiance from the global/diffuse pair.

    Zero at or beyond the 87 degree zenith cutoff; clipped to [0, 1500] W/m^2.
    """
    ghi = np.asarray(ghi, dtype=float)
    dhi = np.asarray(dhi, dtype=float)
    zenith = np.asarray(zenith_deg, dtype=float)
    if (dhi > ghi).any():
        raise ValueError("diffuse exceeds global")
    up = zenith < ZENITH_CUTOFF_DEG
    cos_z = np.where(up, np.cos(np.radians(zenith)), 1.0)
    dni = np.where(up, (ghi - dhi) / cos_z, 0.0)
    return _out(np.clip(dni, 0.0, DNI_MAX))


def deaccumulate_nwp_mean(mean_now, horizon_now, mean_prev, horizon_prev):
    """Unroll a since-run-start mean into the value for one hourly step.

    Negative results from numerical noise in the accumulated fields are
    clipped to zero.
    """
    horizon_now = np.asarray(horizon_now)
    horizon_prev = np.asarray(horizon_prev)
    if (horizon_now != horizon_prev + 1).any() or (horizon_now < 1).any():
        raise ValueError("non-consecutive horizons")
    inst = np.asarray(mean_now, dtype=float) * horizon_now - np.asarray(mean_prev, dtype=float) * horizon_prev
    return _out(np.maximum(inst, 0.0))


def deaccumulate_run(means, horizons):
    """De-accumulate a whole run ordered by horizon, starting at horizon 1.

    The first step is taken relative to the run start (zero accumulation).
    """
    means = np.asarray(means, dtype=float)
    horizons = np.asarray(horizons, dtype=np.int64)
    if len(horizons) == 0:
        return means.copy()
    if horizons[0] != 1:
        raise ValueError("run must start at horizon 1")
    prev_means = np.concatenate([[0.0], means[:-1]])
    return np.asarray(deaccumulate_nwp_mean(means, horizons, prev_means, horizons - 1))


def accumulate_run(values, horizons):
    """Inverse of :func:`deaccumulate_run`: running mean since the run start."""
    values = np.asarray(values, dtype=float)
    horizons = np.asarray(horizons, dtype=np.int64)
    if len(horizons) and (horizons != np.arange(1, len(horizons) + 1)).any():
        raise ValueError("run must cover horizons 1..H consecutively")
    return np.cumsum(values) / horizons
