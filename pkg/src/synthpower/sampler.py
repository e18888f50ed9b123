"""Seeded random plant configurations."""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import GeoLocation, ValidationError
from .pv_model import PvPlantMeta
from .wind_model import WindPlantMeta

CATALOG_HEADER = ["turbine_type", "min_hub_m", "max_hub_m", "rated_kw", "rotor_m"]


@dataclass(frozen=True)
class TurbineSpec:
    turbine_type: str
    min_hub_m: float
    max_hub_m: float
    rated_kw: float
    rotor_m: float


def plant_rng(seed: int, *keys) -> np.random.Generator:
    """Generator keyed on (seed, keys...), stable across processes and runs.

    Python's ``hash`` is salted per process, so keys go through SHA-256.
    """
    digest = hashlib.sha256(repr((int(seed), *map(str, keys))).encode()).digest()
    words = np.frombuffer(digest, dtype="<u4").tolist()
    return np.random.default_rng(np.random.SeedSequence(words))


def sample_pv_meta(seed: int, loc_id, location: GeoLocation) -> PvPlantMeta:
    rng = plant_rng(seed, "pv", loc_id)
    tilt = rng.uniform(0.0, 90.0)
    azimuth = rng.uniform(90.0, 270.0)
    return PvPlantMeta(loc_id=loc_id, location=location, tilt_deg=float(tilt), azimuth_deg=float(azimuth))


def sample_wind_meta(seed: int, loc_id, location: GeoLocation, catalog: Sequence[TurbineSpec]) -> WindPlantMeta:
    if len(catalog) == 0:
        raise ValueError("empty turbine catalog")
    rng = plant_rng(seed, "wind", loc_id)
    spec = catalog[int(rng.integers(len(catalog)))]
    hub = spec.max_hub_m if rng.random() < 0.5 else spec.min_hub_m
    return WindPlantMeta(
        loc_id=loc_id,
        location=location,
        hub_height_m=float(hub),
        rotor_diameter_m=float(spec.rotor_m),
        rated_power_kw=float(spec.rated_kw),
        turbine_type=spec.turbine_type,
    )


def read_catalog(path=None) -> list[TurbineSpec]:
    """Load a turbine catalog CSV; the shipped placeholder catalog by default."""
    if path is None:
        text = resources.files("synthpower").joinpath("data", "turbine_catalog.csv").read_text()
    else:
        text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows or rows[0] != CATALOG_HEADER:
        raise ValidationError(f"turbine catalog header must be {','.join(CATALOG_HEADER)}")
    out = []
    for r in rows[1:]:
        spec = TurbineSpec(r[0], float(r[1]), float(r[2]), float(r[3]), float(r[4]))
        if spec.min_hub_m > spec.max_hub_m or spec.min_hub_m <= 0:
            raise ValidationError(f"turbine {spec.turbine_type}: bad hub height range")
        out.append(spec)
    return out
