"""Synthetic wind and PV power datasets with a day-ahead forecasting benchmark."""
from .core import GeoLocation, NwpRecord, PowerSeries, ValidationError, WeatherSample
from .evaluation import ScenarioConfig, ScenarioResult, physical_baseline_pv, physical_baseline_wind, report_tables, run_scenario
from .gbrt import GbrtConfig, GbrtModel, fit_gbrt, grid_search_cv, load_model, predict, save_model
from .metrics import nrmse, skill
from .pipeline import DatasetBundle, read_bundle, write_bundle
from .pv_model import PvPlantMeta
from .wind_model import PowerCurve, WindPlantMeta

__all__ = [
    "GeoLocation", "NwpRecord", "PowerSeries", "ValidationError", "WeatherSample",
    "ScenarioConfig", "ScenarioResult", "physical_baseline_pv", "physical_baseline_wind",
    "report_tables", "run_scenario", "GbrtConfig", "GbrtModel", "fit_gbrt", "grid_search_cv",
    "predict", "save_model", "load_model", "nrmse", "skill", "DatasetBundle", "read_bundle", "write_bundle",
    "PvPlantMeta", "PowerCurve", "WindPlantMeta",
]
