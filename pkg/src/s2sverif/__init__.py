"""Verification metrics for gridded subseasonal forecasts."""
from .grid import GridSpec, GridField, Climatology, build_lat_weights, build_climatology, anomaly
from .deterministic import rmse, bias, mae, acc, ms_ssim, ssim, MsSsimParams
from .spectral import SpectrumBins, power_spectrum, restrict_and_normalize, spec_div, spec_res
from .probabilistic import EnsembleField, crps, crpss, spread, spread_skill_ratio, ensemble_metric
from .scoring import ScoringContext

__all__ = [
    "GridSpec", "GridField", "Climatology", "build_lat_weights", "build_climatology", "anomaly",
    "rmse", "bias", "mae", "acc", "ms_ssim", "ssim", "MsSsimParams",
    "SpectrumBins", "power_spectrum", "restrict_and_normalize", "spec_div", "spec_res",
    "EnsembleField", "crps", "crpss", "spread", "spread_skill_ratio", "ensemble_metric",
    "ScoringContext",
]

__version__ = "0.1.0"
