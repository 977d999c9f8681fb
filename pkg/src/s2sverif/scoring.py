"""Shared scoring context and per-pair metric dispatch."""
from __future__ import annotations

import dataclasses
from collections.abc import Iterable
from typing import Optional

import numpy as np

from . import deterministic as det
from . import spectral
from .errors import ArgumentError
from .grid import Climatology, GridField, GridSpec, anomaly, build_lat_weights

DETERMINISTIC_METRICS = ("rmse", "bias", "acc", "ms_ssim", "spec_div", "spec_res")
PROBABILISTIC_METRICS = ("crps", "crpss", "spread", "ssr")


@dataclasses.dataclass(frozen=True, eq=False)
class ScoringContext:
    """Read-only state shared by every metric call: weights, q, MS-SSIM params, climatology."""

    weights: np.ndarray
    q: float = 0.9
    ms_ssim: det.MsSsimParams = det.MsSsimParams()
    clim: Optional[Climatology] = None
    crps_weighting: str = "score"

    @classmethod
    def for_grid(cls, spec: GridSpec, **kw) -> "ScoringContext":
        return cls(build_lat_weights(spec), **kw)


def _anomalies(pred, truth, ctx):
    if isinstance(pred, GridField) and isinstance(truth, GridField):
        if ctx.clim is None:
            raise ArgumentError("ACC on raw fields needs a climatology in the scoring context")
        return anomaly(pred, ctx.clim), anomaly(truth, ctx.clim)
    return pred, truth


def score_many(metrics: Iterable[str], pred, truth, ctx: ScoringContext) -> dict[str, float]:
    """Evaluate several deterministic metrics on one pair, sharing the spectra."""
    metrics = list(metrics)
    out = {}
    if "spec_div" in metrics or "spec_res" in metrics:
        sd, sr = spectral.spectral_scores(pred, truth, ctx.q)
        out["spec_div"], out["spec_res"] = sd, sr
    for m in metrics:
        if m in ("spec_div", "spec_res"):
            continue
        if m == "rmse":
            out[m] = det.rmse(pred, truth, ctx.weights)
        elif m == "bias":
            out[m] = det.bias(pred, truth, ctx.weights)
        elif m == "mae":
            out[m] = det.mae(pred, truth, ctx.weights)
        elif m == "acc":
            out[m] = det.acc(*_anomalies(pred, truth, ctx), ctx.weights)
        elif m == "ms_ssim":
            out[m] = det.ms_ssim(pred, truth, ctx.ms_ssim)
        else:
            raise ArgumentError(f"unknown deterministic metric {m!r}")
    return {m: out[m] for m in metrics}


def score_pair(metric: str, pred, truth, ctx: ScoringContext) -> float:
    return score_many([metric], pred, truth, ctx)[metric]
