"""Ensemble scores: member-averaged metrics, CRPS, CRPSS, spread and SSR."""
from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence

import numpy as np

from .errors import ArgumentError, DegeneracyError, ShapeError
from .grid import ArrayOrField, GridField, as_array, weighted_mean

WEIGHTINGS = ("score", "value")


@dataclasses.dataclass(frozen=True)
class EnsembleField:
    members: tuple[GridField, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ArgumentError("an ensemble needs at least one member")
        first = members[0]
        for m in members[1:]:
            if m.spec != first.spec or (m.variable, m.level, m.valid_time, m.lead_days) != (
                first.variable,
                first.level,
                first.valid_time,
                first.lead_days,
            ):
                raise ShapeError("ensemble members must share grid, variable, level, valid time and lead")
        object.__setattr__(self, "members", members)

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def values(self) -> np.ndarray:
        """Stacked member values, shape (N, n_lat, n_lon)."""
        return np.stack([m.values for m in self.members])

    def mean_field(self) -> GridField:
        return self.members[0].replace(values=self.values.mean(axis=0), member=None)


def _stack(ens) -> np.ndarray:
    if isinstance(ens, EnsembleField):
        return ens.values
    x = np.asarray(ens, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError("ensemble array must have shape (N, n_lat, n_lon)")
    if x.shape[0] == 0:
        raise ArgumentError("an ensemble needs at least one member")
    return x


def _check_ens_truth(ens, truth):
    x = _stack(ens)
    y = as_array(truth)
    if isinstance(ens, EnsembleField) and isinstance(truth, GridField) and ens.members[0].spec != truth.spec:
        raise ShapeError("ensemble and truth are on different grids")
    if x.shape[1:] != y.shape:
        raise ShapeError(f"ensemble grid {x.shape[1:]} does not match truth {y.shape}")
    return x, y


def ensemble_metric(metric: str, ens: EnsembleField, truth: GridField, ctx) -> float:
    """Arithmetic mean over members of a deterministic metric.

    ``ctx`` is a :class:`~s2sverif.scoring.ScoringContext`.
    """
    from .scoring import score_pair

    vals = [score_pair(metric, m, truth, ctx) for m in ens.members]
    return math.fsum(vals) / len(vals)


def crps_map(ens, truth) -> np.ndarray:
    """Per-pixel CRPS of the empirical ensemble CDF.

    Uses mean|x_i - y| - sum_ij |x_i - x_j| / (2 N^2); a single member gives
    exactly |x - y|.
    """
    x, y = _check_ens_truth(ens, truth)
    n = x.shape[0]
    if n == 1:
        return np.abs(x[0] - y)
    skill = np.abs(x - y[None]).mean(axis=0)
    xs = np.sort(x, axis=0)
    coef = (2.0 * np.arange(n) - n + 1).reshape((n,) + (1,) * (x.ndim - 1))
    pair_sum = 2.0 * (coef * xs).sum(axis=0)
    return skill - pair_sum / (2.0 * n * n)


def crps(ens, truth, w: np.ndarray, weighting: str = "score") -> float:
    """Latitude-weighted grid mean of per-pixel ensemble CRPS.

    ``weighting="score"`` weights the per-pixel scores; ``"value"`` scales
    member and truth values by the weights first and averages uniformly.
    """
    x, y = _check_ens_truth(ens, truth)
    if weighting == "score":
        return weighted_mean(crps_map(x, y), w)
    if weighting == "value":
        ww = np.asarray(w)[:, None]
        return weighted_mean(crps_map(x * ww, y * ww), np.ones_like(w))
    raise ArgumentError(f"weighting must be one of {WEIGHTINGS}")


def crps_gaussian_map(mu, sigma, truth) -> np.ndarray:
    """Closed-form CRPS of N(mu, sigma^2) against observations."""
    from scipy.stats import norm

    mu, sigma, y = np.asarray(mu, float), np.asarray(sigma, float), as_array(truth)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (y - mu) / sigma
        out = sigma * (z * (2 * norm.cdf(z) - 1) + 2 * norm.pdf(z) - 1 / np.sqrt(np.pi))
    return np.where(sigma > 0, out, np.abs(y - mu))


def crpss(crps_forecast: float, crps_climatology: float) -> float:
    if not crps_climatology > 0:
        raise DegeneracyError("climatology CRPS must be positive for a skill score")
    return 1.0 - crps_forecast / crps_climatology


def spread(ens, w: np.ndarray, weighting: str = "score") -> float:
    """Grid mean of the across-member sample standard deviation (ddof=1)."""
    x = _stack(ens)
    if x.shape[0] < 2:
        raise ArgumentError("spread needs at least two members")
    x = x - x[0]  # shift so identical members give exactly zero
    if weighting == "score":
        return weighted_mean(x.std(axis=0, ddof=1), w)
    if weighting == "value":
        sd = (x * np.asarray(w)[:, None]).std(axis=0, ddof=1)
        return weighted_mean(sd, np.ones_like(w))
    raise ArgumentError(f"weighting must be one of {WEIGHTINGS}")


def spread_skill_ratio(ens: EnsembleField, truth: GridField, ctx) -> float:
    """Spread divided by the member-averaged RMSE."""
    skill = ensemble_metric("rmse", ens, truth, ctx)
    if not skill > 0:
        raise DegeneracyError("ensemble RMSE is zero; spread/skill ratio undefined")
    return spread(ens, ctx.weights, ctx.crps_weighting) / skill


def members_from_arrays(template: GridField, arrays: Sequence[ArrayOrField]) -> EnsembleField:
    return EnsembleField(
        tuple(template.replace(values=as_array(a), member=i) for i, a in enumerate(arrays))
    )
