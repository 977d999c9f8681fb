"""Latitude-weighted deterministic scores and multi-scale structural similarity."""
from __future__ import annotations

import dataclasses
from collections import defaultdict

import numpy as np
from scipy import ndimage

from .errors import ArgumentError, DegeneracyError
from .grid import ArrayOrField, check_pair, weighted_mean

# Wang, Simoncelli & Bovik (2003) per-scale exponents, finest scale first.
MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def _pairwise_valid(x, y):
    bad = np.isnan(x) | np.isnan(y)
    if bad.all():
        raise DegeneracyError("every cell is masked")
    return bad


def rmse(pred: ArrayOrField, truth: ArrayOrField, w: np.ndarray) -> float:
    x, y = check_pair(pred, truth)
    _pairwise_valid(x, y)
    return float(np.sqrt(weighted_mean((x - y) ** 2, w)))


def bias(pred: ArrayOrField, truth: ArrayOrField, w: np.ndarray) -> float:
    x, y = check_pair(pred, truth)
    _pairwise_valid(x, y)
    return weighted_mean(x - y, w)


def mae(pred: ArrayOrField, truth: ArrayOrField, w: np.ndarray) -> float:
    x, y = check_pair(pred, truth)
    _pairwise_valid(x, y)
    return weighted_mean(np.abs(x - y), w)


def acc(pred_anom: ArrayOrField, truth_anom: ArrayOrField, w: np.ndarray) -> float:
    """Weighted uncentred anomaly correlation. Inputs must already be anomalies."""
    a, b = check_pair(pred_anom, truth_anom)
    bad = _pairwise_valid(a, b)
    if bad.any():
        a = np.where(bad, np.nan, a)
        b = np.where(bad, np.nan, b)
    saa = weighted_mean(a * a, w)
    sbb = weighted_mean(b * b, w)
    if saa == 0.0 or sbb == 0.0:
        raise DegeneracyError("anomaly correlation undefined for an all-zero anomaly field")
    r = weighted_mean(a * b, w) / np.sqrt(saa * sbb)
    return float(np.clip(r, -1.0, 1.0))


@dataclasses.dataclass(frozen=True)
class MsSsimParams:
    """Constants and exponents of MS-SSIM.

    ``beta`` and ``gamma_exp`` are indexed finest scale first; ``alpha_M``
    applies to luminance at the coarsest scale only. ``window`` is the side
    of the Gaussian window (std ``sigma``); at scales smaller than the window
    it shrinks to the largest odd size that fits, down to ``min_window``.
    """

    K1: float = 0.01
    K2: float = 0.03
    L: float = 255.0
    alpha_M: float = MS_SSIM_WEIGHTS[-1]
    beta: tuple = MS_SSIM_WEIGHTS
    gamma_exp: tuple = MS_SSIM_WEIGHTS
    window: int = 11
    sigma: float = 1.5
    min_window: int = 3

    def __post_init__(self):
        if len(self.beta) < 1 or len(self.beta) != len(self.gamma_exp):
            raise ArgumentError("beta and gamma_exp must have the same length M >= 1")
        if not np.all(np.isfinite([self.alpha_M, *self.beta, *self.gamma_exp])):
            raise ArgumentError("exponents must be finite")
        if self.window % 2 == 0 or self.min_window % 2 == 0 or self.min_window > self.window:
            raise ArgumentError("window sizes must be odd with min_window <= window")

    @property
    def M(self) -> int:
        return len(self.beta)

    @classmethod
    def single_scale(cls, **kw) -> "MsSsimParams":
        """Parameters for which MS-SSIM reduces to plain SSIM."""
        return cls(alpha_M=1.0, beta=(1.0,), gamma_exp=(1.0,), **kw)


def _gauss(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size) - size // 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    h = g.size // 2
    y = ndimage.correlate1d(x, g, axis=0, mode="constant")
    y = ndimage.correlate1d(y, g, axis=1, mode="constant")
    return y[h : x.shape[0] - h, h : x.shape[1] - h]


def _downsample(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    y = ndimage.correlate1d(x, g, axis=0, mode="reflect")
    y = ndimage.correlate1d(y, g, axis=1, mode="reflect")
    n0, n1 = (y.shape[0] // 2) * 2, (y.shape[1] // 2) * 2
    y = y[:n0, :n1]
    return 0.25 * (y[0::2, 0::2] + y[1::2, 0::2] + y[0::2, 1::2] + y[1::2, 1::2])


def _window_at(shape, params: MsSsimParams) -> int:
    side = min(params.window, min(shape))
    if side % 2 == 0:
        side -= 1
    if side < params.min_window:
        raise ArgumentError(
            f"grid too small for {params.M} scales: {shape} cannot hold a {params.min_window}-cell window"
        )
    return side


def _lcs_maps(x, y, side, params):
    """Luminance, contrast and structure maps over valid windows."""
    g = _gauss(side, params.sigma)
    C1 = (params.K1 * params.L) ** 2
    C2 = (params.K2 * params.L) ** 2
    C3 = C2 / 2
    mx, my = _filter_valid(x, g), _filter_valid(y, g)
    vx = np.maximum(_filter_valid(x * x, g) - mx * mx, 0.0)
    vy = np.maximum(_filter_valid(y * y, g) - my * my, 0.0)
    cxy = _filter_valid(x * y, g) - mx * my
    sx, sy = np.sqrt(vx), np.sqrt(vy)
    lum = (2 * mx * my + C1) / (mx * mx + my * my + C1)
    con = (2 * sx * sy + C2) / (vx + vy + C2)
    struct = (cxy + C3) / (sx * sy + C3)
    return lum, con, struct


def _scale_term(maps_and_exps) -> float:
    # Maps sharing an exponent are multiplied per window before averaging, so
    # equal exponents reproduce the usual mean(l*c*s) / mean(c*s) forms.
    groups = defaultdict(lambda: 1.0)
    for m, e in maps_and_exps:
        groups[e] = groups[e] * m
    out = 1.0
    for e, m in groups.items():
        out *= max(float(np.mean(m)), 0.0) ** e
    return out


def _rescale_pair(pred, truth):
    x, y = check_pair(pred, truth)
    both = np.concatenate([x[~np.isnan(x)], y[~np.isnan(y)]])
    if both.size == 0:
        raise DegeneracyError("every cell is masked")
    lo, hi = both.min(), both.max()
    if hi == lo:
        return None, None
    x = (x - lo) * (255.0 / (hi - lo))
    y = (y - lo) * (255.0 / (hi - lo))
    x = np.where(np.isnan(x), np.nanmean(x), x)
    y = np.where(np.isnan(y), np.nanmean(y), y)
    return x, y


def ms_ssim(pred: ArrayOrField, truth: ArrayOrField, params: MsSsimParams = MsSsimParams()) -> float:
    """Multi-scale SSIM after jointly rescaling both fields to [0, 255].

    The rescale uses the min and max over both fields together, so an
    additive bias still lowers the score. Two identical constant fields
    score 1.
    """
    x, y = _rescale_pair(pred, truth)
    if x is None:
        return 1.0
    shape = x.shape
    for _ in range(params.M - 1):
        shape = (shape[0] // 2, shape[1] // 2)
    _window_at(shape, params)

    out = 1.0
    for j in range(params.M):
        side = _window_at(x.shape, params)
        lum, con, struct = _lcs_maps(x, y, side, params)
        terms = [(con, params.beta[j]), (struct, params.gamma_exp[j])]
        if j == params.M - 1:
            terms.append((lum, params.alpha_M))
        else:
            g = _gauss(side, params.sigma)
            x, y = _downsample(x, g), _downsample(y, g)
        out *= _scale_term(terms)
    return float(out)


def ssim(pred: ArrayOrField, truth: ArrayOrField, params: MsSsimParams = MsSsimParams()) -> float:
    """Single-scale SSIM: mean of the l*c*s map at full resolution."""
    x, y = _rescale_pair(pred, truth)
    if x is None:
        return 1.0
    lum, con, struct = _lcs_maps(x, y, _window_at(x.shape, params), params)
    return float(np.mean(lum * con * struct))
