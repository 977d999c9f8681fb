"""Binned 2-D power spectra and the spectral divergence / residual scores."""
from __future__ import annotations

import dataclasses
import math
import warnings
from collections.abc import Sequence
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, DegeneracyError, ShapeError
from .grid import ArrayOrField, as_array

CLAMP = 1e-9
# Masked power below this fraction of the total is FFT roundoff, not signal.
ROUNDOFF_FRACTION = 1e-24


@dataclasses.dataclass(frozen=True, eq=False)
class SpectrumBins:
    """Power per integer scalar wavenumber.

    ``normalized`` is zero outside ``q_mask`` and sums to one inside it once
    :func:`restrict_and_normalize` has been applied; before that it is None.
    """

    k: np.ndarray
    power: np.ndarray
    q_mask: np.ndarray
    normalized: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.k)
        if len(self.power) != n or len(self.q_mask) != n:
            raise ShapeError("k, power and q_mask must have equal length")
        if self.normalized is not None and len(self.normalized) != n:
            raise ShapeError("normalized must have one entry per bin")

    @classmethod
    def from_distribution(cls, values: Sequence[float]) -> "SpectrumBins":
        """Wrap an already-normalized spectrum (all bins selected)."""
        p = np.asarray(values, dtype=np.float64)
        return cls(np.arange(p.size), p.copy(), np.ones(p.size, bool), p.copy())


@lru_cache(maxsize=32)
def wavenumber_bins(n_lat: int, n_lon: int) -> tuple[np.ndarray, int]:
    """Integer bin index of every 2-D DFT mode and the number of bins.

    Index = round(sqrt(kx^2 + ky^2)) with signed integer frequencies.
    """
    ky = np.fft.fftfreq(n_lat) * n_lat
    kx = np.fft.fftfreq(n_lon) * n_lon
    kk = np.sqrt(ky[:, None] ** 2 + kx[None, :] ** 2)
    idx = np.rint(kk).astype(np.int64)
    n_bins = max(int(idx.max()), math.floor(math.hypot(n_lat / 2, n_lon / 2))) + 1
    idx.flags.writeable = False
    return idx, n_bins


def _fill_nan(x: np.ndarray) -> np.ndarray:
    bad = np.isnan(x)
    if bad.all():
        raise DegeneracyError("every cell is masked")
    if bad.any():
        x = np.where(bad, x[~bad].mean(), x)
    return x


def power_spectrum(field: ArrayOrField) -> SpectrumBins:
    """Summed |F(kx, ky)|^2 per rounded scalar wavenumber.

    Missing cells are filled with the mean of the valid cells first, which
    only adds power at k = 0.
    """
    x = as_array(field)
    if x.ndim != 2 or min(x.shape) < 2:
        raise ArgumentError(f"power spectrum needs a 2-D grid of at least 2x2, got {x.shape}")
    x = _fill_nan(x)
    F = np.fft.fft2(x)
    p2d = F.real**2 + F.imag**2
    idx, n_bins = wavenumber_bins(*x.shape)
    power = np.bincount(idx.ravel(), weights=p2d.ravel(), minlength=n_bins)
    return SpectrumBins(np.arange(power.size), power, np.ones(power.size, bool))


def quantile_cut(k: np.ndarray, q: float) -> float:
    """Nearest-rank q-quantile of the bin wavenumbers."""
    if not 0.0 <= q <= 1.0:
        raise ArgumentError(f"q must lie in [0, 1], got {q}")
    s = np.sort(np.asarray(k))
    rank = max(math.ceil(q * s.size), 1)
    return s[rank - 1]


def restrict_and_normalize(spec: SpectrumBins, q: float) -> SpectrumBins:
    """Keep bins with k >= Q(q) and normalize their power to sum to one."""
    mask = np.asarray(spec.k) >= quantile_cut(spec.k, q)
    total = spec.power[mask].sum()
    if not total > ROUNDOFF_FRACTION * spec.power.sum():
        raise DegeneracyError(f"zero power above the q={q} wavenumber cut")
    normalized = np.where(mask, spec.power / total, 0.0)
    return SpectrumBins(spec.k, spec.power, mask, normalized)


def _masked_pair(pred: SpectrumBins, truth: SpectrumBins):
    if pred.normalized is None or truth.normalized is None:
        raise ArgumentError("spectra must be normalized first")
    if not np.array_equal(pred.q_mask, truth.q_mask) or not np.array_equal(pred.k, truth.k):
        raise ShapeError("spectra have different bins or masks")
    m = truth.q_mask
    return pred.normalized[m], truth.normalized[m]


def spec_div(pred: SpectrumBins, truth: SpectrumBins) -> float:
    """sum S'(k) log(S'(k) / max(S_pred'(k), 1e-9)) over selected bins, natural log.

    Bins with zero target power contribute nothing, bins where both spectra
    agree contribute exactly zero, and the ratio itself is floored at 1e-9.
    """
    p, t = _masked_pair(pred, truth)
    nz = t > 0
    p, t = p[nz], t[nz]
    ratio = np.where(p == t, 1.0, t / np.maximum(p, CLAMP))
    return float(np.sum(t * np.log(np.maximum(ratio, CLAMP))))


def spec_res(pred: SpectrumBins, truth: SpectrumBins) -> float:
    """Root-mean-square difference of the normalized spectra over selected bins."""
    p, t = _masked_pair(pred, truth)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def spectral_scores(pred: ArrayOrField, truth: ArrayOrField, q: float = 0.9) -> tuple[float, float]:
    """(SpecDiv, SpecRes) of one field pair."""
    a, b = as_array(pred), as_array(truth)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    sp = restrict_and_normalize(power_spectrum(a), q)
    st = restrict_and_normalize(power_spectrum(b), q)
    return spec_div(sp, st), spec_res(sp, st)


def batch_mean_spectral_scores(
    preds: Sequence[ArrayOrField], truths: Sequence[ArrayOrField], q: float = 0.9
) -> tuple[float, float]:
    """Average the fields over the batch first, then score the mean fields once."""
    if len(preds) == 0 or len(preds) != len(truths):
        raise ArgumentError("need equally sized non-empty batches")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = np.nanmean(np.stack([as_array(x) for x in preds]), axis=0)
        t = np.nanmean(np.stack([as_array(x) for x in truths]), axis=0)
    return spectral_scores(p, t, q)
