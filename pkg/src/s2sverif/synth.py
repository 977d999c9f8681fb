"""Synthetic gridded fields with known statistics.

Random numbers
--------------
All randomness comes from Philox4x64-10 (numpy.random.Philox) with key
``(seed, stream)``. Block ``j = 1, 2, ...`` encrypts the counter ``(j, 0, 0, 0)``
and yields four 64-bit words, consumed in order. One Philox round maps counter
``c`` and key ``k`` to::

    (hi0, lo0) = mulhilo(0xD2E7470EE14C6C93, c0)
    (hi1, lo1) = mulhilo(0xCA5A826395121157, c2)
    c = (hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0)

followed by ``k += (0x9E3779B97F4A7C15, 0xBB67AE8584CAA73B)`` mod 2**64;
ten rounds make one block. ``stream`` packs what is being generated::

    stream = ((tag * 256 + lead) * 2**20 + date.toordinal()) * 2**16 + member

with tag 1 for base fields, 2 for ensemble perturbations and 3 for forecast
errors. Standard normals use Box-Muller on pairs of raw words ``(a, b)``::

    u1 = ((a >> 11) + 1) * 2**-53      # in (0, 1]
    u2 = (b >> 11) * 2**-53            # in [0, 1)
    z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)

so any platform with a Philox implementation can replay the same fields.
"""
from __future__ import annotations

import dataclasses
import datetime as dt

import numpy as np

from .errors import ArgumentError
from .grid import GridField, GridSpec
from .probabilistic import EnsembleField
from .spectral import wavenumber_bins

TAG_FIELD, TAG_MEMBER, TAG_FORECAST = 1, 2, 3


def stream_id(tag: int, date: dt.date, lead: int = 0, member: int = 0) -> int:
    if not (0 <= tag < 256 and 0 <= lead < 256 and 0 <= member < 2**16):
        raise ArgumentError("stream components out of range")
    return ((tag * 256 + lead) * 2**20 + date.toordinal()) * 2**16 + member


def standard_normals(seed: int, stream: int, n: int) -> np.ndarray:
    if not 0 <= seed < 2**64:
        raise ArgumentError("seed must fit in an unsigned 64-bit integer")
    bitgen = np.random.Philox(key=np.array([seed, stream], dtype=np.uint64))
    m = (n + 1) // 2
    raw = bitgen.random_raw(2 * m).astype(np.uint64)
    a, b = raw[0::2], raw[1::2]
    u1 = ((a >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0**-53
    u2 = (b >> np.uint64(11)).astype(np.float64) * 2.0**-53
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2 * np.pi * u2)
    z[1::2] = r * np.sin(2 * np.pi * u2)
    return z[:n]


@dataclasses.dataclass(frozen=True)
class SynthConfig:
    spec: GridSpec = dataclasses.field(default_factory=GridSpec.regular)
    seed: int = 0
    spectrum_slope: float = 3.0
    base_amplitude: float = 1.0
    ensemble_noise_std: float = 0.5
    drift_per_day: float = 0.0
    offset: float = 0.0
    variable: str = "x"
    level: str = ""


def _mode_amplitudes(shape: tuple[int, int], slope: float) -> np.ndarray:
    """Per-mode amplitude making the expected binned power ~ k^-slope for k >= 1."""
    idx, n_bins = wavenumber_bins(*shape)
    counts = np.bincount(idx.ravel(), minlength=n_bins).astype(np.float64)
    k = np.arange(n_bins, dtype=np.float64)
    per_bin = np.zeros(n_bins)
    nz = (k >= 1) & (counts > 0)
    per_bin[nz] = k[nz] ** (-slope) / counts[nz]
    amp2 = per_bin[idx]
    # unit expected pixel variance
    amp2 *= shape[0] * shape[1] / amp2.sum()
    return np.sqrt(amp2)


def gaussian_random_field(cfg: SynthConfig, date: dt.date, member: int = 0) -> GridField:
    """Zero-mean Gaussian field (plus ``offset``) with a power-law binned spectrum.

    White noise is filtered in Fourier space by a real amplitude that depends
    only on |k|, which keeps the Hermitian symmetry so the result is real.
    The expected pixel standard deviation is ``base_amplitude``.
    """
    shape = cfg.spec.shape
    noise = standard_normals(cfg.seed, stream_id(TAG_FIELD, date, 0, member), shape[0] * shape[1])
    F = np.fft.fft2(noise.reshape(shape)) * _mode_amplitudes(shape, cfg.spectrum_slope)
    values = cfg.offset + cfg.base_amplitude * np.fft.ifft2(F).real
    return GridField(cfg.spec, values, cfg.variable, cfg.level, valid_time=date, lead_days=0)


def drifting_truth(cfg: SynthConfig, init_date: dt.date, lead: int) -> GridField:
    """Base field of ``init_date`` shifted uniformly by ``drift_per_day * lead``."""
    base = gaussian_random_field(cfg, init_date)
    return base.replace(
        values=base.values + cfg.drift_per_day * lead,
        valid_time=init_date + dt.timedelta(days=lead),
    )


def make_ensemble(truth: GridField, n: int, noise_std: float, seed: int) -> EnsembleField:
    """Members = truth + i.i.d. N(0, noise_std^2) noise per pixel."""
    if n < 1:
        raise ArgumentError("ensemble size must be >= 1")
    size = truth.values.size
    members = []
    for i in range(n):
        z = standard_normals(seed, stream_id(TAG_MEMBER, truth.valid_time, truth.lead_days, i), size)
        members.append(truth.replace(values=truth.values + noise_std * z.reshape(truth.values.shape), member=i))
    return EnsembleField(tuple(members))


def synthetic_forecast(cfg: SynthConfig, init_date: dt.date, lead: int, member: int | None = None) -> GridField:
    """Truth at the valid date plus an error whose std grows like sqrt(lead)."""
    valid = init_date + dt.timedelta(days=lead)
    truth = gaussian_random_field(cfg, valid)
    sd = cfg.ensemble_noise_std * np.sqrt(lead)
    z = standard_normals(cfg.seed, stream_id(TAG_FORECAST, valid, lead, 0 if member is None else member + 1),
                         truth.values.size)
    return truth.replace(values=truth.values + sd * z.reshape(truth.values.shape), lead_days=lead, member=member)


def blur_field(field: GridField, cutoff_k: float) -> GridField:
    """Spectral low-pass: zero every mode whose rounded |k| exceeds ``cutoff_k``."""
    idx, n_bins = wavenumber_bins(*field.values.shape)
    if cutoff_k >= n_bins - 1:
        return field
    if cutoff_k <= 0:
        raise ArgumentError("cutoff_k must be positive")
    x = field.values
    bad = np.isnan(x)
    if bad.any():
        x = np.where(bad, x[~bad].mean(), x)
    F = np.fft.fft2(x)
    F[idx > cutoff_k] = 0.0
    out = np.fft.ifft2(F).real
    out[bad] = np.nan
    return field.replace(values=out)
