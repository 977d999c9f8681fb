"""Desk-scale synthetic experiments shared by scripts/ and the acceptance suite."""
from __future__ import annotations

import datetime as dt
from collections.abc import Sequence

import numpy as np

from .deterministic import rmse
from .grid import GridSpec, build_lat_weights
from .probabilistic import EnsembleField, crps, crpss, ensemble_metric, spread
from .scoring import ScoringContext
from .spectral import power_spectrum, restrict_and_normalize, spec_div
from .synth import SynthConfig, blur_field, gaussian_random_field, make_ensemble

EPOCH = dt.date(2022, 1, 1)


def fitted_slope(slope: float, n_seeds: int = 100, spec: GridSpec | None = None) -> float:
    """Least-squares log-log slope of the seed-averaged binned spectrum over 1 <= k <= k_max/2."""
    spec = spec or GridSpec.regular()
    acc = None
    for s in range(n_seeds):
        f = gaussian_random_field(SynthConfig(spec=spec, seed=s, spectrum_slope=slope), EPOCH)
        p = power_spectrum(f).power
        acc = p if acc is None else acc + p
    k = np.arange(acc.size)
    band = (k >= 1) & (k <= (acc.size - 1) / 2)
    return float(np.polyfit(np.log(k[band]), np.log(acc[band] / n_seeds), 1)[0])


def calibration_experiment(n_members: int = 50, side: int = 100, sigma: float = 1.0,
                           signal: float = 2.0, seed: int = 7) -> dict:
    """Calibrated Gaussian ensemble vs truth drawn from the same per-pixel law.

    The per-pixel mean is a smooth random field with std ``signal``; members
    and truth are mean + N(0, sigma^2). The climatology reference ensemble
    does not know the mean and is drawn from N(0, signal^2 + sigma^2).
    """
    spec = GridSpec(np.linspace(45.0, -45.0, side), np.arange(side) * (360.0 / side))
    w = build_lat_weights(spec)
    cfg = SynthConfig(spec=spec, seed=seed, spectrum_slope=3.0, base_amplitude=signal)
    mu = gaussian_random_field(cfg, EPOCH)
    ens = make_ensemble(mu, n_members, sigma, seed + 1)
    truth = make_ensemble(mu, 1, sigma, seed + 2).members[0]
    zero = mu.replace(values=np.zeros(spec.shape))
    clim = make_ensemble(zero, n_members, float(np.hypot(signal, sigma)), seed + 3)
    ctx = ScoringContext(w)
    crps_fc = crps(ens, truth, w)
    crps_clim = crps(clim, truth, w)
    return {
        "spread": spread(ens, w),
        "ens_rmse": ensemble_metric("rmse", ens, truth, ctx),
        "crps_forecast": crps_fc,
        "crps_climatology": crps_clim,
        "crpss": crpss(crps_fc, crps_clim),
        "weights": w,
        "shape": spec.shape,
    }


def calibration_oracle(n_members: int = 50, shape=(100, 100), sigma: float = 1.0,
                       weights: np.ndarray | None = None, seed: int = 12345) -> dict:
    """Independent Monte-Carlo estimate of spread and member-mean RMSE."""
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, sigma, size=(n_members,) + tuple(shape))
    y = rng.normal(0.0, sigma, size=tuple(shape))
    w = np.ones(shape[0]) if weights is None else np.asarray(weights)
    ww = w[:, None] / w.mean()
    sd = x.std(axis=0, ddof=1)
    spread_mc = float((ww * sd).mean())
    rmse_mc = float(np.mean([np.sqrt((ww * (xi - y) ** 2).mean()) for xi in x]))
    return {"spread": spread_mc, "ens_rmse": rmse_mc}


def ratio_experiment(sizes: Sequence[int] = (3, 15, 50), leads: Sequence[int] = (1, 8, 15, 22, 29, 36, 44),
                     n_inits: int = 3, cutoff_k: float = 40, error_per_day: float = 0.15,
                     seed: int = 11) -> dict[int, dict[int, float]]:
    """RMSE(ensemble mean) / RMSE(deterministic) per ensemble size and lead.

    The deterministic forecast and every member are the blurred truth plus
    independent errors whose std grows like sqrt(lead).
    """
    cfg = SynthConfig(seed=seed, spectrum_slope=2.0)
    w = build_lat_weights(cfg.spec)
    out: dict[int, dict[int, float]] = {n: {} for n in sizes}
    for lead in leads:
        sd = error_per_day * np.sqrt(lead)
        det_sum = {n: 0.0 for n in sizes}
        ens_sum = {n: 0.0 for n in sizes}
        for i in range(n_inits):
            init = EPOCH + dt.timedelta(days=7 * i)
            truth = gaussian_random_field(cfg, init + dt.timedelta(days=lead)).replace(lead_days=lead)
            base = blur_field(truth, cutoff_k)
            det = make_ensemble(base, 1, sd, seed + 1000).members[0]
            big = make_ensemble(base, max(sizes), sd, seed + 2000)
            for n in sizes:
                ens = EnsembleField(big.members[:n])
                det_sum[n] += rmse(det, truth, w)
                ens_sum[n] += rmse(ens.mean_field(), truth, w)
        for n in sizes:
            out[n][lead] = ens_sum[n] / det_sum[n]
    return out


def blur_sweep(cutoffs: Sequence[float], q: float = 0.9, slope: float = 2.0, seed: int = 3) -> list[float]:
    """SpecDiv(blur(F, k_c), F) for each cutoff on one power-law field."""
    f = gaussian_random_field(SynthConfig(seed=seed, spectrum_slope=slope), EPOCH)
    target = restrict_and_normalize(power_spectrum(f), q)
    out = []
    for kc in cutoffs:
        pred = restrict_and_normalize(power_spectrum(blur_field(f, kc)), q)
        out.append(spec_div(pred, target))
    return out
