import datetime as dt

import numpy as np
import pytest

from s2sverif.baselines import climatology_forecast, persistence_forecast
from s2sverif.deterministic import rmse
from s2sverif.errors import ArgumentError, CoverageError
from s2sverif.grid import Climatology, GridSpec, build_lat_weights

from conftest import make_field


def test_persistence_repeats_init(small_spec, rng):
    init = make_field(small_spec, rng.normal(size=small_spec.shape))
    fc = persistence_forecast(init, [1, 44])
    assert fc.leads == [1, 44]
    for f in fc.fields:
        assert np.array_equal(f.values, init.values)
    assert fc.at(44).valid_time == init.valid_time + dt.timedelta(days=44)


def test_persistence_lead_zero_bit_exact(small_spec, rng):
    init = make_field(small_spec, rng.normal(size=small_spec.shape))
    f0 = persistence_forecast(init, [0]).fields[0]
    assert f0.values.tobytes() == init.values.tobytes()
    assert f0.valid_time == init.valid_time


def test_persistence_errors(small_spec):
    init = make_field(small_spec, np.zeros(small_spec.shape))
    with pytest.raises(ArgumentError):
        persistence_forecast(init, [])
    with pytest.raises(ArgumentError):
        persistence_forecast(init, [3, 2])
    with pytest.raises(ArgumentError):
        persistence_forecast(init.replace(lead_days=1), [1])


def test_persistence_rmse_zero_when_truth_static(small_spec, rng):
    init = make_field(small_spec, rng.normal(size=small_spec.shape))
    fc = persistence_forecast(init, [1])
    assert rmse(fc.fields[0], init, build_lat_weights(small_spec)) == 0.0


def test_persistence_rmse_on_drift(small_spec, rng):
    c = 0.3
    init = make_field(small_spec, rng.normal(size=small_spec.shape))
    uniform = np.ones(small_spec.n_lat)
    fc = persistence_forecast(init, range(1, 6))
    for f in fc.fields:
        truth = init.values + c * f.lead_days
        assert rmse(f, truth, uniform) == pytest.approx(abs(c) * f.lead_days, rel=1e-12)


def _seasonal_clim(spec):
    days = np.arange(1, 367)
    cycle = 10.0 * np.sin(2 * np.pi * (days - 1) / 365.0)
    mean = np.broadcast_to(cycle[:, None, None], (366,) + spec.shape).copy()
    return Climatology(spec, mean, np.ones_like(mean), "t", "850", (2000, 2001))


def test_climatology_forecast_follows_cycle(small_spec):
    clim = _seasonal_clim(small_spec)
    init = dt.date(2022, 3, 10)
    fc = climatology_forecast(clim, init, [1, 10, 44])
    for f in fc.fields:
        valid = init + dt.timedelta(days=f.lead_days)
        doy = valid.timetuple().tm_yday  # 2022 is not a leap year
        assert np.allclose(f.values, 10.0 * np.sin(2 * np.pi * (doy - 1) / 365.0))


def test_climatology_forecast_constant_and_identity(small_spec):
    mean = np.full((366,) + small_spec.shape, 3.0)
    clim = Climatology(small_spec, mean, np.zeros_like(mean), "t", "850")
    fc = climatology_forecast(clim, dt.date(2022, 1, 1), range(1, 5))
    w = build_lat_weights(small_spec)
    for f in fc.fields:
        assert np.all(f.values == 3.0)
        assert rmse(f, make_field(small_spec, mean[0], f.valid_time), w) == 0.0


def test_climatology_forecast_independent_of_year(small_spec):
    clim = _seasonal_clim(small_spec)
    a = climatology_forecast(clim, dt.date(2021, 5, 1), [1, 30])
    b = climatology_forecast(clim, dt.date(2022, 5, 1), [1, 30])
    for fa, fb in zip(a.fields, b.fields):
        assert np.array_equal(fa.values, fb.values)


def test_climatology_forecast_missing_day():
    spec = GridSpec.regular(5, 8)
    mean = np.full((366,) + spec.shape, 1.0)
    mean[10] = np.nan
    clim = Climatology(spec, mean, np.zeros_like(mean))
    with pytest.raises(CoverageError):
        climatology_forecast(clim, dt.date(2022, 1, 1), [10])
