import datetime as dt
import math

import numpy as np
import pytest

from s2sverif.errors import ArgumentError
from s2sverif.grid import Climatology, GridSpec
from s2sverif.harness import (
    EvalPlan,
    MemorySource,
    ScoreRow,
    ScoreTable,
    aggregate_rows,
    metric_ratio,
    run_eval,
    skill_horizon,
)
from s2sverif.synth import SynthConfig, gaussian_random_field, make_ensemble, synthetic_forecast

SPEC = GridSpec.regular(61, 120)
D0 = dt.date(2022, 1, 3)
INITS = [D0, D0 + dt.timedelta(days=7)]
LEADS = [1, 2, 3]
NAME = "t-850"


def _cfg(**kw):
    return SynthConfig(spec=SPEC, seed=21, variable="t", level="850", **kw)


def _truth(cfg, days=20):
    return MemorySource(gaussian_random_field(cfg, D0 + dt.timedelta(days=i)) for i in range(days))


def _zero_clim():
    z = np.zeros((366,) + SPEC.shape)
    return Climatology(SPEC, z, z + 1.0, "t", "850", (2020, 2021))


def _identity_forecasts(truth):
    src = MemorySource()
    for init in INITS:
        for lead in LEADS:
            f = truth.truth(NAME, init + dt.timedelta(days=lead))
            src.add(f.replace(lead_days=lead))
    return src


def test_identity_run():
    truth = _truth(_cfg())
    plan = EvalPlan([NAME], INITS, LEADS)
    table = run_eval(plan, _identity_forecasts(truth), truth, {NAME: _zero_clim()})
    assert len(table) == 6 * len(INITS) * len(LEADS)
    assert not table.gaps
    for r in table.rows:
        expected = 1.0 if r.metric in ("acc", "ms_ssim") else 0.0
        assert abs(r.value - expected) < 1e-9, r


def test_persistence_on_drifting_truth_increases():
    cfg = _cfg(drift_per_day=0.4)
    base = gaussian_random_field(cfg, D0)
    # drifting truth: the same pattern shifted by c per elapsed day
    truth = MemorySource(
        base.replace(values=base.values + 0.4 * i, valid_time=D0 + dt.timedelta(days=i)) for i in range(12)
    )
    plan = EvalPlan([NAME], [D0], list(range(1, 11)), metrics=["rmse"], reference="persistence")
    series = run_eval(plan, None, truth).series("rmse", NAME)
    vals = [series[t] for t in range(1, 11)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    np.testing.assert_allclose(vals, [0.4 * t for t in range(1, 11)], rtol=1e-12)


def test_climatology_reference_scored_on_climatology_truth():
    cfg = _cfg()
    pattern = gaussian_random_field(cfg, D0).values
    mean = np.broadcast_to(pattern, (366,) + SPEC.shape).copy()
    clim = Climatology(SPEC, mean, np.ones_like(mean), "t", "850", (2020, 2021))
    truth = MemorySource(gaussian_random_field(cfg, D0 + dt.timedelta(days=i)).replace(values=pattern)
                         for i in range(12))
    plan = EvalPlan([NAME], INITS[:1], LEADS, metrics=["rmse", "bias"], reference="climatology")
    table = run_eval(plan, None, truth, {NAME: clim})
    assert all(r.value == 0.0 for r in table.rows)


def test_aggregates_are_exact_means():
    cfg = _cfg(ensemble_noise_std=0.3)
    truth = _truth(cfg)
    fc = MemorySource(synthetic_forecast(cfg, i, t) for i in INITS for t in LEADS)
    table = run_eval(EvalPlan([NAME], INITS, LEADS, metrics=["rmse", "bias"]), fc, truth)
    for a in table.aggregates:
        vals = [r.value for r in table.rows if (r.metric, r.variable, r.lead) == (a.metric, a.variable, a.lead)]
        assert abs(a.value - sum(vals) / len(vals)) < 1e-12
        assert a.n_dates == len(INITS)


def test_thread_count_does_not_change_table():
    cfg = _cfg(ensemble_noise_std=0.3)
    truth = _truth(cfg)
    fc = MemorySource(synthetic_forecast(cfg, i, t) for i in INITS for t in LEADS)
    plan = EvalPlan([NAME], INITS, LEADS, metrics=["rmse", "bias", "spec_div", "spec_res"])
    one = run_eval(plan, fc, truth, threads=1)
    many = run_eval(plan, fc, truth, threads=8)
    assert one.rows == many.rows


def test_gaps_are_flagged_and_run_continues():
    cfg = _cfg(ensemble_noise_std=0.3)
    truth = _truth(cfg)
    fc = MemorySource(synthetic_forecast(cfg, i, t) for i in INITS for t in LEADS if (i, t) != (INITS[1], 2))
    table = run_eval(EvalPlan([NAME], INITS, LEADS, metrics=["rmse"]), fc, truth)
    assert len(table) == len(INITS) * len(LEADS)
    assert [(g.init_date, g.lead, g.status) for g in table.gaps] == [(INITS[1], 2, "missing_coverage")]
    assert math.isnan(table.gaps[0].value)
    assert table.meta["n_gaps"] == 1
    agg = table.aggregate_map()[("rmse", NAME, 2)]
    assert agg.n_dates == 1


def test_failing_metric_only_flags_itself():
    spec = GridSpec.regular(11, 20)  # too small for five MS-SSIM scales
    cfg = SynthConfig(spec=spec, seed=1, variable="t", level="850")
    truth = MemorySource(gaussian_random_field(cfg, D0 + dt.timedelta(days=i)) for i in range(4))
    fc = MemorySource([synthetic_forecast(cfg, D0, 1)])
    table = run_eval(EvalPlan([NAME], [D0], [1], metrics=["rmse", "ms_ssim"]), fc, truth)
    status = {r.metric: r.status for r in table.rows}
    assert status == {"rmse": "ok", "ms_ssim": "bad_argument"}


def _ensemble_world(n_members=4):
    cfg = _cfg(ensemble_noise_std=0.3)
    truth = _truth(cfg)
    fc = MemorySource()
    for i in INITS:
        for t in LEADS:
            for m in make_ensemble(synthetic_forecast(cfg, i, t), n_members, 0.3, 5).members:
                fc.add(m)
    return truth, fc


def test_ensemble_run_probabilistic_metrics():
    truth, fc = _ensemble_world()
    clim = Climatology(SPEC, np.zeros((366,) + SPEC.shape), np.full((366,) + SPEC.shape, 5.0), "t", "850")
    plan = EvalPlan([NAME], INITS, LEADS, metrics=["rmse", "crps", "crpss", "spread", "ssr"], ensemble=4)
    table = run_eval(plan, fc, truth, {NAME: clim})
    assert not table.gaps
    assert all(r.n_members == 4 for r in table.rows)
    assert all(r.value > 0 for r in table.rows if r.metric in ("crps", "spread", "crpss"))
    assert table.meta["skill_horizon"] == {NAME: None}


def test_ensemble_reduction_mean_not_worse_than_members():
    truth, fc = _ensemble_world()
    kw = dict(metrics=["rmse"], ensemble=4)
    members = run_eval(EvalPlan([NAME], INITS, LEADS, **kw), fc, truth).series("rmse", NAME)
    mean = run_eval(EvalPlan([NAME], INITS, LEADS, ensemble_reduction="mean", **kw), fc, truth).series("rmse", NAME)
    assert all(mean[t] <= members[t] for t in LEADS)


def test_too_few_members_is_a_gap():
    truth, fc = _ensemble_world(2)
    table = run_eval(EvalPlan([NAME], INITS[:1], [1], metrics=["crps"], ensemble=3), fc, truth)
    assert table.gaps and table.gaps[0].status == "missing_coverage"


def test_batch_mean_mode_rows():
    truth = _truth(_cfg())
    plan = EvalPlan([NAME], INITS, LEADS, metrics=["rmse", "spec_div"], spectra_mode="batch-mean")
    table = run_eval(plan, _identity_forecasts(truth), truth)
    spec_rows = [r for r in table.rows if r.metric == "spec_div"]
    assert len(spec_rows) == len(LEADS)
    assert all(r.init_date is None and r.value == 0.0 for r in spec_rows)


def test_plan_validation():
    with pytest.raises(ArgumentError):
        EvalPlan([NAME], INITS, [0])
    with pytest.raises(ArgumentError):
        EvalPlan([NAME], INITS, LEADS, metrics=[])
    with pytest.raises(ArgumentError):
        EvalPlan([NAME], INITS, LEADS, metrics=["crps"])
    with pytest.raises(ArgumentError):
        EvalPlan([NAME], INITS, [61])


def _table(values, metric="rmse"):
    return ScoreTable(ScoreRow(metric, NAME, t, D0, v) for t, v in values.items())


def test_metric_ratio_cases():
    ens = _table({1: 1.0, 2: 3.0})
    assert [r.value for r in metric_ratio(ens, ens).rows] == [1.0, 1.0]
    det = _table({1: 2.0, 2: 6.0})
    assert [r.value for r in metric_ratio(ens, det).rows] == [0.5, 0.5]
    zero = metric_ratio(ens, _table({1: 0.0, 2: 6.0}))
    assert zero.rows[0].status == "zero_denominator" and math.isnan(zero.rows[0].value)
    with pytest.raises(ArgumentError):
        metric_ratio(ens, _table({1: 1.0}))


def test_duplicate_rows_rejected():
    with pytest.raises(ArgumentError):
        ScoreTable([ScoreRow("rmse", NAME, 1, D0, 1.0), ScoreRow("rmse", NAME, 1, D0, 2.0)])


def test_aggregate_skips_flagged_rows():
    rows = [ScoreRow("rmse", NAME, 1, D0, 1.0), ScoreRow("rmse", NAME, 1, D0 + dt.timedelta(1), math.nan, 1, "x")]
    (agg,) = aggregate_rows(rows)
    assert agg.value == 1.0 and agg.n_dates == 1


def test_skill_horizon_cases():
    assert skill_horizon({t: 0.5 for t in range(1, 45)}) is None
    assert skill_horizon({t: (0.3 if t <= 15 else -0.1) for t in range(1, 45)}) == 16
    osc = {t: 0.4 for t in range(1, 45)}
    osc.update({10: -0.05, 11: -0.01})
    osc.update({t: -0.2 for t in range(18, 45)})
    assert skill_horizon(osc) == 18
    assert skill_horizon([(1, 0.0), (2, -1.0)]) == 1
    with pytest.raises(ArgumentError):
        skill_horizon({})
    with pytest.raises(ArgumentError):
        skill_horizon({1: 0.1, 3: -0.1})
