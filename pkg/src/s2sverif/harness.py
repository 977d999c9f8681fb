"""Evaluation sweeps over (variable, lead, init date), aggregation and ratios."""
from __future__ import annotations

import dataclasses
import datetime as dt
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Union

from .baselines import climatology_forecast, persistence_forecast
from .errors import ArgumentError, CoverageError, VerifError
from .grid import Climatology, GridField, weighted_mean
from .probabilistic import EnsembleField, crps, crps_gaussian_map, crpss, spread, spread_skill_ratio
from .scoring import DETERMINISTIC_METRICS, PROBABILISTIC_METRICS, ScoringContext, score_many
from .spectral import batch_mean_spectral_scores

SPECTRA_MODES = ("per-sample", "batch-mean")
ENSEMBLE_REDUCTIONS = ("members", "mean")
SPECTRAL = ("spec_div", "spec_res")


# ---------------------------------------------------------------------------
# sources


class FieldSource:
    """Lookup of fields by variable name, valid date, lead and member."""

    def get(self, name: str, valid: dt.date, lead: int, member: Optional[int] = None) -> GridField:
        raise NotImplementedError

    def member_ids(self, name: str, valid: dt.date, lead: int) -> list[int]:
        return []

    def truth(self, name: str, valid: dt.date) -> GridField:
        return self.get(name, valid, 0)

    def forecast(self, name: str, init: dt.date, lead: int) -> GridField:
        return self.get(name, init + dt.timedelta(days=lead), lead)

    def members(self, name: str, init: dt.date, lead: int) -> EnsembleField:
        valid = init + dt.timedelta(days=lead)
        ids = self.member_ids(name, valid, lead)
        if not ids:
            raise CoverageError(f"no ensemble members for {name} init={init} lead={lead}")
        return EnsembleField(tuple(self.get(name, valid, lead, m) for m in ids))


class MemorySource(FieldSource):
    def __init__(self, fields: Iterable[GridField] = ()):
        self._fields: dict = {}
        self._members: dict = defaultdict(set)
        for f in fields:
            self.add(f)

    def add(self, f: GridField) -> None:
        self._fields[(f.name, f.valid_time, f.lead_days, f.member)] = f
        if f.member is not None:
            self._members[(f.name, f.valid_time, f.lead_days)].add(f.member)

    def get(self, name, valid, lead, member=None):
        try:
            return self._fields[(name, valid, lead, member)]
        except KeyError:
            what = "" if member is None else f" member={member}"
            raise CoverageError(f"missing {name} valid={valid} lead={lead}{what}") from None

    def member_ids(self, name, valid, lead):
        return sorted(self._members.get((name, valid, lead), ()))

    def fields(self) -> list[GridField]:
        return list(self._fields.values())


class PersistenceSource(FieldSource):
    """Forecasts that repeat the truth at the init date."""

    def __init__(self, truth: FieldSource):
        self._truth = truth

    def get(self, name, valid, lead, member=None):
        if member is not None:
            raise CoverageError("persistence has no ensemble members")
        init = valid - dt.timedelta(days=lead)
        return persistence_forecast(self._truth.truth(name, init), [lead]).fields[0]


class ClimatologySource(FieldSource):
    """Forecasts equal to the climatological mean of the valid day."""

    def __init__(self, clims: Mapping[str, Climatology]):
        self._clims = dict(clims)

    def get(self, name, valid, lead, member=None):
        if member is not None or name not in self._clims:
            raise CoverageError(f"no climatology forecast for {name}")
        init = valid - dt.timedelta(days=lead)
        return climatology_forecast(self._clims[name], init, [lead]).fields[0]


def reference_source(kind: str, truth: FieldSource, clims: Mapping[str, Climatology]) -> FieldSource:
    if kind == "persistence":
        return PersistenceSource(truth)
    if kind == "climatology":
        return ClimatologySource(clims)
    raise ArgumentError(f"unknown reference {kind!r}")


# ---------------------------------------------------------------------------
# plan and table


@dataclasses.dataclass(frozen=True)
class EvalPlan:
    variables: Sequence[str]
    init_dates: Sequence[dt.date]
    leads: Sequence[int] = tuple(range(1, 45))
    metrics: Sequence[str] = DETERMINISTIC_METRICS
    q: float = 0.9
    ensemble: Optional[int] = None
    reference: Optional[str] = None
    spectra_mode: str = "per-sample"
    crps_weighting: str = "score"
    ensemble_reduction: str = "members"

    def __post_init__(self):
        if not self.metrics:
            raise ArgumentError("plan needs at least one metric")
        if not self.variables or not self.init_dates or not self.leads:
            raise ArgumentError("plan needs variables, init dates and leads")
        if any(not 1 <= t <= 60 for t in self.leads):
            raise ArgumentError("leads must lie in [1, 60]")
        known = DETERMINISTIC_METRICS + (PROBABILISTIC_METRICS if self.ensemble is not None else ())
        bad = [m for m in self.metrics if m not in known]
        if bad:
            raise ArgumentError(f"unsupported metrics for this plan: {bad}")
        if self.spectra_mode not in SPECTRA_MODES:
            raise ArgumentError(f"spectra_mode must be one of {SPECTRA_MODES}")
        if self.ensemble_reduction not in ENSEMBLE_REDUCTIONS:
            raise ArgumentError(f"ensemble_reduction must be one of {ENSEMBLE_REDUCTIONS}")
        if self.ensemble is not None and self.ensemble < 1:
            raise ArgumentError("ensemble size must be >= 1")
        if self.reference not in (None, "climatology", "persistence"):
            raise ArgumentError("reference must be climatology or persistence")
        if not 0.0 <= self.q <= 1.0:
            raise ArgumentError("q must lie in [0, 1]")


@dataclasses.dataclass(frozen=True)
class ScoreRow:
    metric: str
    variable: str
    lead: int
    init_date: Optional[dt.date]
    value: float
    n_members: int = 1
    status: str = "ok"
    message: str = ""

    @property
    def sort_key(self):
        return (self.metric, self.variable, self.lead, self.init_date or dt.date.min)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclasses.dataclass(frozen=True)
class Aggregate:
    metric: str
    variable: str
    lead: int
    value: float
    n_dates: int


def aggregate_rows(rows: Iterable[ScoreRow]) -> list[Aggregate]:
    """Unweighted mean over init dates of the valid rows of each key."""
    groups: dict = defaultdict(list)
    for r in rows:
        vals = groups[(r.metric, r.variable, r.lead)]
        if r.ok and math.isfinite(r.value):
            vals.append(r.value)
    out = []
    for key in sorted(groups):
        vals = groups[key]
        mean = math.fsum(vals) / len(vals) if vals else math.nan
        out.append(Aggregate(*key, mean, len(vals)))
    return out


class ScoreTable:
    def __init__(self, rows: Iterable[ScoreRow] = (), meta: Optional[dict] = None):
        self.rows = sorted(rows, key=lambda r: r.sort_key)
        self.meta = dict(meta or {})
        seen = set()
        for r in self.rows:
            k = (r.metric, r.variable, r.lead, r.init_date)
            if k in seen:
                raise ArgumentError(f"duplicate score row {k}")
            seen.add(k)

    def __len__(self):
        return len(self.rows)

    @property
    def aggregates(self) -> list[Aggregate]:
        return aggregate_rows(self.rows)

    @property
    def gaps(self) -> list[ScoreRow]:
        return [r for r in self.rows if not r.ok]

    def aggregate_map(self) -> dict:
        return {(a.metric, a.variable, a.lead): a for a in self.aggregates}

    def series(self, metric: str, variable: str) -> dict[int, float]:
        return {a.lead: a.value for a in self.aggregates if a.metric == metric and a.variable == variable}


# ---------------------------------------------------------------------------
# evaluation


def _clim_for(clims, name):
    if clims is None:
        return None
    if isinstance(clims, Climatology):
        return clims if clims.name == name else None
    return clims.get(name)


def _climatology_crps(clim, clim_truth, truth_field, ctx, plan):
    """CRPS of the climatological reference for one target field.

    With an archive, the reference ensemble is the truth on the same calendar
    day in each climatology year other than the target year; otherwise it is
    the Gaussian N(mean, std) of the climatology.
    """
    valid = truth_field.valid_time
    if clim_truth is not None:
        members = []
        years = clim.source_years if clim is not None else ()
        for y in years:
            if y == valid.year:
                continue
            try:
                d = valid.replace(year=y)
            except ValueError:
                continue
            f = clim_truth.truth(truth_field.name, d)
            members.append(f.replace(valid_time=valid, lead_days=truth_field.lead_days, member=len(members)))
        if len(members) < 1:
            raise CoverageError(f"no climatology members for {truth_field.name} on {valid}")
        return crps(EnsembleField(tuple(members)), truth_field, ctx.weights, plan.crps_weighting)
    if clim is None:
        raise CoverageError(f"CRPSS needs a climatology for {truth_field.name}")
    m = crps_gaussian_map(clim.mean_for(valid), clim.std_for(valid), truth_field)
    return weighted_mean(m, ctx.weights)


def _safe_scores(metrics, pred, truth, ctx) -> dict:
    """score_many, but a failure only flags the metric that failed."""
    out = {}
    groups = [[m for m in metrics if m in SPECTRAL]] + [[m] for m in metrics if m not in SPECTRAL]
    for group in groups:
        if not group:
            continue
        try:
            for m, v in score_many(group, pred, truth, ctx).items():
                out[m] = (v, "ok", "")
        except VerifError as e:
            for m in group:
                out[m] = (math.nan, e.code, str(e))
    return out


def _evaluate_item(item, plan, forecasts, truth, clims, clim_truth, ctx_cache):
    name, init, lead = item
    metrics = [m for m in plan.metrics if not (plan.spectra_mode == "batch-mean" and m in SPECTRAL)]
    det_metrics = [m for m in metrics if m in DETERMINISTIC_METRICS]
    valid = init + dt.timedelta(days=lead)
    results: dict[str, tuple] = {}
    try:
        tr = truth.truth(name, valid).replace(lead_days=lead)
        ctx = ctx_cache(name, tr)
        if plan.ensemble is None:
            pred = forecasts.forecast(name, init, lead)
            return {m: (v, 1, st, msg) for m, (v, st, msg) in _safe_scores(det_metrics, pred, tr, ctx).items()}
        ens = forecasts.members(name, init, lead)
        if ens.n < plan.ensemble:
            raise CoverageError(f"{name} init={init} lead={lead}: {ens.n} members, plan needs {plan.ensemble}")
        ens = EnsembleField(ens.members[: plan.ensemble])
    except VerifError as e:
        return {m: (math.nan, plan.ensemble or 1, e.code, str(e)) for m in metrics}

    n = ens.n
    if plan.ensemble_reduction == "mean":
        scored = _safe_scores(det_metrics, ens.mean_field(), tr, ctx)
        results.update({m: (v, n, st, msg) for m, (v, st, msg) in scored.items()})
    elif det_metrics:
        per_member = [_safe_scores(det_metrics, mb, tr, ctx) for mb in ens.members]
        for m in det_metrics:
            bad = next((s[m] for s in per_member if s[m][1] != "ok"), None)
            if bad is not None:
                results[m] = (math.nan, n, bad[1], bad[2])
            else:
                results[m] = (math.fsum(s[m][0] for s in per_member) / n, n, "ok", "")
    for m in metrics:
        try:
            if m == "crps":
                v = crps(ens, tr, ctx.weights, plan.crps_weighting)
            elif m == "crpss":
                v = crpss(
                    crps(ens, tr, ctx.weights, plan.crps_weighting),
                    _climatology_crps(_clim_for(clims, name), clim_truth, tr, ctx, plan),
                )
            elif m == "spread":
                v = spread(ens, ctx.weights, plan.crps_weighting)
            elif m == "ssr":
                v = spread_skill_ratio(ens, tr, ctx)
            else:
                continue
            results[m] = (v, n, "ok", "")
        except VerifError as e:
            results[m] = (math.nan, n, e.code, str(e))
    return results


def _batch_mean_rows(plan, forecasts, truth, name, lead):
    preds, truths = [], []
    try:
        for init in plan.init_dates:
            valid = init + dt.timedelta(days=lead)
            truths.append(truth.truth(name, valid))
            if plan.ensemble is None:
                preds.append(forecasts.forecast(name, init, lead))
            else:
                preds.append(forecasts.members(name, init, lead).mean_field())
        sd, sr = batch_mean_spectral_scores(preds, truths, plan.q)
        vals = {"spec_div": (sd, "ok", ""), "spec_res": (sr, "ok", "")}
    except VerifError as e:
        vals = {m: (math.nan, e.code, str(e)) for m in SPECTRAL}
    return [
        ScoreRow(m, name, lead, None, vals[m][0], plan.ensemble or 1, vals[m][1], vals[m][2])
        for m in SPECTRAL
        if m in plan.metrics
    ]


def run_eval(
    plan: EvalPlan,
    forecasts: Optional[FieldSource],
    truth: FieldSource,
    clim: Union[Climatology, Mapping[str, Climatology], None] = None,
    *,
    clim_truth: Optional[FieldSource] = None,
    threads: int = 1,
) -> ScoreTable:
    """Score every (variable, init date, lead) of the plan.

    Missing inputs and degenerate scores become flagged rows (NaN value,
    non-"ok" status) and the sweep continues. Rows are merged in a fixed
    order so the table does not depend on ``threads``.
    """
    clims = clim
    if plan.reference is not None:
        cm = {clim.name: clim} if isinstance(clim, Climatology) else dict(clim or {})
        forecasts = reference_source(plan.reference, truth, cm)
    if forecasts is None:
        raise ArgumentError("no forecast source")

    contexts: dict = {}

    def ctx_cache(name, field):
        key = (name, field.spec)
        if key not in contexts:
            contexts[key] = ScoringContext.for_grid(
                field.spec, q=plan.q, clim=_clim_for(clims, name), crps_weighting=plan.crps_weighting
            )
        return contexts[key]

    items = [(v, d, t) for v in plan.variables for d in sorted(plan.init_dates) for t in plan.leads]
    # Build contexts up front so worker threads only read them.
    for v in plan.variables:
        for d in sorted(plan.init_dates):
            try:
                ctx_cache(v, truth.truth(v, d + dt.timedelta(days=plan.leads[0])))
                break
            except VerifError:
                continue

    def work(item):
        return _evaluate_item(item, plan, forecasts, truth, clims, clim_truth, ctx_cache)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(it) for it in items]

    rows = []
    for (name, init, lead), res in zip(items, results):
        for m, (v, n, status, msg) in res.items():
            rows.append(ScoreRow(m, name, lead, init, float(v), n, status, msg))
    if plan.spectra_mode == "batch-mean" and any(m in SPECTRAL for m in plan.metrics):
        for name in plan.variables:
            for lead in plan.leads:
                rows.extend(_batch_mean_rows(plan, forecasts, truth, name, lead))

    table = ScoreTable(rows)
    table.meta["n_gaps"] = len(table.gaps)
    if "crpss" in plan.metrics:
        table.meta["skill_horizon"] = {
            v: skill_horizon(table.series("crpss", v)) for v in plan.variables if table.series("crpss", v)
        }
    return table


def metric_ratio(ens_table: ScoreTable, det_table: ScoreTable) -> ScoreTable:
    """Per (metric, variable, lead) ratio of aggregated ensemble to deterministic scores."""
    ea, da = ens_table.aggregate_map(), det_table.aggregate_map()
    if set(ea) != set(da):
        missing = sorted(set(ea) ^ set(da))
        raise ArgumentError(f"score tables have different keys, e.g. {missing[:3]}")
    n_members = {}
    for r in ens_table.rows:
        n_members.setdefault((r.metric, r.variable, r.lead), r.n_members)
    rows = []
    for key in sorted(ea):
        e, d = ea[key].value, da[key].value
        status, msg = "ok", ""
        if d == 0 or not math.isfinite(d) or not math.isfinite(e):
            status = "zero_denominator" if d == 0 else "undefined"
            msg = f"ensemble={e!r} deterministic={d!r}"
            value = math.nan
        else:
            value = e / d
        rows.append(ScoreRow(key[0], key[1], key[2], None, value, n_members.get(key, 1), status, msg))
    return ScoreTable(rows, {"kind": "ratio"})


def skill_horizon(crpss_by_lead: Union[Mapping[int, float], Sequence[tuple[int, float]]]) -> Optional[int]:
    """First lead from which CRPSS stays <= 0 for every later lead; None if it never collapses."""
    items = sorted(crpss_by_lead.items() if isinstance(crpss_by_lead, Mapping) else crpss_by_lead)
    if not items:
        raise ArgumentError("empty CRPSS series")
    leads = [t for t, _ in items]
    if leads != list(range(leads[0], leads[0] + len(leads))):
        raise ArgumentError("CRPSS series must cover contiguous leads")
    horizon = None
    for t, v in reversed(items):
        if v <= 0:
            horizon = t
        else:
            break
    return horizon
