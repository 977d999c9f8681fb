"""Command-line entry point.

Exit status: 0 ok, 2 bad arguments or unreadable input, 3 missing coverage,
4 numeric degeneracy. Failures print one JSON line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import sys
from pathlib import Path

from . import fileio
from .errors import ArgumentError, VerifError
from .grid import GridSpec, build_climatology, build_lat_weights
from .harness import EvalPlan, metric_ratio, run_eval
from .scoring import DETERMINISTIC_METRICS
from .spectral import power_spectrum, restrict_and_normalize
from .synth import SynthConfig, gaussian_random_field, make_ensemble, synthetic_forecast


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ArgumentError(f"bad date {text!r}") from None


def _date_list(text: str) -> list[dt.date]:
    """Comma list of dates; ``A..B`` or ``A..B/step`` expands a range."""
    out = []
    for part in text.split(","):
        if ".." in part:
            rng, _, step = part.partition("/")
            a, b = (_date(x) for x in rng.split("..", 1))
            step_days = int(step) if step else 1
            d = a
            while d <= b:
                out.append(d)
                d += dt.timedelta(days=step_days)
        elif part:
            out.append(_date(part))
    return out


def _names(text: str) -> list[str]:
    return [x for x in text.split(",") if x]


def _globals(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = parser.add_argument_group("global options")
    g.add_argument("--q", type=float, default=d(0.9), help="wavenumber quantile for spectral metrics")
    g.add_argument("--spectra-mode", choices=("per-sample", "batch-mean"), default=d("per-sample"))
    g.add_argument("--crps-weighting", choices=("score", "value"), default=d("score"))
    g.add_argument("--threads", type=int, default=d(1))
    g.add_argument("--seed", type=int, default=d(0))


def _out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


# ---------------------------------------------------------------------------
# subcommands


def cmd_weights(a):
    if a.grid:
        spec = fileio.read_field(a.grid).spec
    else:
        spec = GridSpec.regular(a.n_lat, a.n_lon)
    w = build_lat_weights(spec)
    fh = _out(a.out)
    try:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["lat", "weight"])
        for lat, x in zip(spec.lats, w):
            wr.writerow([repr(float(lat)), repr(float(x))])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _years(text):
    if not text:
        return None
    return set(_int_list(text))


def cmd_climatology_build(a):
    src = fileio.DirectorySource(a.truth)
    years = _years(a.years)
    keys = [k for k in src.keys() if k[0] == a.variable and k[2] == 0 and k[3] is None
            and (years is None or k[1].year in years)]
    if not keys:
        raise ArgumentError(f"no lead-0 truth files for {a.variable} under {a.truth}")
    clim = build_climatology((src.get(*k) for k in keys), window=a.window)
    fileio.save_climatology(a.out, clim)


def _load_clims(paths):
    clims = {}
    for p in paths or ():
        c = fileio.load_climatology(p)
        clims[c.name] = c
    return clims


def _format(a):
    if a.format:
        return a.format
    return "json" if str(a.out).endswith(".json") else "csv"


def _eval(a, ensemble: bool):
    truth = fileio.DirectorySource(a.truth)
    forecasts = fileio.DirectorySource(a.forecasts) if a.forecasts else None
    if forecasts is None and not a.reference:
        raise ArgumentError("--forecasts is required unless --reference is given")
    default_metrics = ",".join(DETERMINISTIC_METRICS + (("crps", "crpss", "spread", "ssr") if ensemble else ()))
    plan = EvalPlan(
        variables=_names(a.variables),
        init_dates=_date_list(a.init_dates),
        leads=_int_list(a.leads),
        metrics=_names(a.metrics or default_metrics),
        q=a.q,
        ensemble=(a.members if ensemble else None),
        reference=a.reference,
        spectra_mode=a.spectra_mode,
        crps_weighting=a.crps_weighting,
        ensemble_reduction=getattr(a, "ensemble_reduction", "members"),
    )
    clim_truth = fileio.DirectorySource(a.clim_truth) if getattr(a, "clim_truth", None) else None
    table = run_eval(plan, forecasts, truth, _load_clims(a.clim), clim_truth=clim_truth, threads=a.threads)
    fileio.write_scores(table, _format(a), a.out)
    if table.gaps and not a.allow_gaps:
        first = table.gaps[0]
        raise _Gaps(f"{len(table.gaps)} score rows missing, first: {first.metric} {first.variable} "
                    f"lead={first.lead} init={first.init_date}: {first.message}")


class _Gaps(VerifError):
    code = "missing_coverage"
    exit_status = 3


def cmd_eval_det(a):
    _eval(a, ensemble=False)


def cmd_eval_ens(a):
    if a.members is None:
        raise ArgumentError("--members is required for ensemble evaluation")
    _eval(a, ensemble=True)


def cmd_eval_ratio(a):
    table = metric_ratio(fileio.read_scores(a.ens), fileio.read_scores(a.det))
    fileio.write_scores(table, _format(a), a.out)


def cmd_synth_generate(a):
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SynthConfig(
        spec=GridSpec.regular(a.n_lat, a.n_lon),
        seed=a.seed,
        spectrum_slope=a.slope,
        base_amplitude=a.amplitude,
        ensemble_noise_std=a.noise,
        offset=a.offset,
        variable=a.variable,
        level=a.level,
    )
    start = _date(a.start)
    leads = _int_list(a.forecast_leads) if a.forecast_leads else []
    name = f"{a.variable}-{a.level}" if a.level else a.variable
    tdir, fdir = out / "truth", out / "forecasts"
    tdir.mkdir(exist_ok=True)
    if leads:
        fdir.mkdir(exist_ok=True)
    for i in range(a.days):
        d = start + dt.timedelta(days=i)
        fileio.write_field(tdir / f"{name}_{d}.gf1", gaussian_random_field(cfg, d))
        for t in leads:
            if a.members:
                fc = synthetic_forecast(cfg, d, t)
                ens = make_ensemble(fc, a.members, a.noise, a.seed + 1)
                for m in ens.members:
                    fileio.write_field(fdir / f"{name}_{d}_{t:03d}_m{m.member:03d}.gf1", m)
            else:
                fileio.write_field(fdir / f"{name}_{d}_{t:03d}.gf1", synthetic_forecast(cfg, d, t))


def cmd_spectrum_dump(a):
    field = fileio.read_field(a.field)
    spec = restrict_and_normalize(power_spectrum(field), a.q)
    fh = _out(a.out)
    try:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["k", "power", "in_mask", "normalized"])
        for k, p, m, s in zip(spec.k, spec.power, spec.q_mask, spec.normalized):
            wr.writerow([int(k), repr(float(p)), int(bool(m)), repr(float(s))])
    finally:
        if fh is not sys.stdout:
            fh.close()


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="s2sverif", description=__doc__.splitlines()[0])
    _globals(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def leaf(parent, name, func, help):
        q = parent.add_parser(name, help=help)
        _globals(q, suppress=True)
        q.set_defaults(func=func)
        return q

    w = leaf(sub, "weights", cmd_weights, "dump per-latitude weights")
    w.add_argument("--grid", help="GF1 file whose grid to use")
    w.add_argument("--n-lat", type=int, default=121)
    w.add_argument("--n-lon", type=int, default=240)
    w.add_argument("--out")

    clim = sub.add_parser("climatology", help="climatology tools").add_subparsers(
        dest="clim_command", required=True, parser_class=_Parser)
    cb = leaf(clim, "build", cmd_climatology_build, "build a day-of-year climatology")
    cb.add_argument("--truth", required=True)
    cb.add_argument("--variable", required=True)
    cb.add_argument("--years", help="e.g. 1979-2015")
    cb.add_argument("--window", type=int, default=1)
    cb.add_argument("--out", required=True)

    ev = sub.add_parser("eval", help="score forecasts").add_subparsers(
        dest="eval_command", required=True, parser_class=_Parser)
    for name, func in (("det", cmd_eval_det), ("ens", cmd_eval_ens)):
        e = leaf(ev, name, func, f"{name} evaluation")
        e.add_argument("--forecasts")
        e.add_argument("--truth", required=True)
        e.add_argument("--clim", action="append", help="climatology .npz (repeatable)")
        e.add_argument("--variables", required=True)
        e.add_argument("--init-dates", required=True, help="YYYY-MM-DD list or A..B[/step]")
        e.add_argument("--leads", default="1-44")
        e.add_argument("--metrics")
        e.add_argument("--reference", choices=("climatology", "persistence"))
        e.add_argument("--format", choices=("csv", "json"))
        e.add_argument("--out", required=True)
        e.add_argument("--allow-gaps", action="store_true")
        if name == "ens":
            e.add_argument("--members", type=int)
            e.add_argument("--clim-truth", help="truth archive providing the climatology ensemble for CRPSS")
            e.add_argument("--ensemble-reduction", choices=("members", "mean"), default="members")
    r = leaf(ev, "ratio", cmd_eval_ratio, "ensemble / deterministic ratio table")
    r.add_argument("--ens", required=True)
    r.add_argument("--det", required=True)
    r.add_argument("--format", choices=("csv", "json"))
    r.add_argument("--out", required=True)

    syn = sub.add_parser("synth", help="synthetic data").add_subparsers(
        dest="synth_command", required=True, parser_class=_Parser)
    g = leaf(syn, "generate", cmd_synth_generate, "write synthetic truth/forecast GF1 files")
    g.add_argument("--out", required=True)
    g.add_argument("--start", default="2022-01-01")
    g.add_argument("--days", type=int, default=10)
    g.add_argument("--n-lat", type=int, default=121)
    g.add_argument("--n-lon", type=int, default=240)
    g.add_argument("--variable", default="t")
    g.add_argument("--level", default="850")
    g.add_argument("--slope", type=float, default=3.0)
    g.add_argument("--amplitude", type=float, default=1.0)
    g.add_argument("--offset", type=float, default=0.0)
    g.add_argument("--noise", type=float, default=0.5)
    g.add_argument("--forecast-leads")
    g.add_argument("--members", type=int, default=0)

    sp = sub.add_parser("spectrum", help="spectra").add_subparsers(
        dest="spectrum_command", required=True, parser_class=_Parser)
    d = leaf(sp, "dump", cmd_spectrum_dump, "per-field normalized spectrum as CSV")
    d.add_argument("--field", required=True)
    d.add_argument("--out")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise ArgumentError("--threads must be >= 1")
        args.func(args)
    except VerifError as e:
        print(json.dumps({"error": e.code, "message": str(e)}), file=sys.stderr)
        return e.exit_status
    except OSError as e:
        print(json.dumps({"error": "io_error", "message": str(e)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
