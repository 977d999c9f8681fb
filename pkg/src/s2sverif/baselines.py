"""Reference forecasters: persistence and climatology."""
from __future__ import annotations

import dataclasses
import datetime as dt
from collections.abc import Sequence

import numpy as np

from .errors import ArgumentError, CoverageError
from .grid import Climatology, GridField, day_slot, slot_label


@dataclasses.dataclass(frozen=True)
class ReferenceForecast:
    kind: str
    fields: tuple[GridField, ...]

    def __post_init__(self):
        if self.kind not in ("climatology", "persistence"):
            raise ArgumentError(f"unknown reference kind {self.kind!r}")
        leads = [f.lead_days for f in self.fields]
        if any(b <= a for a, b in zip(leads, leads[1:])):
            raise ArgumentError("lead days must be strictly increasing")

    @property
    def leads(self) -> list[int]:
        return [f.lead_days for f in self.fields]

    def at(self, lead: int) -> GridField:
        for f in self.fields:
            if f.lead_days == lead:
                return f
        raise CoverageError(f"no {self.kind} forecast at lead {lead}")


def _check_leads(leads: Sequence[int]) -> list[int]:
    leads = [int(x) for x in leads]
    if not leads:
        raise ArgumentError("leads must be non-empty")
    if any(x < 0 for x in leads):
        raise ArgumentError("leads must be >= 0")
    return leads


def persistence_forecast(init: GridField, leads: Sequence[int]) -> ReferenceForecast:
    """Repeat the initial state at every lead."""
    if init.lead_days != 0:
        raise ArgumentError("persistence needs an analysis field (lead_days == 0)")
    fields = tuple(
        init.replace(valid_time=init.valid_time + dt.timedelta(days=t), lead_days=t)
        for t in _check_leads(leads)
    )
    return ReferenceForecast("persistence", fields)


def climatology_forecast(clim: Climatology, init_date: dt.date, leads: Sequence[int]) -> ReferenceForecast:
    """Climatological mean of the target calendar day at every lead."""
    fields = []
    for t in _check_leads(leads):
        valid = init_date + dt.timedelta(days=t)
        values = clim.mean_for(valid)
        if np.isnan(values).all():
            raise CoverageError(f"climatology has no data for {slot_label(day_slot(valid))}")
        fields.append(
            GridField(clim.spec, values, clim.variable, clim.level, valid_time=valid, lead_days=t)
        )
    return ReferenceForecast("climatology", tuple(fields))
