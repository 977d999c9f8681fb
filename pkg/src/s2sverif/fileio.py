"""GF1 single-field files, score tables and climatology archives.

GF1 layout: one line of UTF-8 JSON (the header, ``"magic": "GF1"`` first)
terminated by ``\\n``, then ``n_lat * n_lon`` little-endian float32 values in
row-major order, north to south. Cells equal to ``fill_value`` are missing.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
import os
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    ArgumentError,
    BadMagicError,
    CoverageError,
    HeaderError,
    SizeMismatchError,
    TruncatedHeaderError,
)
from .grid import Climatology, GridField, GridSpec
from .harness import FieldSource, ScoreRow, ScoreTable

MAGIC = "GF1"
DEFAULT_FILL = float(np.finfo(np.float32).min)
MAX_HEADER = 16 * 1024 * 1024
REQUIRED_KEYS = ("magic", "n_lat", "n_lon", "lats", "lons", "variable", "level", "valid_time", "lead_days")
KNOWN_KEYS = frozenset(REQUIRED_KEYS + ("member", "fill_value"))
CSV_COLUMNS = ("metric", "variable", "lead", "init_date", "value", "n_members")


def encode_field(field: GridField, fill_value: Optional[float] = DEFAULT_FILL) -> bytes:
    spec = field.spec
    header = {
        "magic": MAGIC,
        "n_lat": spec.n_lat,
        "n_lon": spec.n_lon,
        "lats": [float(x) for x in spec.lats],
        "lons": [float(x) for x in spec.lons],
        "variable": field.variable,
        "level": field.level,
        "valid_time": field.valid_time.isoformat(),
        "lead_days": int(field.lead_days),
        "member": field.member,
        "fill_value": fill_value,
    }
    values = field.values.astype("<f4")
    if fill_value is not None:
        values = np.where(np.isnan(field.values), np.float32(fill_value), values).astype("<f4")
    line = json.dumps(header, separators=(",", ":"), allow_nan=False).encode() + b"\n"
    return line + values.tobytes(order="C")


def write_field(path, field: GridField, fill_value: Optional[float] = DEFAULT_FILL) -> None:
    Path(path).write_bytes(encode_field(field, fill_value))


def _parse_header(fh) -> tuple[dict, int]:
    first = fh.read(1)
    if first != b"{":
        raise BadMagicError("not a GF1 file (header must start with a JSON object)")
    line = first + fh.readline(MAX_HEADER)
    if not line.endswith(b"\n"):
        raise TruncatedHeaderError("GF1 header is not terminated")
    try:
        header = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise HeaderError(f"GF1 header is not valid JSON: {e}") from None
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise BadMagicError(f"bad magic {header.get('magic') if isinstance(header, dict) else None!r}")
    missing = [k for k in REQUIRED_KEYS if k not in header]
    if missing:
        raise HeaderError(f"GF1 header lacks {missing}")
    unknown = sorted(set(header) - KNOWN_KEYS)
    if unknown:
        warnings.warn(f"ignoring unknown GF1 header keys {unknown}", stacklevel=3)
    n_lat, n_lon = header["n_lat"], header["n_lon"]
    if not (isinstance(n_lat, int) and isinstance(n_lon, int) and n_lat > 0 and n_lon > 0):
        raise HeaderError("n_lat and n_lon must be positive integers")
    if len(header["lats"]) != n_lat or len(header["lons"]) != n_lon:
        raise SizeMismatchError("coordinate lengths disagree with n_lat/n_lon")
    try:
        header["valid_time"] = dt.date.fromisoformat(str(header["valid_time"])[:10])
    except ValueError:
        raise HeaderError(f"bad valid_time {header['valid_time']!r}") from None
    return header, len(line)


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        return _parse_header(fh)[0]


def decode_field(data: bytes) -> GridField:
    """Parse GF1 bytes. Raises a distinct FormatError subclass per corruption kind."""
    fh = io.BytesIO(data)
    header, _ = _parse_header(fh)
    n = header["n_lat"] * header["n_lon"]
    payload = fh.read()
    if len(payload) != 4 * n:
        raise SizeMismatchError(f"payload has {len(payload)} bytes, header implies {4 * n}")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(header["n_lat"], header["n_lon"])
    fill = header.get("fill_value")
    if fill is not None:
        values = np.where(values == np.float32(fill), np.nan, values)
    try:
        spec = GridSpec(header["lats"], header["lons"])
    except ArgumentError as e:
        raise HeaderError(f"bad grid coordinates: {e}") from None
    return GridField(
        spec,
        values,
        str(header["variable"]),
        str(header["level"]),
        valid_time=header["valid_time"],
        lead_days=int(header["lead_days"]),
        member=header.get("member"),
    )


def read_field(path) -> GridField:
    return decode_field(Path(path).read_bytes())


class DirectorySource(FieldSource):
    """All ``*.gf1`` files under a directory, indexed by their headers."""

    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise ArgumentError(f"not a directory: {root}")
        self._index: dict = {}
        self._members: dict = {}
        for p in sorted(self.root.rglob("*.gf1")):
            h = read_header(p)
            name = f"{h['variable']}-{h['level']}" if h["level"] else str(h["variable"])
            member = h.get("member")
            key = (name, h["valid_time"], int(h["lead_days"]), member)
            if key in self._index:
                raise ArgumentError(f"{p} duplicates {self._index[key]}")
            self._index[key] = p
            if member is not None:
                self._members.setdefault(key[:3], set()).add(member)

    def keys(self):
        return sorted(self._index, key=lambda k: (k[0], k[1], k[2], -1 if k[3] is None else k[3]))

    def get(self, name, valid, lead, member=None):
        p = self._index.get((name, valid, lead, member))
        if p is None:
            what = "" if member is None else f" member={member}"
            raise CoverageError(f"missing {name} valid={valid} lead={lead}{what}")
        return read_field(p)

    def member_ids(self, name, valid, lead):
        return sorted(self._members.get((name, valid, lead), ()))


# ---------------------------------------------------------------------------
# score tables


def _num(x: float) -> str:
    # repr is the shortest string that parses back to the same double
    return repr(float(x))


def scores_to_csv(table: ScoreTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in table.rows:
        w.writerow([r.metric, r.variable, r.lead, r.init_date.isoformat() if r.init_date else "",
                    _num(r.value), r.n_members])
    return buf.getvalue()


def _jnum(x: float):
    return float(x) if math.isfinite(x) else None


def scores_to_json(table: ScoreTable) -> str:
    doc = {
        "columns": list(CSV_COLUMNS),
        "rows": [
            {
                "metric": r.metric,
                "variable": r.variable,
                "lead": r.lead,
                "init_date": r.init_date.isoformat() if r.init_date else None,
                "value": _jnum(r.value),
                "n_members": r.n_members,
                "status": r.status,
                "message": r.message,
            }
            for r in table.rows
        ],
        "aggregates": [
            {"metric": a.metric, "variable": a.variable, "lead": a.lead, "value": _jnum(a.value), "n_dates": a.n_dates}
            for a in table.aggregates
        ],
        "meta": table.meta,
    }
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_scores(table: ScoreTable, fmt: str, path) -> None:
    if len(table) == 0:
        raise ArgumentError("refusing to write an empty score table")
    if fmt == "csv":
        text = scores_to_csv(table)
    elif fmt == "json":
        text = scores_to_json(table)
    else:
        raise ArgumentError(f"unknown score format {fmt!r}")
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise ArgumentError(f"cannot write {path}: {e.strerror}") from None


def read_scores(path) -> ScoreTable:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        doc = json.loads(text)
        rows = [
            ScoreRow(
                r["metric"], r["variable"], int(r["lead"]),
                dt.date.fromisoformat(r["init_date"]) if r["init_date"] else None,
                math.nan if r["value"] is None else float(r["value"]),
                int(r["n_members"]), r.get("status", "ok"), r.get("message", ""),
            )
            for r in doc["rows"]
        ]
        return ScoreTable(rows, doc.get("meta"))
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ArgumentError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
    rows = []
    for r in reader:
        v = float(r["value"])
        rows.append(ScoreRow(
            r["metric"], r["variable"], int(r["lead"]),
            dt.date.fromisoformat(r["init_date"]) if r["init_date"] else None,
            v, int(r["n_members"]), "ok" if math.isfinite(v) else "missing",
        ))
    return ScoreTable(rows)


# ---------------------------------------------------------------------------
# climatology


def save_climatology(path, clim: Climatology) -> None:
    with open(path, "wb") as fh:
        np.savez(
            fh,
            mean=clim.mean,
            std=clim.std,
            lats=clim.spec.lats,
            lons=clim.spec.lons,
            variable=np.array(clim.variable),
            level=np.array(clim.level),
            source_years=np.array(clim.source_years, dtype=np.int64),
        )


def load_climatology(path) -> Climatology:
    if not os.path.exists(path):
        raise ArgumentError(f"no such climatology file: {path}")
    with np.load(path) as z:
        return Climatology(
            GridSpec(z["lats"], z["lons"]),
            z["mean"],
            z["std"],
            str(z["variable"]),
            str(z["level"]),
            tuple(int(y) for y in z["source_years"]),
        )
