"""Report tables and their JSON / CSV / XLSX writers."""

from __future__ import annotations

import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

__all__ = [
    "Report",
    "PROFILE_COLUMNS",
    "BATTERY_COLUMNS",
    "PROBE_COLUMNS",
    "SCHWARZ_PICK_COLUMNS",
    "TESTFN_COLUMNS",
    "df_from_records",
    "to_jsonable",
    "render",
    "write_report",
]

log = logging.getLogger(__name__)

# Column lists shared by the analyses and the writers so that empty results
# still carry the right headers.
PROFILE_COLUMNS = ["sample_index", "delta", "ratio", "verdict_flag"]
BATTERY_COLUMNS = ["identity", "samples", "max_residual", "passed"]
PROBE_COLUMNS = ["r", "delta", "estimate"]
SCHWARZ_PICK_COLUMNS = ["family", "samples", "c_emp"]
TESTFN_COLUMNS = ["check", "value", "bound", "passed"]

FORMATS = ("json", "csv", "xlsx")


def df_from_records(
    records: Sequence[dict] | None, columns: Sequence[str]
) -> pd.DataFrame:
    """Create a DataFrame from ``records`` reindexed to ``columns``."""
    df = pd.DataFrame.from_records(list(records or []), coerce_float=False)
    return df.reindex(columns=list(columns))


@dataclass
class Report:
    """Result of one CLI analysis.

    ``tables`` keeps insertion order; the first table is the one written to
    CSV.
    """

    command: str
    meta: dict[str, Any]
    summary: dict[str, Any] = field(default_factory=dict)
    tables: dict[str, pd.DataFrame] = field(default_factory=dict)
    exit_code: int = 0

    @property
    def primary(self) -> pd.DataFrame | None:
        return next(iter(self.tables.values()), None)

    def payload(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "meta": self.meta,
            "summary": self.summary,
            "tables": {
                name: df.to_dict(orient="records")
                for name, df in self.tables.items()
            },
        }


def to_jsonable(value: Any) -> Any:
    """Convert numpy/complex values into JSON-compatible structures.

    Complex scalars become ``[re, im]``; complex arrays become
    ``{"re": ..., "im": ...}``; non-finite floats become ``None``.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return {
                "re": to_jsonable(value.real.tolist()),
                "im": to_jsonable(value.imag.tolist()),
            }
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if value is None or isinstance(value, str):
        return value
    if hasattr(value, "value"):  # enums
        return value.value
    if pd.isna(value):
        return None
    return str(value)


def _tag_floats(value: Any, tag: str) -> Any:
    if isinstance(value, dict):
        return {k: _tag_floats(v, tag) for k, v in value.items()}
    if isinstance(value, list):
        return [_tag_floats(v, tag) for v in value]
    if isinstance(value, float):
        return f"{tag}{value:.17g}"
    return value


def _render_json(report: Report) -> str:
    """Canonical JSON with floats written to 17 significant digits.

    Finite floats pass through ``json.dumps`` as tagged strings and are
    spliced back as bare literals; the tag is chosen absent from the
    payload.
    """
    payload = to_jsonable(report.payload())
    dump = partial(
        json.dumps,
        sort_keys=True,
        indent=2,
        ensure_ascii=False,
        allow_nan=False,
    )
    plain = dump(payload)
    n = 0
    while f"\\u0000f{n}:" in plain:
        n += 1
    text = dump(_tag_floats(payload, f"\x00f{n}:"))
    return re.sub(rf'"\\u0000f{n}:([^"]+)"', r"\1", text) + "\n"


def _render_csv(report: Report) -> str:
    buf = io.StringIO()
    header = {**report.meta, **report.summary, "command": report.command}
    for key in sorted(header):
        value = to_jsonable(header[key])
        if isinstance(value, (list, dict)):
            value = json.dumps(value, sort_keys=True)
        buf.write(f"# {key}={value}\n")
    table = report.primary
    if table is not None:
        table.to_csv(
            buf, index=False, float_format="%.17g", lineterminator="\n"
        )
    return buf.getvalue()


def render(report: Report, fmt: str = "json") -> str:
    """Return ``report`` serialised as ``json`` or ``csv`` text."""
    if fmt == "json":
        return _render_json(report)
    if fmt == "csv":
        return _render_csv(report)
    raise ValueError(f"format {fmt!r} has no text rendering")


def _write_xlsx(report: Report, path: Path) -> None:
    meta = {**report.meta, **report.summary, "command": report.command}
    meta_df = pd.DataFrame(
        [
            {"key": k, "value": json.dumps(to_jsonable(v), sort_keys=True)}
            for k, v in sorted(meta.items())
        ]
    )
    with pd.ExcelWriter(path, engine="openpyxl") as writer:
        meta_df.to_excel(writer, sheet_name="meta", index=False)
        for name, df in report.tables.items():
            df.to_excel(writer, sheet_name=name[:31], index=False)


def write_report(
    report: Report, path: str | Path | None, fmt: str = "json"
) -> str | None:
    """Write ``report`` to ``path``; return the text when ``path`` is
    ``None``."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if fmt == "xlsx":
        if path is None:
            raise ValueError("xlsx output needs --out")
        _write_xlsx(report, Path(path))
        log.info("Report written to %s", path)
        return None
    text = render(report, fmt)
    if path is None:
        return text
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    log.info("Report written to %s", path)
    return None
