"""The CSV contracts this tool consumes.

Every bundle starts with a ``# schema: <name>`` line followed by a header
row.  The schemas are versioned by the producer; this module pins the
versions we know how to draw and refuses anything else with a diagnostic
that names the file and the offending column, so a silent producer-side
schema bump cannot produce a quietly wrong figure.
"""

from __future__ import annotations

import csv
from pathlib import Path

PANEL_SCHEMAS: dict[str, tuple[str, tuple[str, ...]]] = {
    "panel_a": (
        "panel-a/1",
        ("preset", "qubit", "p_flip_true", "p_flip", "ci_low", "ci_high"),
    ),
    "panel_b": (
        "panel-b/1",
        ("preset", "pair", "estimator", "exact", "robust", "robust_ci_low",
         "robust_ci_high", "nonrobust", "nonrobust_ci_low", "nonrobust_ci_high"),
    ),
    "panel_c": (
        "panel-c/1",
        ("preset", "label", "pauli", "qubits", "exact", "robust",
         "robust_ci_low", "robust_ci_high", "nonrobust", "nonrobust_ci_low",
         "nonrobust_ci_high", "sign_exact", "sign_robust"),
    ),
}
for _stem in ("panel_d", "panel_e", "panel_f", "panel_g"):
    PANEL_SCHEMAS[_stem] = (
        "panel-dq/1",
        ("panel", "quantity", "preset", "method", "label", "delta"),
    )


class SchemaError(Exception):
    """A CSV does not match the documented panel schema."""


def read_panel(path: str | Path) -> list[dict[str, str]]:
    """Validate one panel CSV and return its rows as string dicts."""
    path = Path(path)
    stem = path.stem
    if stem not in PANEL_SCHEMAS:
        known = ", ".join(sorted(PANEL_SCHEMAS))
        raise SchemaError(f"{path.name}: unknown panel (expected one of {known})")
    schema, columns = PANEL_SCHEMAS[stem]

    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith("# schema: "):
            raise SchemaError(f"{path.name}: missing '# schema:' header line")
        found = first[len("# schema: "):]
        if found != schema:
            raise SchemaError(f"{path.name}: expected schema {schema}, found {found}")
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path.name}: no header row after the schema line") from None
        if header != columns:
            missing = [c for c in columns if c not in header]
            unexpected = [c for c in header if c not in columns]
            parts = []
            if missing:
                parts.append("missing column(s) " + ", ".join(missing))
            if unexpected:
                parts.append("unexpected column(s) " + ", ".join(unexpected))
            if not parts:
                parts.append("columns out of order")
            raise SchemaError(f"{path.name}: {'; '.join(parts)}")
        rows = []
        for k, row in enumerate(reader):
            if len(row) != len(columns):
                raise SchemaError(
                    f"{path.name}: row {k + 1} has {len(row)} cells, expected {len(columns)}"
                )
            rows.append(dict(zip(columns, row)))
    return rows


def cell_float(row: dict[str, str], column: str, source: str) -> float:
    """A required numeric cell; empty or malformed is a schema violation."""
    text = row.get(column, "")
    try:
        return float(text)
    except ValueError:
        raise SchemaError(
            f"{source}: column {column} holds non-numeric value {text!r}"
        ) from None


def cell_float_or_none(row: dict[str, str], column: str, source: str) -> float | None:
    """An optional numeric cell; empty means absent (e.g. no CI computed)."""
    text = row.get(column, "")
    if text == "":
        return None
    return cell_float(row, column, source)
