from __future__ import annotations

"""
Table and summary writers for fracwave report bundles.

Every file produced here is byte-stable:

- header row mandatory; each numeric column name carries its unit in
  brackets, e.g. ``t [time]``
- ``,`` separator, ``.`` decimal point, LF line endings
- floats as ``format(x, ".16e")`` (17 significant digits); integers,
  booleans and strings verbatim
- a final line ``# sha256=<hex>`` over all preceding bytes

Design principles
-----------------
- Writers only format; they never compute diagnostics.
- Depend only on the standard `csv` module and the exception hierarchy.
"""

import csv
import hashlib
import io
import math
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Sequence, Tuple

from ..exceptions import ResultsIOError

CHECKSUM_PREFIX = "# sha256="


# ---------------------------------------------------------------------------
# Cell formatting
# ---------------------------------------------------------------------------


def format_value(value: Any) -> str:
    """Render one cell or summary value."""
    if hasattr(value, "item") and callable(value.item) and not isinstance(value, (str, bytes)):
        value = value.item()  # numpy scalars
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".16e")
    if value is None:
        return ""
    return str(value)


def column_name(name: str, unit: str) -> str:
    return f"{name} [{unit}]" if unit else name


def _is_number(value: Any) -> bool:
    if hasattr(value, "item") and callable(value.item) and not isinstance(value, (str, bytes)):
        value = value.item()
    return isinstance(value, (int, float)) and not isinstance(value, bool)


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def _write_with_checksum(path: Path, body: str) -> Path:
    data = body.encode("utf-8")
    digest = hashlib.sha256(data).hexdigest()
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data + f"{CHECKSUM_PREFIX}{digest}\n".encode("utf-8"))
    except Exception as e:
        raise ResultsIOError(f"Failed to write {path}: {e}")
    return path


def write_table(
    path: Path,
    columns: Sequence[Tuple[str, str]],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """
    Write a CSV table.

    Parameters
    ----------
    path:
        Destination file.
    columns:
        ``(name, unit)`` pairs; ``""`` only for label and flag columns
        (strings, booleans). Dimensionless numbers use ``"1"``.
    rows:
        Row sequences of the same length as ``columns``.

    Raises
    ------
    ValueError
        If a row has the wrong length or a number lands in a column
        without a unit.
    ResultsIOError
        If the file cannot be written.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([column_name(n, u) for n, u in columns])
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) != len(columns):
            raise ValueError(f"Row {i} has {len(row)} cells, expected {len(columns)}")
        for (name, unit), value in zip(columns, row):
            if not unit and _is_number(value):
                raise ValueError(f"Numeric column {name!r} needs a unit")
        writer.writerow([format_value(v) for v in row])
    return _write_with_checksum(path, buf.getvalue())


def write_summary(path: Path, values: Mapping[str, Any]) -> Path:
    """Write sorted ``key=value`` lines plus the checksum line."""
    lines = [f"{key}={format_value(values[key])}\n" for key in sorted(values)]
    return _write_with_checksum(path, "".join(lines))


# ---------------------------------------------------------------------------
# Readers
# ---------------------------------------------------------------------------


def verify_checksum(path: Path) -> bool:
    """Whether the final ``# sha256=`` line matches the preceding bytes."""
    data = Path(path).read_bytes()
    body, sep, last = data.rstrip(b"\n").rpartition(b"\n")
    if not sep or not last.startswith(CHECKSUM_PREFIX.encode("utf-8")):
        return False
    expected = last[len(CHECKSUM_PREFIX):].decode("ascii")
    return hashlib.sha256(body + b"\n").hexdigest() == expected


def read_table(path: Path) -> Tuple[List[str], List[List[str]]]:
    """Header and rows of a table written by :func:`write_table` (checksum line dropped)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if not ln.startswith(CHECKSUM_PREFIX)]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader]


def read_summary(path: Path) -> dict:
    """``key=value`` lines of a summary file as strings."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key] = value
    return out
