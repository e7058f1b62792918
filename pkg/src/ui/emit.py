"""
Table emission as CSV or JSON.

CSV floats are written with 17 significant digits so every double
survives a round trip. JSON documents carry the records and a ``config``
block echoing the resolved run configuration; for CSV the echo goes to a
``<path>.config.json`` sidecar so the header stays on the first line.
"""
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.core.errors import ConfigError, EmitError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
FLOAT_FORMAT = "%.17g"

Table = Union[Sequence[Mapping[str, Any]], pd.DataFrame]


def to_builtin(value: Any) -> Any:
    """Plain Python values for JSON; non-finite floats become None."""
    if isinstance(value, Mapping):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _frame(table: Table, columns: Optional[Sequence[str]]) -> pd.DataFrame:
    if isinstance(table, pd.DataFrame):
        return table if columns is None else table.reindex(columns=list(columns))
    return pd.DataFrame(list(table), columns=None if columns is None else list(columns))


def render(table: Table, fmt: str = "csv", config: Optional[Mapping[str, Any]] = None,
           columns: Optional[Sequence[str]] = None) -> str:
    if fmt not in FORMATS:
        raise ConfigError(f"unknown output format {fmt!r}; expected one of {FORMATS}")
    frame = _frame(table, columns)
    if fmt == "csv":
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT)
        return buffer.getvalue()
    records: List[Dict[str, Any]] = frame.to_dict(orient="records")
    document = {"config": to_builtin(dict(config or {})), "records": to_builtin(records)}
    return json.dumps(document, indent=2) + "\n"


def emit(table: Table, fmt: str = "csv", path: Optional[Union[str, Path]] = None,
         config: Optional[Mapping[str, Any]] = None, columns: Optional[Sequence[str]] = None) -> Optional[Path]:
    """Write ``table`` to ``path`` (stdout when None or '-') and return the path written."""
    text = render(table, fmt, config, columns)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return None
    target = Path(path)
    try:
        target.write_text(text, encoding="utf-8")
        if fmt == "csv" and config is not None:
            sidecar = target.with_name(target.name + ".config.json")
            sidecar.write_text(json.dumps(to_builtin(dict(config)), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise EmitError(f"cannot write {target}: {exc}") from exc
    logger.info("wrote %s (%s)", target, fmt)
    return target


def emit_document(document: Mapping[str, Any], path: Optional[Union[str, Path]] = None) -> Optional[Path]:
    """Write a single JSON document (a report rather than a table)."""
    text = json.dumps(to_builtin(dict(document)), indent=2) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return None
    target = Path(path)
    try:
        target.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise EmitError(f"cannot write {target}: {exc}") from exc
    return target
