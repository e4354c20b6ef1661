"""Shared CSV / JSON output helpers."""
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10e"


def flags_to_cell(flags) -> str:
    """Flatten a flags list into one CSV cell."""
    return " | ".join(flags) if flags else ""


def jsonable(obj):
    """Recursively convert results to plain JSON types. inf/nan become strings."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, Path):
        return str(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True)


def write_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(obj) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_csv(df: pd.DataFrame, path: str | Path | None, columns: list[str] | None = None) -> Path | None:
    """
    Write a table with a header row and 11 significant digits.

    With `columns`, missing ones are added empty and the order is fixed. A path of
    None or "-" writes to stdout and returns None.
    """
    if columns is not None:
        df = df.copy()
        for col in columns:
            if col not in df.columns:
                df[col] = ""
        df = df[columns]

    if path is None or str(path) == "-":
        df.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT)
        return None

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(df)} rows to {path}")
    return path


def read_csv(path: str | Path, required: list[str] | None = None) -> pd.DataFrame:
    """Load a CSV written by this package, checking required columns."""
    from levitodyn.core import ConfigError

    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise ConfigError(f"input file not found: {path}") from None
    missing = set(required or []) - set(df.columns)
    if missing:
        raise ConfigError(f"{path} is missing required column(s): {sorted(missing)}")
    logger.info(f"Loaded {len(df)} rows from {path}")
    return df
