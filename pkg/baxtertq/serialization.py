from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd

from baxtertq.model import RootSet

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """
    Converts results into plain JSON types. Complex numbers become [re, im] pairs, non-finite floats become
    null, and anything with a ``to_dict`` method is converted through it.
    """
    if isinstance(value, (bool, str)) or value is None:
        return value

    if isinstance(value, Enum):
        return value.value

    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(float(value.real)), to_jsonable(float(value.imag))]

    if isinstance(value, (int, np.integer)):
        return int(value)

    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None

    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]

    if isinstance(value, RootSet):
        return [to_jsonable(r) for r in value.roots]

    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}

    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]

    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())

    raise TypeError(f"Cannot serialize a value of type {type(value).__name__}")


def dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _atomic_write(path: str, write) -> None:
    """
    Writes through a temporary file in the target directory and renames it into place, so a reader never
    sees a partial file.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)

    with tempfile.NamedTemporaryFile("w", encoding="utf-8", dir=directory, suffix=".tmp", delete=False,
                                     newline="") as tmp:
        tmp_path = tmp.name
        try:
            write(tmp)
            tmp.flush()
            os.fsync(tmp.fileno())
        except BaseException:
            tmp.close()
            os.unlink(tmp_path)
            raise

    os.replace(tmp_path, path)
    logger.debug(f"Wrote {path}")


def write_json(data: Any, path: str) -> None:
    text = dumps(data)
    _atomic_write(path, lambda f: f.write(text))


def write_csv(df: pd.DataFrame, path: str) -> None:
    _atomic_write(path, lambda f: df.to_csv(f, index=False))


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
