"""Small shared helpers: exact summation and atomic file writes."""

from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np


def exact_sum(values) -> float:
    """Order-independent compensated sum of a float array."""
    arr = np.asarray(values, dtype=float)
    return math.fsum(arr.ravel().tolist())


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a temp file and rename, never in place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
