"""Shared deterministic formatting for CSV/JSON artifacts.

Floats are printed at 12 significant digits with '\n' line endings so
golden files stay byte-identical across runs and platforms.
"""

from __future__ import annotations

import math
import os
from typing import Iterable, Sequence

__all__ = ["fmt_float", "write_csv", "atomic_write_text"]


def fmt_float(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[str]],
              trailer: str | None = None) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    if trailer is not None:
        lines.append(trailer)
    atomic_write_text(path, "\n".join(lines) + "\n")
