"""Text output helpers shared by the CLI and the demos."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np


def fmt_num(x) -> str:
    """12 significant digits; scientific notation for |x| < 1e-4 or >= 1e7."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0"
    if abs(x) < 1e-4 or abs(x) >= 1e7:
        return f"{x:.11e}"
    return f"{x:.12g}"


def csv_line(values: Iterable) -> str:
    return ",".join(v if isinstance(v, str) else fmt_num(v) for v in values)


def matrix_block(title: str, mat: np.ndarray, labels: Sequence[str]) -> str:
    mat = np.atleast_2d(mat)
    lines = [f"# {title}", csv_line([""] + list(labels[: mat.shape[1]]))]
    for name, row in zip(labels, mat):
        lines.append(csv_line([name] + row.tolist()))
    return "\n".join(lines) + "\n"


def parse_int_range(text: str) -> list[int]:
    """``"a..b"`` (inclusive), ``"a,b,c"`` or a single integer."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def parse_real_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]
