"""CSV and plain-text rendering of result rows."""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(fmt(x) for x in v)
    return str(v)


def to_csv(rows: Iterable[Mapping]) -> str:
    rows = list(rows)
    if not rows:
        return ""
    header = list(rows[0].keys())
    for r in rows[1:]:
        for key in r:
            if key not in header:
                header.append(key)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(r.get(h)) for h in header])
    return buf.getvalue()


def to_text(rows: Iterable[Mapping]) -> str:
    out = []
    for i, r in enumerate(rows):
        if i:
            out.append("")
        width = max((len(k) for k in r), default=0)
        out.extend(f"{k.ljust(width)} : {fmt(v)}" for k, v in r.items())
    return "\n".join(out) + ("\n" if out else "")
