"""
Number formatting for report files.

All numeric output goes through these helpers so report bytes only depend on
the values, never on platform float repr quirks.
"""

from __future__ import annotations

import math
from typing import Optional

MISSING = "NA"


def fmt_num(value: Optional[float]) -> str:
    """Format a number with 6 significant digits; None / NaN become 'NA'."""
    if value is None:
        return MISSING
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return MISSING
    text = f"{value:.6g}"
    if text == "-0":
        text = "0"
    return text


def fmt_fixed(value: Optional[float], digits: int = 6) -> str:
    """Fixed-point formatting used for human-facing CLI output."""
    if value is None:
        return MISSING
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return MISSING
    return f"{value:.{digits}f}"


def round_sig(value: Optional[float]) -> Optional[float]:
    """Round to 6 significant digits for the JSON summary (None stays None)."""
    if value is None:
        return None
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return None
    rounded = float(f"{value:.6g}")
    return 0.0 if rounded == 0 else rounded
