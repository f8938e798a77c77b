"""
Export result tables to disk (TSV or CSV by path extension).
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Union

import pandas as pd

# Six significant digits for every float column.
FLOAT_FORMAT = "%.6g"


def format_table(df: pd.DataFrame, sep: str = "\t") -> str:
    """Render a table as delimited text: one header line, one row per record."""
    buf = io.StringIO()
    df.to_csv(buf, sep=sep, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue()


def export_table(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write DataFrame to path; format inferred from extension (.csv, else tab-separated).

    Args:
        df: DataFrame to write.
        path: Output path (.tsv, .txt or .csv).

    Returns:
        Resolved Path that was written.
    """
    p = Path(path).resolve()
    p.parent.mkdir(parents=True, exist_ok=True)
    suffix = (p.suffix or "").lower()
    if not suffix:
        p = p.with_suffix(".tsv")
    sep = "," if suffix == ".csv" else "\t"
    p.write_text(format_table(df, sep), encoding="utf-8")
    return p
