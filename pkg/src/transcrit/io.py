"""Byte-stable CSV and SVG output."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence

__all__ = ["SCHEMA_VERSION", "fmt", "csv_text", "write_csv", "read_csv", "loglog_svg"]

SCHEMA_VERSION = 1


def fmt(v) -> str:
    """Shortest round-trip text for numbers; plain ``str`` otherwise."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "dtype"):  # numpy scalar
        return fmt(v.item())
    if v is None:
        return ""
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [f"schema_version,{SCHEMA_VERSION}", ",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read a file written by :func:`write_csv`; returns header and raw rows."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "schema_version":
        raise ValueError(f"{path}: missing schema_version row")
    return rows[1], rows[2:]


def loglog_svg(path: str | Path, xs: Sequence[float], ys: Sequence[float], *,
               slope: float | None = None, intercept: float | None = None,
               title: str = "", xlabel: str = "x", ylabel: str = "y") -> Path:
    """Static log-log scatter with an optional fitted line.

    Written by hand so the bytes depend only on the data.
    """
    W, H, m = 480, 360, 56
    lx = [math.log10(v) for v in xs]
    ly = [math.log10(v) for v in ys]
    if slope is not None:
        fit = [(slope * math.log(v) + intercept) / math.log(10) for v in xs]
        ly_all = ly + fit
    else:
        fit = []
        ly_all = ly
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly_all), max(ly_all)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(u):
        return m + (u - x0) / (x1 - x0) * (W - 2 * m)

    def py(v):
        return H - m - (v - y0) / (y1 - y0) * (H - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" '
           'fill="none" stroke="black"/>',
           f'<text x="{W / 2:.1f}" y="{m / 2:.1f}" text-anchor="middle" '
           f'font-size="14">{title}</text>',
           f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle" '
           f'font-size="12">log10 {xlabel}</text>',
           f'<text x="14" y="{H / 2:.1f}" font-size="12" transform="rotate(-90 14 '
           f'{H / 2:.1f})" text-anchor="middle">log10 {ylabel}</text>',
           f'<text x="{m}" y="{H - m + 16}" font-size="10">{x0:.3g}</text>',
           f'<text x="{W - m}" y="{H - m + 16}" font-size="10" '
           f'text-anchor="end">{x1:.3g}</text>',
           f'<text x="{m - 4}" y="{H - m}" font-size="10" text-anchor="end">{y0:.3g}</text>',
           f'<text x="{m - 4}" y="{m + 8}" font-size="10" text-anchor="end">{y1:.3g}</text>']
    for u, v in zip(lx, ly):
        out.append(f'<circle cx="{px(u):.2f}" cy="{py(v):.2f}" r="3" fill="steelblue"/>')
    if fit:
        pts = " ".join(f"{px(u):.2f},{py(v):.2f}" for u, v in sorted(zip(lx, fit)))
        out.append(f'<polyline points="{pts}" fill="none" stroke="firebrick"/>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
