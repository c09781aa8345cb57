"""CSV and SVG writers used by the command line."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import NumericalFailure, ObservableRecord, Wavefunction

AXIS_NAMES = ("x", "y", "z")


def fmt(value: float) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise NumericalFailure(f"refusing to write non-finite value {value}")
    return format(value, ".17g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def observable_header(dim: int) -> list:
    names = AXIS_NAMES[:dim]
    return (["time", "norm"] + [f"mean_{a}" for a in names]
            + [f"mean_p{a}" for a in names] + ["energy_h0"])


def write_observables(path, records: Sequence[ObservableRecord], dim: int) -> Path:
    return write_csv(path, observable_header(dim), (r.values() for r in records))


def write_snapshot(path, psi: Wavefunction) -> Path:
    grid = psi.grid
    names = list(AXIS_NAMES[:grid.ndim])
    coords = [x.ravel() for x in grid.mesh]
    a = psi.amplitudes.ravel()
    rows = zip(*coords, np.abs(a) ** 2, a.real, a.imag)
    return write_csv(path, names + ["density", "re_psi", "im_psi"], rows)


def _polyline(xs, ys, x0, y0, w, h):
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    xspan = np.ptp(xs) or 1.0
    yspan = np.ptp(ys) or 1.0
    px = x0 + (xs - xs.min()) / xspan * w
    py = y0 + h - (ys - ys.min()) / yspan * h
    return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))


def write_svg(path, times, series: dict, width: int = 640, panel: int = 180) -> Path:
    """One stacked panel per named series, each a bare polyline with a label."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pad = 30
    height = len(series) * (panel + pad) + pad
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             '<rect width="100%" height="100%" fill="white"/>']
    for i, (name, ys) in enumerate(series.items()):
        top = pad + i * (panel + pad)
        ys = np.asarray(ys, float)
        parts.append(f'<rect x="{pad}" y="{top}" width="{width - 2 * pad}" height="{panel}" '
                     'fill="none" stroke="#999"/>')
        parts.append(f'<text x="{pad}" y="{top - 6}" font-size="12" font-family="sans-serif">'
                     f'{name}: [{ys.min():.4g}, {ys.max():.4g}]</text>')
        pts = _polyline(times, ys, pad, top, width - 2 * pad, panel)
        parts.append(f'<polyline fill="none" stroke="#1f4e99" stroke-width="1.5" points="{pts}"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    return path
