"""Deterministic SVG rendering of analysis outputs.

Every figure is plain SVG 1.1 text built from the input data alone, so the
same input always yields the same bytes. :func:`write_figure` stores a figure
together with csv and JSON sidecars holding the plotted numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .ensemble import DiffReport
from .rca import CategoryTable
from .rsa import RsaMatrix
from .store import DATA_TYPES

KINDS = ("rsa-heatmap", "mds-scatter", "rca-heatmap", "diff-table")
DEFAULT_BOUNDS = {
    "rsa-heatmap": (-0.2, 1.0),
    "rca-heatmap": (-0.1, 0.6),
    "mds-scatter": (0.0, 1.0),
    "diff-table": (-0.1, 0.1),
}
TYPE_COLORS = {"text": "#2ca25f", "behavior": "#8856a7", "brain": "#3182bd"}
# sequential ramp, low -> high
_RAMP = [(255, 255, 217), (199, 233, 180), (65, 182, 196), (34, 94, 168), (8, 29, 88)]

CELL = 28
LABEL_W = 180
FONT = 'font-family="Helvetica, Arial, sans-serif"'


@dataclass(frozen=True)
class RenderSpec:
    """What to draw and how.

    ``ordering`` applies to RCA heatmaps: ``None`` keeps the input column
    order, otherwise it names the reference row whose cells sort the columns
    (descending).
    """

    kind: str
    path: str | None = None
    ordering: str | None = None
    bounds: tuple[float, float] | None = None
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")
        if self.bounds is None:
            object.__setattr__(self, "bounds", DEFAULT_BOUNDS[self.kind])
        lo, hi = self.bounds
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise ValueError("color bounds must be finite with upper > lower")


def _color(value: float, bounds) -> str:
    lo, hi = bounds
    t = (min(max(value, lo), hi) - lo) / (hi - lo)
    pos = t * (len(_RAMP) - 1)
    i = min(int(pos), len(_RAMP) - 2)
    f = pos - i
    rgb = [round(a + (b - a) * f) for a, b in zip(_RAMP[i], _RAMP[i + 1])]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _text_color(value: float, bounds) -> str:
    lo, hi = bounds
    t = (min(max(value, lo), hi) - lo) / (hi - lo)
    return "#ffffff" if t > 0.6 else "#000000"


def _svg(width: float, height: float, body: list[str], title: str = "") -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        "<defs>",
        '<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6">',
        '<path d="M0,6 L6,0" stroke="#999999" stroke-width="1"/>',
        "</pattern>",
        "</defs>",
        f'<rect x="0" y="0" width="{width:g}" height="{height:g}" fill="#ffffff"/>',
    ]
    if title:
        head.append(f'<text x="10" y="18" font-size="14" {FONT}>{escape(title)}</text>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _cell(x, y, value, bounds, label_missing="n/a") -> list[str]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return [
            f'<rect class="cell missing" x="{x:g}" y="{y:g}" width="{CELL}" height="{CELL}" '
            'fill="url(#hatch)" stroke="#cccccc"/>',
            f'<text x="{x + CELL / 2:g}" y="{y + CELL / 2 + 3:g}" font-size="7" text-anchor="middle" '
            f'fill="#666666" {FONT}>{label_missing}</text>',
        ]
    return [
        f'<rect class="cell" x="{x:g}" y="{y:g}" width="{CELL}" height="{CELL}" '
        f'fill="{_color(value, bounds)}" stroke="#ffffff"/>',
        f'<text class="value" x="{x + CELL / 2:g}" y="{y + CELL / 2 + 3:g}" font-size="8" '
        f'text-anchor="middle" fill="{_text_color(value, bounds)}" {FONT}>{value:.2f}</text>',
    ]


def _type_rank(label: str) -> int:
    return DATA_TYPES.index(label) if label in DATA_TYPES else len(DATA_TYPES)


def render_rsa(rsa: RsaMatrix, spec: RenderSpec = RenderSpec("rsa-heatmap")) -> str:
    """Heatmap of pairwise RSA correlations, grouped by data type."""
    if spec.kind != "rsa-heatmap":
        raise ValueError("spec kind must be 'rsa-heatmap'")
    n = len(rsa.names)
    order = sorted(range(n), key=lambda i: _type_rank(rsa.labels[i]))
    top = 40 + LABEL_W
    left = LABEL_W
    body = []
    for r, i in enumerate(order):
        y = top + r * CELL
        body.append(
            f'<text class="row-label" x="{left - 6}" y="{y + CELL / 2 + 4:g}" font-size="11" text-anchor="end" '
            f'fill="{TYPE_COLORS.get(rsa.labels[i], "#000000")}" {FONT}>{escape(rsa.names[i])}</text>'
        )
        x = left + r * CELL + CELL / 2
        body.append(
            f'<text class="col-label" x="{x:g}" y="{top - 6}" font-size="11" '
            f'transform="rotate(-60 {x:g} {top - 6})" '
            f'fill="{TYPE_COLORS.get(rsa.labels[i], "#000000")}" {FONT}>{escape(rsa.names[i])}</text>'
        )
        for c, j in enumerate(order):
            v = float(rsa.rho[i, j])
            body.extend(_cell(left + c * CELL, y, v, spec.bounds))
    for r in range(1, n):
        if rsa.labels[order[r]] != rsa.labels[order[r - 1]]:
            pos = r * CELL
            body.append(
                f'<line class="separator" x1="{left}" y1="{top + pos}" x2="{left + n * CELL}" y2="{top + pos}" '
                'stroke="#000000" stroke-width="2"/>'
            )
            body.append(
                f'<line class="separator" x1="{left + pos}" y1="{top}" x2="{left + pos}" y2="{top + n * CELL}" '
                'stroke="#000000" stroke-width="2"/>'
            )
    return _svg(left + n * CELL + 20, top + n * CELL + 20, body, spec.title)


def render_mds(
    coords: np.ndarray, names: Sequence[str], labels: Sequence[str], spec: RenderSpec = RenderSpec("mds-scatter")
) -> str:
    """Scatter of 2-D MDS coordinates, colored by data type."""
    if spec.kind != "mds-scatter":
        raise ValueError("spec kind must be 'mds-scatter'")
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[0] != len(names):
        raise ValueError("one coordinate row per name is required")
    xy = coords[:, :2] if coords.shape[1] >= 2 else np.column_stack([coords[:, 0], np.zeros(len(names))])
    size, pad = 420.0, 60.0
    span = float(np.abs(xy).max()) or 1.0

    def to_px(v):
        return pad + (v / span + 1) / 2 * (size - 2 * pad)

    body = [
        f'<line x1="{pad}" y1="{size / 2:g}" x2="{size - pad}" y2="{size / 2:g}" stroke="#dddddd"/>',
        f'<line x1="{size / 2:g}" y1="{pad}" x2="{size / 2:g}" y2="{size - pad}" stroke="#dddddd"/>',
    ]
    for (x, y), name, label in zip(xy, names, labels):
        px, py = to_px(x), size - to_px(y)
        color = TYPE_COLORS.get(label, "#000000")
        body.append(f'<circle class="point" cx="{px:.3f}" cy="{py:.3f}" r="5" fill="{color}"/>')
        body.append(f'<text x="{px + 7:.3f}" y="{py + 4:.3f}" font-size="10" {FONT}>{escape(name)}</text>')
    legend_y = size + 10
    for k, t in enumerate(DATA_TYPES):
        body.append(f'<circle cx="{pad + k * 100}" cy="{legend_y}" r="5" fill="{TYPE_COLORS[t]}"/>')
        body.append(f'<text x="{pad + k * 100 + 8}" y="{legend_y + 4}" font-size="11" {FONT}>{t}</text>')
    return _svg(size + 140, size + 30, body, spec.title)


def _ordered_rows(table: CategoryTable, type_of: Mapping[str, str]) -> list[int]:
    def overall(i):
        row = table.values[i]
        row = row[~np.isnan(row)]
        return float(row.mean()) if row.size else -math.inf

    return sorted(range(len(table.rows)), key=lambda i: (_type_rank(type_of.get(table.rows[i], "")), -overall(i)))


def _ordered_columns(table: CategoryTable, reference: str | None) -> list[int]:
    cols = list(range(len(table.columns)))
    if reference is None:
        return cols
    if reference not in table.rows:
        raise ValueError(f"unknown ordering reference {reference!r}")
    ref = table.values[table.rows.index(reference)]
    return sorted(cols, key=lambda j: (math.isnan(ref[j]), -ref[j] if not math.isnan(ref[j]) else 0.0))


def render_rca(
    table: CategoryTable, spec: RenderSpec = RenderSpec("rca-heatmap"), type_of: Mapping[str, str] | None = None
) -> str:
    """Heatmap of category scores.

    Rows are grouped by data type and sorted by mean score within a group;
    columns follow the reference row's scores when ``spec.ordering`` is set.
    Missing cells are hatched.
    """
    if spec.kind != "rca-heatmap":
        raise ValueError("spec kind must be 'rca-heatmap'")
    type_of = type_of or {}
    rows = _ordered_rows(table, type_of)
    cols = _ordered_columns(table, spec.ordering)
    top = 40 + LABEL_W
    left = LABEL_W
    body = []
    for c, j in enumerate(cols):
        x = left + c * CELL + CELL / 2
        body.append(
            f'<text class="col-label" x="{x:g}" y="{top - 6}" font-size="11" '
            f'transform="rotate(-60 {x:g} {top - 6})" {FONT}>{escape(table.columns[j])}</text>'
        )
    for r, i in enumerate(rows):
        y = top + r * CELL
        name = table.rows[i]
        body.append(
            f'<text class="row-label" x="{left - 6}" y="{y + CELL / 2 + 4:g}" font-size="11" text-anchor="end" '
            f'fill="{TYPE_COLORS.get(type_of.get(name, ""), "#000000")}" {FONT}>{escape(name)}</text>'
        )
        for c, j in enumerate(cols):
            body.extend(_cell(left + c * CELL, y, float(table.values[i, j]), spec.bounds))
    return _svg(left + len(cols) * CELL + 20, top + len(rows) * CELL + 20, body, spec.title)


def render_diff_table(report: DiffReport, spec: RenderSpec = RenderSpec("diff-table")) -> str:
    """Table of per-category median differences; significant rows in bold."""
    if spec.kind != "diff-table":
        raise ValueError("spec kind must be 'diff-table'")
    rows = sorted(report.rows, key=lambda r: -r.median_diff)
    line_h = 22
    top = 50
    widths = (220, 70, 110, 90)
    body = [
        f'<text x="10" y="{top - 18}" font-size="12" {FONT}>{escape(report.label_a)} minus {escape(report.label_b)}</text>'
    ]
    headers = ("category", "norms", "median diff", "p")
    x = 10
    for h, w in zip(headers, widths):
        body.append(f'<text x="{x}" y="{top}" font-size="11" font-weight="bold" {FONT}>{h}</text>')
        x += w
    for k, r in enumerate(rows):
        y = top + (k + 1) * line_h
        weight = ' font-weight="bold"' if r.significant else ""
        p = "" if r.p_value is None else f"{r.p_value:.3f}"
        cells = (escape(r.category), str(r.n_norms), f"{r.median_diff:.2f}", p)
        body.append(
            f'<rect class="cell" x="10" y="{y - 15}" width="{sum(widths)}" height="{line_h - 2}" '
            f'fill="{_color(r.median_diff, spec.bounds)}" fill-opacity="0.5"/>'
        )
        x = 10
        for text, w in zip(cells, widths):
            body.append(f'<text x="{x}" y="{y}" font-size="11"{weight} {FONT}>{text}</text>')
            x += w
    return _svg(sum(widths) + 30, top + (len(rows) + 1) * line_h + 10, body, spec.title)


def write_figure(path: str | Path, svg: str, csv_text: str, data) -> list[Path]:
    """Write ``path`` (.svg) plus ``.csv`` and ``.json`` sidecars with the same stem."""
    path = Path(path).with_suffix(".svg")
    path.parent.mkdir(parents=True, exist_ok=True)
    outputs = [path, path.with_suffix(".csv"), path.with_suffix(".json")]
    outputs[0].write_text(svg, encoding="utf-8")
    outputs[1].write_text(csv_text, encoding="utf-8")
    outputs[2].write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return outputs

