"""Minimal native SVG charts: deterministic text out, no dependencies.

CSV files are the authoritative outputs; these plots exist so results can
be eyeballed without loading anything. The emitted markup is a pure
function of the data — no timestamps, random ids, or environment state —
so identical inputs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = ["Series", "line_chart", "bar_chart"]

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
    "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
)
FONT = "font-family=\"Helvetica,Arial,sans-serif\""


@dataclass(frozen=True)
class Series:
    """One plotted line: points, name, and optional styling."""

    name: str
    x: np.ndarray
    y: np.ndarray
    color: str | None = None
    dash: str | None = None       # e.g. "6,4" for a dashed line
    markers: bool = False
    right_axis: bool = False      # scale against the secondary y axis


def _num(v: float) -> str:
    """Short stable number format for coordinates and tick labels."""
    return f"{float(v):.6g}"


def _range(values: list[np.ndarray]) -> tuple[float, float]:
    lo = min(float(np.min(v)) for v in values)
    hi = max(float(np.max(v)) for v in values)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def line_chart(
    path: str | Path,
    series: Sequence[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    ylabel_right: str = "",
    h_refs: Sequence[tuple[float, str]] = (),
    size: tuple[int, int] = (720, 460),
) -> None:
    """Render line series with axes, legend, and optional reference lines.

    ``h_refs`` draws horizontal dashed gray lines at given left-axis levels,
    each with a small label. Series flagged ``right_axis`` are scaled
    against their own axis drawn on the right edge.
    """
    if not series:
        raise ValueError("need at least one series")
    W, H = size
    ml, mr, mt, mb = 64, 70 if any(s.right_axis for s in series) else 24, 40, 52
    pw, ph = W - ml - mr, H - mt - mb

    xlo, xhi = _range([s.x for s in series])
    left = [s for s in series if not s.right_axis]
    right = [s for s in series if s.right_axis]
    ylo, yhi = _range([s.y for s in left] or [np.array([0.0, 1.0])])
    if h_refs:
        ylo = min(ylo, min(v for v, _ in h_refs) - 0.04 * (yhi - ylo))
        yhi = max(yhi, max(v for v, _ in h_refs) + 0.04 * (yhi - ylo))
    rlo, rhi = _range([s.y for s in right]) if right else (0.0, 1.0)

    def sx(v: float) -> float:
        return ml + (v - xlo) / (xhi - xlo) * pw

    def sy(v: float) -> float:
        return mt + ph - (v - ylo) / (yhi - ylo) * ph

    def sr(v: float) -> float:
        return mt + ph - (v - rlo) / (rhi - rlo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
    ]
    # axes frame and ticks
    out.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333" stroke-width="1"/>'
    )
    for tv in _ticks(xlo, xhi):
        x = sx(tv)
        out.append(
            f'<line x1="{_num(x)}" y1="{mt + ph}" x2="{_num(x)}" '
            f'y2="{mt + ph + 5}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{_num(x)}" y="{mt + ph + 18}" text-anchor="middle" '
            f'font-size="11" {FONT}>{_num(tv)}</text>'
        )
    for tv in _ticks(ylo, yhi):
        y = sy(tv)
        out.append(
            f'<line x1="{ml - 5}" y1="{_num(y)}" x2="{ml}" y2="{_num(y)}" '
            f'stroke="#333"/>'
        )
        out.append(
            f'<text x="{ml - 8}" y="{_num(y + 4)}" text-anchor="end" '
            f'font-size="11" {FONT}>{_num(tv)}</text>'
        )
    if right:
        for tv in _ticks(rlo, rhi):
            y = sr(tv)
            out.append(
                f'<line x1="{ml + pw}" y1="{_num(y)}" x2="{ml + pw + 5}" '
                f'y2="{_num(y)}" stroke="#333"/>'
            )
            out.append(
                f'<text x="{ml + pw + 8}" y="{_num(y + 4)}" text-anchor="start" '
                f'font-size="11" {FONT}>{_num(tv)}</text>'
            )
    # reference lines
    for level, label in h_refs:
        y = sy(level)
        out.append(
            f'<line x1="{ml}" y1="{_num(y)}" x2="{ml + pw}" y2="{_num(y)}" '
            f'stroke="#888" stroke-width="1" stroke-dasharray="10,6"/>'
        )
        if label:
            out.append(
                f'<text x="{ml + pw - 4}" y="{_num(y - 4)}" text-anchor="end" '
                f'font-size="10" fill="#666" {FONT}>{_esc(label)}</text>'
            )
    # series
    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        yfun = sr if s.right_axis else sy
        pts = " ".join(
            f"{_num(sx(xv))},{_num(yfun(yv))}" for xv, yv in zip(s.x, s.y)
        )
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.6"{dash}/>'
        )
        if s.markers:
            for xv, yv in zip(s.x, s.y):
                out.append(
                    f'<circle cx="{_num(sx(xv))}" cy="{_num(yfun(yv))}" '
                    f'r="2.6" fill="{color}"/>'
                )
    # legend
    lx, ly = ml + 10, mt + 14
    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        out.append(
            f'<line x1="{lx}" y1="{ly + 16 * i}" x2="{lx + 22}" '
            f'y2="{ly + 16 * i}" stroke="{color}" stroke-width="2"'
            + (f' stroke-dasharray="{s.dash}"' if s.dash else "")
            + "/>"
        )
        out.append(
            f'<text x="{lx + 28}" y="{ly + 16 * i + 4}" font-size="11" '
            f'{FONT}>{_esc(s.name)}</text>'
        )
    # labels
    if title:
        out.append(
            f'<text x="{W // 2}" y="22" text-anchor="middle" font-size="14" '
            f'{FONT}>{_esc(title)}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{ml + pw // 2}" y="{H - 14}" text-anchor="middle" '
            f'font-size="12" {FONT}>{_esc(xlabel)}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{mt + ph // 2}" text-anchor="middle" '
            f'font-size="12" {FONT} transform="rotate(-90 16 {mt + ph // 2})">'
            f"{_esc(ylabel)}</text>"
        )
    if ylabel_right and right:
        x = W - 16
        out.append(
            f'<text x="{x}" y="{mt + ph // 2}" text-anchor="middle" '
            f'font-size="12" {FONT} transform="rotate(90 {x} {mt + ph // 2})">'
            f"{_esc(ylabel_right)}</text>"
        )
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def bar_chart(
    path: str | Path,
    labels: Sequence[str],
    groups: Sequence[Sequence[float]],
    group_names: Sequence[str],
    title: str = "",
    ylabel: str = "",
    size: tuple[int, int] = (720, 460),
) -> None:
    """Render grouped vertical bars (one group of bars per label)."""
    if not labels or not groups:
        raise ValueError("need labels and at least one group")
    if any(len(g) != len(labels) for g in groups):
        raise ValueError("every group must have one value per label")
    W, H = size
    ml, mr, mt, mb = 64, 24, 40, 86
    pw, ph = W - ml - mr, H - mt - mb
    all_vals = np.asarray(groups, dtype=float)
    ylo = min(0.0, float(all_vals.min()))
    yhi = max(0.0, float(all_vals.max()))
    if yhi == ylo:
        yhi = ylo + 1.0
    pad = 0.06 * (yhi - ylo)
    ylo, yhi = ylo - (pad if ylo < 0 else 0), yhi + pad

    def sy(v: float) -> float:
        return mt + ph - (v - ylo) / (yhi - ylo) * ph

    slot = pw / len(labels)
    bw = slot * 0.8 / len(groups)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333" stroke-width="1"/>',
    ]
    for tv in _ticks(ylo, yhi):
        y = sy(tv)
        out.append(
            f'<line x1="{ml - 5}" y1="{_num(y)}" x2="{ml}" y2="{_num(y)}" '
            f'stroke="#333"/>'
        )
        out.append(
            f'<text x="{ml - 8}" y="{_num(y + 4)}" text-anchor="end" '
            f'font-size="11" {FONT}>{_num(tv)}</text>'
        )
    zero_y = sy(0.0)
    out.append(
        f'<line x1="{ml}" y1="{_num(zero_y)}" x2="{ml + pw}" '
        f'y2="{_num(zero_y)}" stroke="#333" stroke-width="1"/>'
    )
    for i, lab in enumerate(labels):
        gx = ml + slot * i + slot * 0.1
        for g, vals in enumerate(groups):
            v = float(vals[i])
            x = gx + g * bw
            y0, y1 = sorted((zero_y, sy(v)))
            out.append(
                f'<rect x="{_num(x)}" y="{_num(y0)}" width="{_num(bw * 0.92)}" '
                f'height="{_num(max(y1 - y0, 0.5))}" '
                f'fill="{PALETTE[g % len(PALETTE)]}"/>'
            )
        cx = ml + slot * i + slot / 2
        ty = mt + ph + 14
        out.append(
            f'<text x="{_num(cx)}" y="{ty}" text-anchor="end" font-size="10" '
            f'{FONT} transform="rotate(-35 {_num(cx)} {ty})">{_esc(lab)}</text>'
        )
    lx, ly = ml + 10, mt + 14
    for g, name in enumerate(group_names):
        out.append(
            f'<rect x="{lx}" y="{ly + 16 * g - 9}" width="14" height="10" '
            f'fill="{PALETTE[g % len(PALETTE)]}"/>'
        )
        out.append(
            f'<text x="{lx + 20}" y="{ly + 16 * g}" font-size="11" '
            f'{FONT}>{_esc(name)}</text>'
        )
    if title:
        out.append(
            f'<text x="{W // 2}" y="22" text-anchor="middle" font-size="14" '
            f'{FONT}>{_esc(title)}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{mt + ph // 2}" text-anchor="middle" '
            f'font-size="12" {FONT} transform="rotate(-90 16 {mt + ph // 2})">'
            f"{_esc(ylabel)}</text>"
        )
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def _esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
    )
