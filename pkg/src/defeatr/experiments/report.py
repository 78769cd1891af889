"""Result rows, CSV round-tripping, and hand-rolled SVG plots.

Floats are written with ``repr`` so a parsed-back row equals the emitted
one bit for bit; that is what makes byte-identical reruns checkable at
the row level.  Plots are built with the stdlib XML tree, one polyline
per data series, so the output is always well formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields as _dc_fields
from pathlib import Path
from xml.etree import ElementTree as ET

COLUMNS = (
    "experiment",
    "shape",
    "size",
    "alpha",
    "error_h1",
    "estimate",
    "component_avg",
    "component_navg",
    "effectivity",
    "c_bar",
    "dof",
    "runtime_ms",
)


@dataclass(frozen=True)
class ResultRow:
    """One experiment cell.  alpha and c_bar are blank when not applicable."""

    experiment: str
    shape: str
    size: float
    alpha: float | None
    error_h1: float
    estimate: float
    component_avg: float
    component_navg: float
    effectivity: float
    c_bar: float | None
    dof: int
    runtime_ms: float

    def __post_init__(self) -> None:
        if not (self.error_h1 > 0.0):
            raise ValueError("error_h1 must be positive")
        if not (self.estimate > 0.0):
            raise ValueError("estimate must be positive")
        if not math.isclose(
            self.effectivity, self.estimate / self.error_h1, rel_tol=1e-9
        ):
            raise ValueError("effectivity must equal estimate / error_h1")


assert tuple(f.name for f in _dc_fields(ResultRow)) == COLUMNS


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def emit_csv(rows, path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    lines = [",".join(COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, c)) for c in COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_csv(path) -> list[ResultRow]:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or tuple(lines[0].split(",")) != COLUMNS:
        raise ValueError(f"{path}: unrecognized result header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(COLUMNS):
            raise ValueError(f"{path}: bad field count in {ln!r}")
        rec = dict(zip(COLUMNS, parts))
        rows.append(
            ResultRow(
                experiment=rec["experiment"],
                shape=rec["shape"],
                size=float(rec["size"]),
                alpha=float(rec["alpha"]) if rec["alpha"] else None,
                error_h1=float(rec["error_h1"]),
                estimate=float(rec["estimate"]),
                component_avg=float(rec["component_avg"]),
                component_navg=float(rec["component_navg"]),
                effectivity=float(rec["effectivity"]),
                c_bar=float(rec["c_bar"]) if rec["c_bar"] else None,
                dof=int(rec["dof"]),
                runtime_ms=float(rec["runtime_ms"]),
            )
        )
    return rows


SVG_KINDS = ("error_vs_size", "effectivity_vs_size", "error_vs_alpha")

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)

_W, _H = 800, 440
_PLOT = (70.0, 30.0, 560.0, 390.0)  # left, top, right, bottom in pixels


def _series_for(rows, kind):
    """(label, color, dashed, points) per series, points sorted by x."""
    shapes: list[str] = []
    for r in rows:
        if r.shape not in shapes:
            shapes.append(r.shape)
    out = []
    for si, shape in enumerate(shapes):
        sub = [r for r in rows if r.shape == shape]
        color = _PALETTE[si % len(_PALETTE)]
        if kind == "effectivity_vs_size":
            out.append((shape, color, False,
                        sorted((r.size, r.effectivity) for r in sub)))
        elif kind == "error_vs_size":
            out.append((f"{shape} error", color, False,
                        sorted((r.size, r.error_h1) for r in sub)))
            out.append((f"{shape} estimate", color, True,
                        sorted((r.size, r.estimate) for r in sub)))
        elif kind == "error_vs_alpha":
            if any(r.alpha is None for r in sub):
                raise ValueError("error_vs_alpha needs an alpha in every row")
            out.append((f"{shape} error", color, False,
                        sorted((r.alpha, r.error_h1) for r in sub)))
            out.append((f"{shape} estimate", color, True,
                        sorted((r.alpha, r.estimate) for r in sub)))
        else:
            raise ValueError(f"unknown svg kind {kind!r}")
    return out


def _log_ticks(lo: float, hi: float) -> list[float]:
    k0 = math.floor(math.log10(lo))
    k1 = math.ceil(math.log10(hi))
    ticks = []
    mults = (1.0, 2.0, 5.0) if k1 - k0 <= 2 else (1.0,)
    for k in range(k0, k1 + 1):
        for m in mults:
            v = m * 10.0 ** k
            if lo / 1.001 <= v <= hi * 1.001:
                ticks.append(v)
    return ticks or [lo, hi]


def _linear_ticks(lo: float, hi: float) -> list[float]:
    span = hi - lo
    if span <= 0.0:
        return [lo]
    raw = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m for m in (1.0, 2.0, 5.0, 10.0) if m * mag >= raw),
               default=10.0) * mag
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * span:
        ticks.append(v)
        v += step
    return ticks


def _tick_label(v: float) -> str:
    return f"{v:g}"


def emit_svg(rows, path, kind: str) -> None:
    """Line plot of a sweep: log-log for sizes, log-y over linear alpha."""
    if not rows:
        raise ValueError("no rows to plot")
    series = _series_for(rows, kind)
    xlog = kind != "error_vs_alpha"

    xs = [x for _, _, _, pts in series for x, _ in pts]
    ys = [y for _, _, _, pts in series for _, y in pts]
    if min(ys) <= 0.0 or (xlog and min(xs) <= 0.0):
        raise ValueError("log-scale plots need positive data")

    def tx(x):
        return math.log10(x) if xlog else x

    txmin, txmax = min(map(tx, xs)), max(map(tx, xs))
    tymin, tymax = math.log10(min(ys)), math.log10(max(ys))
    if txmax - txmin < 1e-12:
        txmin, txmax = txmin - 0.5, txmax + 0.5
    if tymax - tymin < 1e-12:
        tymin, tymax = tymin - 0.5, tymax + 0.5
    # a little headroom so lines stay off the frame
    pad_x = 0.04 * (txmax - txmin)
    pad_y = 0.06 * (tymax - tymin)
    txmin, txmax = txmin - pad_x, txmax + pad_x
    tymin, tymax = tymin - pad_y, tymax + pad_y

    left, top, right, bottom = _PLOT

    def sx(x):
        return left + (tx(x) - txmin) / (txmax - txmin) * (right - left)

    def sy(y):
        return bottom - (math.log10(y) - tymin) / (tymax - tymin) * (bottom - top)

    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": str(_W),
        "height": str(_H),
        "viewBox": f"0 0 {_W} {_H}",
        "font-family": "sans-serif",
        "font-size": "12",
    })
    ET.SubElement(svg, "rect", {
        "x": "0", "y": "0", "width": str(_W), "height": str(_H),
        "fill": "white",
    })

    if xlog:
        xticks = _log_ticks(min(xs), max(xs))
    else:
        xticks = _linear_ticks(min(xs), max(xs))
    yticks = _log_ticks(min(ys), max(ys))

    for v in xticks:
        px = sx(v)
        ET.SubElement(svg, "line", {
            "x1": f"{px:.2f}", "y1": f"{top:.2f}",
            "x2": f"{px:.2f}", "y2": f"{bottom:.2f}",
            "stroke": "#dddddd", "stroke-width": "1",
        })
        lbl = ET.SubElement(svg, "text", {
            "x": f"{px:.2f}", "y": f"{bottom + 18:.2f}",
            "text-anchor": "middle", "fill": "#333333",
        })
        lbl.text = _tick_label(v)
    for v in yticks:
        py = sy(v)
        ET.SubElement(svg, "line", {
            "x1": f"{left:.2f}", "y1": f"{py:.2f}",
            "x2": f"{right:.2f}", "y2": f"{py:.2f}",
            "stroke": "#dddddd", "stroke-width": "1",
        })
        lbl = ET.SubElement(svg, "text", {
            "x": f"{left - 8:.2f}", "y": f"{py + 4:.2f}",
            "text-anchor": "end", "fill": "#333333",
        })
        lbl.text = _tick_label(v)

    ET.SubElement(svg, "rect", {
        "x": f"{left:.2f}", "y": f"{top:.2f}",
        "width": f"{right - left:.2f}", "height": f"{bottom - top:.2f}",
        "fill": "none", "stroke": "#333333", "stroke-width": "1",
    })

    xlabel = "opening angle alpha (degrees)" if kind == "error_vs_alpha" \
        else "feature size |gamma|"
    ylabel = {
        "error_vs_size": "H1 error / estimate",
        "error_vs_alpha": "H1 error / estimate",
        "effectivity_vs_size": "effectivity",
    }[kind]
    xl = ET.SubElement(svg, "text", {
        "x": f"{(left + right) / 2:.2f}", "y": f"{bottom + 40:.2f}",
        "text-anchor": "middle", "fill": "#000000",
    })
    xl.text = xlabel
    yl = ET.SubElement(svg, "text", {
        "x": "18", "y": f"{(top + bottom) / 2:.2f}",
        "text-anchor": "middle", "fill": "#000000",
        "transform": f"rotate(-90 18 {(top + bottom) / 2:.2f})",
    })
    yl.text = ylabel
    title = ET.SubElement(svg, "text", {
        "x": f"{(left + right) / 2:.2f}", "y": "20",
        "text-anchor": "middle", "fill": "#000000", "font-size": "14",
    })
    title.text = f"{rows[0].experiment}: {kind.replace('_', ' ')}"

    for label, color, dashed, pts in series:
        attrs = {
            "fill": "none",
            "stroke": color,
            "stroke-width": "1.8",
            "points": " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts),
        }
        if dashed:
            attrs["stroke-dasharray"] = "6 4"
        ET.SubElement(svg, "polyline", attrs)
        for x, y in pts:
            ET.SubElement(svg, "circle", {
                "cx": f"{sx(x):.2f}", "cy": f"{sy(y):.2f}",
                "r": "2.5", "fill": color,
            })

    lx, ly = right + 14, top + 10
    for i, (label, color, dashed, _) in enumerate(series):
        yy = ly + 18 * i
        attrs = {
            "x1": f"{lx:.2f}", "y1": f"{yy:.2f}",
            "x2": f"{lx + 24:.2f}", "y2": f"{yy:.2f}",
            "stroke": color, "stroke-width": "1.8",
        }
        if dashed:
            attrs["stroke-dasharray"] = "6 4"
        ET.SubElement(svg, "line", attrs)
        txt = ET.SubElement(svg, "text", {
            "x": f"{lx + 30:.2f}", "y": f"{yy + 4:.2f}",
            "fill": "#000000",
        })
        txt.text = label

    data = b'<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(svg)
    Path(path).write_bytes(data + b"\n")
