"""CSV emission and SVG line charts for sweep results."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from cped.bench import SweepResult, SweepRow
from cped.errors import DataError

CSV_HEADER = ["gamma_prime", "param", "method", "mean_hpi", "stderr_hpi", "n_seeds"]

WIDTH, HEIGHT = 900, 500
LEFT, RIGHT, TOP, BOTTOM = 70, 190, 50, 60
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"]


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def _at_csv_precision(v: float) -> float:
    return float(_fmt(v))


def _sorted_rows(result: SweepResult) -> list[SweepRow]:
    return sorted(result.rows, key=lambda r: (r.method, r.param, r.gamma_prime))


def write_csv(result: SweepResult, path: str | Path) -> None:
    """One row per (gamma', param, method), sorted by method, param, gamma'."""
    if not result.rows:
        raise DataError("refusing to write an empty sweep result")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in _sorted_rows(result):
            writer.writerow(
                [_fmt(r.gamma_prime), r.param, r.method, _fmt(r.mean_hpi), _fmt(r.stderr_hpi), r.n_seeds]
            )


def read_csv(path: str | Path) -> SweepResult:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise DataError(f"{path}: expected header {','.join(CSV_HEADER)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                gp, param, method, mean, se, n = rec
                rows.append(SweepRow(float(gp), param, method, float(mean), float(se), int(n)))
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed row {rec!r}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return SweepResult(tuple(rows))


@dataclass(frozen=True)
class ChartSpec:
    title: str | None = None
    # normalised HPI uses a fixed [0, 1] y-range; raw variances get an automatic one
    normalized: bool = True


def _nice_ceiling(v: float) -> float:
    if v <= 0:
        return 1.0
    exp = math.floor(math.log10(v))
    for m in (1, 2, 2.5, 5, 10):
        if m * 10**exp >= v:
            return m * 10**exp
    return 10 ** (exp + 1)


def _num(v: float) -> str:
    return f"{v:.2f}"


def render_line_chart(result: SweepResult, spec: ChartSpec, path: str | Path) -> None:
    """Write a standalone SVG with one line and one +-stderr band per (param, method)."""
    Path(path).write_text(chart_svg(result, spec), encoding="utf-8")


def chart_svg(result: SweepResult, spec: ChartSpec = ChartSpec()) -> str:
    if not result.rows:
        raise DataError("cannot chart an empty sweep result")
    # round to CSV precision so charts from memory and from a CSV are byte-identical
    series: dict[tuple[str, str], list[tuple[float, float, float]]] = {}
    for r in _sorted_rows(result):
        series.setdefault((r.param, r.method), []).append(
            (_at_csv_precision(r.gamma_prime), _at_csv_precision(r.mean_hpi), _at_csv_precision(r.stderr_hpi))
        )

    xs = [p[0] for pts in series.values() for p in pts]
    x_max = max(0.1, math.ceil(max(xs) * 10 - 1e-9) / 10)
    if spec.normalized:
        y_max = 1.0
        y_ticks = [k / 10 for k in range(11)]
    else:
        y_max = _nice_ceiling(max(p[1] + p[2] for pts in series.values() for p in pts))
        y_ticks = [y_max * k / 5 for k in range(6)]

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x: float) -> float:
        return LEFT + pw * x / x_max

    def sy(y: float) -> float:
        return TOP + ph * (1.0 - min(max(y, 0.0), y_max) / y_max)

    methods = sorted({m for _, m in series})
    title = spec.title or f"HPI vs gamma' ({', '.join(methods)})"
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="28" text-anchor="middle" font-size="16">{escape(title)}</text>',
    ]

    # axes and ticks
    out.append('<g class="axes" stroke="black" stroke-width="1">')
    out.append(f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}"/>')
    out.append("</g>")
    n_xticks = int(round(x_max * 10))
    for k in range(n_xticks + 1):
        x = k / 10
        out.append(f'<line x1="{_num(sx(x))}" y1="{TOP + ph}" x2="{_num(sx(x))}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(sx(x))}" y="{TOP + ph + 20}" text-anchor="middle">{x:.1f}</text>')
    for y in y_ticks:
        out.append(f'<line x1="{LEFT - 5}" y1="{_num(sy(y))}" x2="{LEFT}" y2="{_num(sy(y))}" stroke="black"/>')
        out.append(
            f'<line x1="{LEFT}" y1="{_num(sy(y))}" x2="{LEFT + pw}" y2="{_num(sy(y))}" stroke="#dddddd"/>'
        )
        label = f"{y:.1f}" if spec.normalized else f"{y:.3g}"
        out.append(f'<text x="{LEFT - 8}" y="{_num(sy(y) + 4)}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">gamma\'</text>')
    ylabel = "HPI" if spec.normalized else "raw variance"
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.2f})">{ylabel}</text>'
    )

    for k, ((param, method), pts) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        label = param if len(methods) == 1 else f"{param} ({method})"
        if len(pts) > 1:
            upper = [f"{_num(sx(x))},{_num(sy(m + s))}" for x, m, s in pts]
            lower = [f"{_num(sx(x))},{_num(sy(m - s))}" for x, m, s in reversed(pts)]
            out.append(
                f'<polygon class="band" points="{" ".join(upper + lower)}" fill="{color}" '
                f'fill-opacity="0.2" stroke="none"/>'
            )
            line = " ".join(f"{_num(sx(x))},{_num(sy(m))}" for x, m, _ in pts)
            out.append(f'<polyline class="series" points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        else:
            x, m, s = pts[0]
            out.append(
                f'<line class="band" x1="{_num(sx(x))}" y1="{_num(sy(m - s))}" x2="{_num(sx(x))}" '
                f'y2="{_num(sy(m + s))}" stroke="{color}" stroke-opacity="0.4" stroke-width="6"/>'
            )
            out.append(f'<circle class="marker" cx="{_num(sx(x))}" cy="{_num(sy(m))}" r="4" fill="{color}"/>')
        ly = TOP + 10 + 20 * k
        lx = LEFT + pw + 20
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(label)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
