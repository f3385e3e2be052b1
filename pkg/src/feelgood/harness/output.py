"""CSV tables and a dependency-free SVG regret plot."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .runner import Aggregate, RunResult

__all__ = ["raw_csv", "aggregate_csv", "emit_csv", "svg_plot", "emit_plot", "summary_lines"]

RAW_HEADER = ("agent", "run_id", "t", "cum_regret", "sigma_sq")
AGG_HEADER = ("agent", "t", "mean_cum_regret", "stderr")


def _fmt(x: float) -> str:
    # repr round-trips exactly, so re-emission is byte-identical
    return repr(float(x))


def _table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def raw_csv(raw: Sequence[RunResult], agent_order: Sequence[str] | None = None) -> str:
    order = {name: i for i, name in enumerate(agent_order or dict.fromkeys(r.agent for r in raw))}
    rows = sorted(raw, key=lambda r: (order.get(r.agent, len(order)), r.agent, r.run_id))
    return _table(
        RAW_HEADER,
        (
            (r.agent, str(r.run_id), str(t + 1), _fmt(c), _fmt(s))
            for r in rows
            for t, (c, s) in enumerate(zip(r.cum_regret, r.sigma_sq))
        ),
    )


def aggregate_csv(aggs: Sequence[Aggregate]) -> str:
    return _table(
        AGG_HEADER,
        ((a.agent, str(t + 1), _fmt(m), _fmt(s)) for a in aggs for t, (m, s) in enumerate(zip(a.mean, a.stderr))),
    )


def emit_csv(results: Sequence[Aggregate] | Sequence[RunResult], path: str | Path,
             agent_order: Sequence[str] | None = None) -> Path:
    """Write raw traces or aggregates, chosen by element type (empty -> aggregate header)."""
    results = list(results)
    if results and isinstance(results[0], RunResult):
        text = raw_csv(results, agent_order)
    else:
        text = aggregate_csv(results)
    p = Path(path)
    with open(p, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return p


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _nice_ceiling(x: float) -> float:
    if x <= 0.0:
        return 1.0
    mag = 10.0 ** np.floor(np.log10(x))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if m * mag >= x:
            return float(m * mag)
    return float(10.0 * mag)


def svg_plot(aggs: Sequence[Aggregate], title: str = "Cumulative regret", max_points: int = 400) -> str:
    """Mean cumulative regret per agent with a +-1 standard error band."""
    if not aggs:
        raise ValueError("nothing to plot")
    W, H = 720, 440
    left, right, top, bottom = 70, 190, 40, 55
    pw, ph = W - left - right, H - top - bottom
    T = max(len(a.mean) for a in aggs)
    ymax = _nice_ceiling(max(float(np.max(a.mean + a.stderr)) for a in aggs))

    def sx(t: float) -> float:
        return left + pw * (t - 1) / max(T - 1, 1)

    def sy(y: float) -> float:
        return top + ph * (1.0 - y / ymax)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for k in range(6):
        yv = ymax * k / 5
        y = sy(yv)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{yv:g}</text>')
    for k in range(6):
        tv = 1 + (T - 1) * k / 5
        x = sx(tv)
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{round(tv)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{H - 12}" text-anchor="middle">round t</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.1f})">mean cumulative regret</text>')

    for i, a in enumerate(aggs):
        color = _PALETTE[i % len(_PALETTE)]
        n = len(a.mean)
        idx = np.unique(np.linspace(0, n - 1, min(n, max_points)).round().astype(int))
        ts = idx + 1
        lo = a.mean[idx] - a.stderr[idx]
        hi = a.mean[idx] + a.stderr[idx]
        band = [f"{sx(t):.2f},{sy(v):.2f}" for t, v in zip(ts, hi)]
        band += [f"{sx(t):.2f},{sy(v):.2f}" for t, v in zip(ts[::-1], lo[::-1])]
        out.append(f'<polygon points="{" ".join(band)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{sx(t):.2f},{sy(v):.2f}" for t, v in zip(ts, a.mean[idx]))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = top + 14 + 20 * i
        out.append(f'<line x1="{left + pw + 14}" y1="{ly}" x2="{left + pw + 38}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{left + pw + 44}" y="{ly + 4}">{escape(a.agent)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(aggs: Sequence[Aggregate], path: str | Path, title: str = "Cumulative regret") -> Path:
    p = Path(path)
    with open(p, "w", encoding="utf-8", newline="") as fh:
        fh.write(svg_plot(aggs, title))
    return p


def summary_lines(aggs: Sequence[Aggregate]) -> list[str]:
    width = max((len(a.agent) for a in aggs), default=5)
    lines = [f"{'agent':<{width}}  {'final mean':>12}  {'stderr':>9}  runs"]
    for a in aggs:
        lines.append(f"{a.agent:<{width}}  {a.mean[-1]:>12.4f}  {a.stderr[-1]:>9.4f}  {a.runs}")
    return lines
