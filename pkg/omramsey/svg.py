"""Minimal SVG line plots written as text."""

import typing as T
from html import escape

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#000000", "#9467bd", "#ff7f0e"]


def _ticks(low: float, high: float, count: int = 5) -> list[float]:
    if high == low:
        return [low]
    return [float(v) for v in np.linspace(low, high, count)]


class LinePlot:
    __slots__ = ["title", "x_label", "y_label", "width", "height", "margin", "series"]

    def __init__(
        self,
        title: str,
        x_label: str,
        y_label: str,
        width: int = 720,
        height: int = 440,
    ):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.width = width
        self.height = height
        self.margin = 60
        self.series: list[T.Tuple[str, np.ndarray, np.ndarray]] = []

    def add_series(self, label: str, x: T.Sequence[float], y: T.Sequence[float]):
        self.series.append(
            (label, np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        )

    def _bounds(self) -> T.Tuple[float, float, float, float]:
        xs = np.concatenate([s[1] for s in self.series])
        ys = np.concatenate([s[2] for s in self.series])
        x_low, x_high = float(xs.min()), float(xs.max())
        y_low, y_high = float(ys.min()), float(ys.max())
        if y_high == y_low:
            y_low, y_high = y_low - 0.5, y_high + 0.5
        if x_high == x_low:
            x_low, x_high = x_low - 0.5, x_high + 0.5
        return x_low, x_high, y_low, y_high

    def render(self) -> str:
        w, h, m = self.width, self.height, self.margin
        parts = [
            f'<svg version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" '
            'xmlns="http://www.w3.org/2000/svg" '
            'font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
            f'<text x="{w / 2:.1f}" y="24" text-anchor="middle" font-size="14">'
            f"{escape(self.title)}</text>",
        ]
        if not self.series:
            parts.append("</svg>")
            return "\n".join(parts) + "\n"

        x_low, x_high, y_low, y_high = self._bounds()

        def px(x: float) -> float:
            return m + (x - x_low) / (x_high - x_low) * (w - 2 * m)

        def py(y: float) -> float:
            return h - m - (y - y_low) / (y_high - y_low) * (h - 2 * m)

        parts.append(
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" '
            'fill="none" stroke="black"/>'
        )
        for x in _ticks(x_low, x_high):
            parts.append(
                f'<line x1="{px(x):.1f}" y1="{h - m}" '
                f'x2="{px(x):.1f}" y2="{h - m + 5}" '
                'stroke="black"/>'
            )
            parts.append(
                f'<text x="{px(x):.1f}" y="{h - m + 18}" text-anchor="middle">'
                f"{x:.4g}</text>"
            )
        for y in _ticks(y_low, y_high):
            parts.append(
                f'<line x1="{m - 5}" y1="{py(y):.1f}" x2="{m}" y2="{py(y):.1f}" '
                'stroke="black"/>'
            )
            parts.append(
                f'<text x="{m - 8}" y="{py(y) + 4:.1f}" text-anchor="end">'
                f"{y:.3g}</text>"
            )

        parts.append(
            f'<text x="{w / 2:.1f}" y="{h - 16}" text-anchor="middle">'
            f"{escape(self.x_label)}</text>"
        )
        parts.append(
            f'<text x="16" y="{h / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {h / 2:.1f})">{escape(self.y_label)}</text>'
        )

        for k, (label, x, y) in enumerate(self.series):
            color = COLORS[k % len(COLORS)]
            points = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" '
                'stroke-width="1.2"/>'
            )
            if len(self.series) > 1:
                ly = m + 14 + 16 * k
                parts.append(
                    f'<line x1="{w - m - 110}" y1="{ly - 4}" x2="{w - m - 90}" '
                    f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
                )
                parts.append(f'<text x="{w - m - 84}" y="{ly}">{escape(label)}</text>')

        parts.append("</svg>")
        return "\n".join(parts) + "\n"
