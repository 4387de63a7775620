"""Minimal deterministic SVG charts (grouped bars, multi-line)."""

from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
WIDTH, HEIGHT = 720, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 150, 40, 70


def _f(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _nice_max(value: int) -> int:
    """Smallest multiple of a 1/2/5 step covering ``value`` in at most ten steps."""
    if value <= 5:
        return max(value, 1)
    mag = 1
    while True:
        for mult in (1, 2, 5):
            step = mult * mag
            top = -(-value // step) * step
            if top // step <= 10:
                return top
        mag *= 10


def _frame(title: str, ymax: int, ylabel: str) -> list[str]:
    plot_h = HEIGHT - TOP - BOTTOM
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH // 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="14" y="{_f(TOP + plot_h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_f(TOP + plot_h / 2)})">{escape(ylabel)}</text>',
    ]
    ticks = 5 if ymax >= 5 else ymax
    for i in range(ticks + 1):
        v = ymax * i / ticks
        y = TOP + plot_h - plot_h * i / ticks
        out.append(
            f'<line x1="{LEFT}" y1="{_f(y)}" x2="{WIDTH - RIGHT}" y2="{_f(y)}" stroke="#dddddd"/>'
            f'<text x="{LEFT - 6}" y="{_f(y + 4)}" text-anchor="end">{_f(v)}</text>'
        )
    out.append(
        f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{WIDTH - RIGHT}" y2="{TOP + plot_h}" stroke="#333333"/>'
    )
    return out


def _legend(names: list[str]) -> list[str]:
    out = []
    for i, name in enumerate(names):
        y = TOP + 16 * i
        color = PALETTE[i % len(PALETTE)]
        out.append(
            f'<rect x="{WIDTH - RIGHT + 12}" y="{y}" width="10" height="10" fill="{color}"/>'
            f'<text x="{WIDTH - RIGHT + 28}" y="{y + 9}">{escape(name)}</text>'
        )
    return out


def bar_chart(title: str, categories: list[str], groups: list[str], values: dict, ylabel: str = "") -> str:
    """Grouped bars; ``values[(category, group)]`` is the bar height."""
    ymax = _nice_max(max([values.get((c, g), 0) for c in categories for g in groups] + [1]))
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    out = _frame(title, ymax, ylabel)
    slot = plot_w / max(len(categories), 1)
    bar_w = slot * 0.8 / max(len(groups), 1)
    for ci, cat in enumerate(categories):
        x0 = LEFT + slot * ci + slot * 0.1
        for gi, group in enumerate(groups):
            v = values.get((cat, group), 0)
            h = plot_h * v / ymax
            out.append(
                f'<rect x="{_f(x0 + gi * bar_w)}" y="{_f(TOP + plot_h - h)}" width="{_f(bar_w)}" '
                f'height="{_f(h)}" fill="{PALETTE[gi % len(PALETTE)]}"><title>{escape(cat)} / '
                f"{escape(group)}: {v}</title></rect>"
            )
        out.append(
            f'<text x="{_f(LEFT + slot * (ci + 0.5))}" y="{TOP + plot_h + 16}" '
            f'text-anchor="middle">{escape(cat)}</text>'
        )
    out += _legend(groups)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_chart(title: str, labels: list[str], series: dict[str, list[int]], ylabel: str = "") -> str:
    """One polyline per series over shared x labels."""
    ymax = _nice_max(max([v for vals in series.values() for v in vals] + [1]))
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    out = _frame(title, ymax, ylabel)
    n = len(labels)
    dx = plot_w / (n - 1) if n > 1 else 0

    def xy(i: int, v: int) -> str:
        x = LEFT + (dx * i if n > 1 else plot_w / 2)
        return f"{_f(x)},{_f(TOP + plot_h - plot_h * v / ymax)}"

    every = max(1, (n + 11) // 12)
    for i, label in enumerate(labels):
        if i % every == 0 or i == n - 1:
            x = LEFT + (dx * i if n > 1 else plot_w / 2)
            out.append(
                f'<text x="{_f(x)}" y="{TOP + plot_h + 14}" text-anchor="end" '
                f'transform="rotate(-45 {_f(x)} {TOP + plot_h + 14})">{escape(label)}</text>'
            )
    names = list(series)
    for si, name in enumerate(names):
        pts = " ".join(xy(i, v) for i, v in enumerate(series[name]))
        color = PALETTE[si % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
    out += _legend(names)
    out.append("</svg>")
    return "\n".join(out) + "\n"
