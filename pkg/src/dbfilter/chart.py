"""Convergence chart as a dependency-free, byte-deterministic SVG."""

from __future__ import annotations

from html import escape

from .results import ResultRow, group_runs

WIDTH, HEIGHT = 640, 400
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 60, 150, 20, 50
COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def preset_family(preset: str) -> str:
    return preset.split("-", 1)[0]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_chart(rows: list[ResultRow], title: str | None = None) -> str:
    """Converged nodes per round, one polyline per run."""
    if not rows:
        raise ValueError("no rows to chart")
    families = {preset_family(r.preset) for r in rows}
    if len(families) > 1:
        raise ValueError(f"rows mix preset families: {', '.join(sorted(families))}")
    runs = group_runs(rows)
    max_round = max(1, max(r.round for r in rows))
    max_y = max(1, max(r.converged_nodes for r in rows))
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x):
        return MARGIN_LEFT + plot_w * x / max_round

    def sy(y):
        return MARGIN_TOP + plot_h * (1 - y / max_y)

    seeds_per_preset = {}
    for preset, _, seed in runs:
        seeds_per_preset.setdefault(preset, set()).add(seed)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    x0, y0 = sx(0), sy(0)
    out.append(
        f'<path d="M{_fmt(x0)},{_fmt(sy(max_y))} L{_fmt(x0)},{_fmt(y0)} L{_fmt(sx(max_round))},{_fmt(y0)}" '
        'stroke="black" fill="none"/>'
    )
    for t in range(5):
        xv = round(max_round * t / 4)
        yv = round(max_y * t / 4)
        out.append(f'<text x="{_fmt(sx(xv))}" y="{_fmt(y0 + 16)}" text-anchor="middle">{xv}</text>')
        out.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(sy(yv) + 4)}" text-anchor="end">{yv}</text>')
    out.append(f'<text x="{_fmt(MARGIN_LEFT + plot_w / 2)}" y="{HEIGHT - 12}" text-anchor="middle">round</text>')
    out.append(
        f'<text x="16" y="{_fmt(MARGIN_TOP + plot_h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_fmt(MARGIN_TOP + plot_h / 2)})">converged nodes</text>'
    )
    for i, ((preset, _, seed), group) in enumerate(runs.items()):
        color = COLORS[i % len(COLORS)]
        label = preset if len(seeds_per_preset[preset]) == 1 else f"{preset} seed {seed}"
        points = " ".join(f"{_fmt(sx(r.round))},{_fmt(sy(r.converged_nodes))}" for r in group)
        out.append(
            f'<polyline data-label="{escape(label)}" points="{points}" '
            f'fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = MARGIN_TOP + 10 + 18 * i
        lx = WIDTH - MARGIN_RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
