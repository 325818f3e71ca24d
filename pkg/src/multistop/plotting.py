"""Dependency-free SVG charts for experiment reports."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 20, 40, 60
RUN_COLOR = "#1f77b4"
MEAN_COLOR = "#d62728"
REF_COLOR = "#2ca02c"


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


class _Axes:
    def __init__(self, xs, ys, log_y=False):
        self.log_y = log_y
        ys = [self._ty(y) for y in ys if not log_y or y > 0]
        self.x0, self.x1 = min(xs), max(xs)
        if self.x0 == self.x1:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        pad = 0.05 * (self.x1 - self.x0)
        self.x0, self.x1 = self.x0 - pad, self.x1 + pad
        self.y0, self.y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
        if self.y0 == self.y1:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5
        pad = 0.08 * (self.y1 - self.y0)
        self.y0, self.y1 = self.y0 - pad, self.y1 + pad

    def _ty(self, y):
        return math.log10(y) if self.log_y else y

    def px(self, x):
        return MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y):
        y = self._ty(y)
        return HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)


def _frame(ax: _Axes, title, xlabel, ylabel, xticks):
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    left, right = MARGIN_L, WIDTH - MARGIN_R
    top, bottom = MARGIN_T, HEIGHT - MARGIN_B
    out.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               f'fill="none" stroke="black"/>')
    for value, label in xticks:
        x = ax.px(value)
        out.append(f'<line x1="{x:.1f}" y1="{bottom}" x2="{x:.1f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{bottom + 18}" text-anchor="middle">{escape(label)}</text>')
    for t in _nice_ticks(ax.y0, ax.y1):
        y = HEIGHT - MARGIN_B - (t - ax.y0) / (ax.y1 - ax.y0) * (bottom - top)
        label = f"1e{t:g}" if ax.log_y else f"{t:g}"
        out.append(f'<line x1="{left - 5}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(top + bottom) / 2:.1f})">{escape(ylabel)}</text>')
    return out


def scatter_svg(groups, *, title="", xlabel="", ylabel="", labels=None, means=None, stds=None,
                references=None, log_y=False) -> str:
    """Per-run points grouped by x position, optional mean/std bars and reference marks.

    ``groups`` maps an x position to the list of run values at that position;
    ``means``/``stds``/``references`` map the same positions to scalars.
    """
    xs = sorted(groups)
    if not xs:
        raise ValueError("nothing to plot")
    ys = [v for x in xs for v in groups[x]]
    for extra in (means, references):
        ys += list((extra or {}).values())
    if means and stds:
        ys += [means[x] + stds[x] for x in means] + [means[x] - stds[x] for x in means]
    ax = _Axes(xs, ys, log_y)
    labels = labels or {}
    out = _frame(ax, title, xlabel, ylabel, [(x, labels.get(x, f"{x:g}")) for x in xs])
    span = ax.px(ax.x1) - ax.px(ax.x0)
    dx = 0.25 * span / (len(xs) + 1)
    for x in xs:
        for v in groups[x]:
            if log_y and v <= 0:
                continue
            out.append(f'<circle cx="{ax.px(x) - dx / 2:.1f}" cy="{ax.py(v):.1f}" r="3" '
                       f'fill="{RUN_COLOR}" fill-opacity="0.6"/>')
        if references and x in references:
            y = ax.py(references[x])
            out.append(f'<line x1="{ax.px(x) - dx:.1f}" y1="{y:.1f}" x2="{ax.px(x) + dx:.1f}" y2="{y:.1f}" '
                       f'stroke="{REF_COLOR}" stroke-width="2"/>')
        if means and x in means:
            m = means[x]
            cx = ax.px(x) + dx / 2
            if stds and x in stds and stds[x] > 0 and (not log_y or m - stds[x] > 0):
                ya, yb = ax.py(m - stds[x]), ax.py(m + stds[x])
                out.append(f'<line x1="{cx:.1f}" y1="{ya:.1f}" x2="{cx:.1f}" y2="{yb:.1f}" '
                           f'stroke="{MEAN_COLOR}" stroke-width="1.5"/>')
                for yy in (ya, yb):
                    out.append(f'<line x1="{cx - 4:.1f}" y1="{yy:.1f}" x2="{cx + 4:.1f}" y2="{yy:.1f}" '
                               f'stroke="{MEAN_COLOR}" stroke-width="1.5"/>')
            if not log_y or m > 0:
                out.append(f'<circle cx="{cx:.1f}" cy="{ax.py(m):.1f}" r="4" fill="{MEAN_COLOR}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def coefficient_plot(stats, top_records, reference=None, fixed=(), title="") -> str:
    """Best-k values of every free ``C^2`` with mean/std bars and reference marks."""
    n = stats.n_terms
    free = [i for i in range(n) if i not in set(fixed)]
    groups = {i + 1: [r.best_state.ope_sq[i] for r in top_records] for i in free}
    means = {i + 1: float(stats.ope_mean[i]) for i in free}
    stds = {i + 1: float(stats.ope_std[i]) for i in free}
    refs = {i + 1: float(reference[i]) for i in free} if reference is not None else None
    labels = {i + 1: f"C2_{i + 1}" for i in free}
    return scatter_svg(groups, title=title or f"best {stats.k} runs", xlabel="coefficient",
                       ylabel="value", labels=labels, means=means, stds=stds, references=refs)


def reward_plot(rewards_by_g, title="best reward per run") -> str:
    """Best rewards of every run against the coupling, log scale."""
    groups = {float(g): [float(r) for r in rs] for g, rs in rewards_by_g.items()}
    return scatter_svg(groups, title=title, xlabel="g", ylabel="best reward", log_y=True)


def write_svg(text: str, path) -> Path:
    path = Path(path)
    path.write_text(text)
    return path


__all__ = ["scatter_svg", "coefficient_plot", "reward_plot", "write_svg"]
