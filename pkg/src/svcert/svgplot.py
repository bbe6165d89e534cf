"""Minimal self-contained SVG charts for the CLI plot command.

Hand-rolled on purpose: the outputs are deterministic byte-for-byte given the
same data, which keeps them diff-able in tests.
"""

import math

__all__ = ["line_plot", "cost_risk_plot", "scatter_plot", "tube_plot"]

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 62, 16, 18, 46


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 5):
    if not math.isfinite(lo) or not math.isfinite(hi):
        return [0.0, 1.0]
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks or [lo, hi]


class _Canvas:
    def __init__(self, x_lo, x_hi, y_lo, y_hi, x_label, y_label, log_x=False):
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            y_hi = y_lo + 1.0
        pad = 0.04 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi
        self.log_x = log_x
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
        ]
        self._axes(x_label, y_label)

    def px(self, x):
        return _ML + (x - self.x_lo) / (self.x_hi - self.x_lo) * (_W - _ML - _MR)

    def py(self, y):
        return _H - _MB - (y - self.y_lo) / (self.y_hi - self.y_lo) * (_H - _MT - _MB)

    def _axes(self, x_label, y_label):
        p = self.parts
        x0, y0 = _ML, _H - _MB
        p.append(
            f'<line x1="{x0}" y1="{y0}" x2="{_W - _MR}" y2="{y0}" '
            'stroke="black" stroke-width="1"/>'
        )
        p.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{_MT}" '
            'stroke="black" stroke-width="1"/>'
        )
        if self.log_x:
            lo_d = math.floor(self.x_lo)
            hi_d = math.ceil(self.x_hi)
            xticks = [d for d in range(lo_d, hi_d + 1)]
            labels = [f"1e{d}" for d in xticks]
        else:
            xticks = _nice_ticks(self.x_lo, self.x_hi)
            labels = [_fmt(t) for t in xticks]
        for t, lab in zip(xticks, labels):
            if t < self.x_lo - 1e-12 or t > self.x_hi + 1e-12:
                continue
            px = self.px(t)
            p.append(
                f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 4}" '
                'stroke="black"/>'
            )
            p.append(
                f'<text x="{_fmt(px)}" y="{y0 + 17}" font-size="11" '
                f'text-anchor="middle">{lab}</text>'
            )
        for t in _nice_ticks(self.y_lo, self.y_hi):
            py = self.py(t)
            p.append(
                f'<line x1="{x0 - 4}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" '
                'stroke="black"/>'
            )
            p.append(
                f'<text x="{x0 - 7}" y="{_fmt(py + 4)}" font-size="11" '
                f'text-anchor="end">{_fmt(t)}</text>'
            )
        p.append(
            f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 10}" font-size="12" '
            f'text-anchor="middle">{x_label}</text>'
        )
        p.append(
            f'<text x="14" y="{(_MT + _H - _MB) / 2}" font-size="12" '
            f'text-anchor="middle" transform="rotate(-90 14 '
            f'{(_MT + _H - _MB) / 2})">{y_label}</text>'
        )

    def polyline(self, xs, ys, color, width=1.5, dash=None):
        pts = " ".join(
            f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys)
        )
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{extra}/>'
        )

    def polygon(self, xs, ys, color, opacity=0.25):
        pts = " ".join(
            f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys)
        )
        self.parts.append(
            f'<polygon points="{pts}" fill="{color}" fill-opacity="{opacity}" '
            'stroke="none"/>'
        )

    def segment(self, x, y1, y2, color, width=1.2):
        self.parts.append(
            f'<line x1="{_fmt(self.px(x))}" y1="{_fmt(self.py(y1))}" '
            f'x2="{_fmt(self.px(x))}" y2="{_fmt(self.py(y2))}" '
            f'stroke="{color}" stroke-width="{width}"/>'
        )

    def dot(self, x, y, color, r=2.4):
        self.parts.append(
            f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="{r}" '
            f'fill="{color}"/>'
        )

    def legend(self, entries):
        x, y = _ML + 10, _MT + 14
        for label, color in entries:
            self.parts.append(
                f'<line x1="{x}" y1="{y - 4}" x2="{x + 18}" y2="{y - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            self.parts.append(
                f'<text x="{x + 24}" y="{y}" font-size="11">{label}</text>'
            )
            y += 16

    def render(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_plot(ks, lowers, uppers):
    """Two bound curves against complexity."""
    cv = _Canvas(min(ks), max(ks), 0.0, max(max(uppers), 1e-9), "k", "risk")
    cv.polyline(ks, uppers, "#c62828")
    cv.polyline(ks, lowers, "#1565c0")
    cv.legend([("eps_upper", "#c62828"), ("eps_lower", "#1565c0")])
    return cv.render()


def cost_risk_plot(rhos, costs, lowers, uppers):
    """Cost curve with certified-risk bars on a log relaxation axis."""
    xs = [math.log10(r) for r in rhos]
    y_hi = max(max(costs), max(uppers))
    cv = _Canvas(min(xs), max(xs), 0.0, y_hi, "rho", "cost / risk", log_x=True)
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    cv.polyline([xs[i] for i in order], [costs[i] for i in order], "#2e7d32")
    for i in order:
        cv.segment(xs[i], lowers[i], uppers[i], "#c62828")
        cv.dot(xs[i], costs[i], "#2e7d32")
    cv.legend([("cost", "#2e7d32"), ("risk interval", "#c62828")])
    return cv.render()


def scatter_plot(s_stars, risks, lowers, uppers):
    """Per-trial (complexity, risk) dots with the bound curves they obey."""
    ks = sorted(set(s_stars))
    lo_by_k = {}
    up_by_k = {}
    for k, lo, up in zip(s_stars, lowers, uppers):
        lo_by_k[k] = lo
        up_by_k[k] = up
    y_hi = max(max(risks), max(uppers))
    cv = _Canvas(min(ks), max(ks), 0.0, y_hi, "complexity", "empirical risk")
    cv.polyline(ks, [up_by_k[k] for k in ks], "#c62828", dash="4 3")
    cv.polyline(ks, [lo_by_k[k] for k in ks], "#1565c0", dash="4 3")
    for k, r in zip(s_stars, risks):
        cv.dot(k, r, "#1565c0")
    cv.legend([("eps_upper", "#c62828"), ("eps_lower", "#1565c0")])
    return cv.render()


def tube_plot(m, y, grid, centers, tube):
    """Data scatter with the regression center curve and its band."""
    y_lo = min(min(y), min(c - tube for c in centers))
    y_hi = max(max(y), max(c + tube for c in centers))
    cv = _Canvas(min(m), max(m), y_lo, y_hi, "m", "y")
    band_x = list(grid) + list(reversed(grid))
    band_y = [c + tube for c in centers] + [c - tube for c in reversed(centers)]
    cv.polygon(band_x, band_y, "#90caf9")
    for xi, yi in zip(m, y):
        cv.dot(xi, yi, "#616161", r=1.6)
    cv.polyline(grid, centers, "#c62828", width=2.0)
    cv.legend([("center", "#c62828"), ("tube", "#90caf9")])
    return cv.render()
