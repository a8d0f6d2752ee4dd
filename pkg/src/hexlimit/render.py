"""Deterministic SVG drawings of patches."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import ADir, WDir, cartesian_array
from .marking import DETERMINED, Patch
from .triangulation import FRAME_NORMAL, TriContext, bulk_line_levels
from .verify import BLUE_DIR, RED, RED_DIR, SPLIT_DIR, SPLIT_SIGN

_S3 = math.sqrt(3.0)
# cartesian unit vectors
_W_VEC = {WDir.W1: (0.5, 0.5 / _S3), WDir.W2: (0.0, 1.0 / _S3), WDir.W21: (-0.5, 0.5 / _S3)}
_A_VEC = {ADir.A1: (1.0, 0.0), ADir.A2: (-0.5, _S3 / 2), ADir.A12: (0.5, _S3 / 2)}
_CORNERS = [(0.5, 0.5 / _S3), (0.0, 1.0 / _S3), (-0.5, 0.5 / _S3),
            (-0.5, -0.5 / _S3), (0.0, -1.0 / _S3), (0.5, -0.5 / _S3)]


def _frame_unit(d: ADir) -> tuple[float, float]:
    n = FRAME_NORMAL[d]
    x, y = 0.5 * n.p, (n.p + 2 * n.q) / (2 * _S3)
    r = math.hypot(x, y)
    return x / r, y / r


class Mode(enum.Enum):
    FULL = "full"
    PARITY = "parity"
    OVERLAY = "overlay"


@dataclass(frozen=True)
class RenderStyle:
    mode: Mode = Mode.FULL
    epsilon: Fraction = Fraction(1, 8)
    scale: float = 24.0
    margin: float = 12.0
    white: str = "#ffffff"
    gray: str = "#9a9a9a"
    red: str = "#d62728"
    blue: str = "#1f5fbf"
    stripe: str = "#333333"
    outline: str = "#555555"
    outline_width: float = 0.6
    diameter_width: float = 1.6
    stripe_width: float = 2.4
    edge_width: float = 0.5  # overlay edges: width grows linearly with level
    max_level: int = 2

    def __post_init__(self):
        if not 0 < self.epsilon <= Fraction(1, 4):
            raise ValueError("epsilon must lie in (0, 1/4]")


def _num(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


class _Doc:
    def __init__(self, style: RenderStyle, xmin: float, ymax: float):
        self.style = style
        self.xmin, self.ymax = xmin, ymax
        self.parts: list[str] = []

    def pt(self, x: float, y: float) -> str:
        s = self.style
        return f"{_num((x - self.xmin) * s.scale + s.margin)},{_num((self.ymax - y) * s.scale + s.margin)}"

    def line(self, a, b, colour: str, width: float, extra: str = "") -> None:
        (x1, y1), (x2, y2) = (self.pt(*a).split(","), self.pt(*b).split(","))
        self.parts.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{colour}" '
            f'stroke-width="{_num(width)}"{extra}/>'
        )

    def polygon(self, pts, fill: str, stroke: str, width: float) -> None:
        coords = " ".join(self.pt(x, y) for x, y in pts)
        self.parts.append(
            f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}" stroke-width="{_num(width)}"/>'
        )


def _end(c, w: WDir, sign: int):
    v = _W_VEC[w]
    return (c[0] + sign * v[0], c[1] + sign * v[1])


def render_svg(patch: Patch, style: RenderStyle = RenderStyle()) -> str:
    if style.mode is not Mode.PARITY and patch.parity_only:
        raise ValueError("a parity-only patch can only be drawn in parity mode")
    centers = cartesian_array(patch.points)
    r = 1.0 / _S3
    xmin, xmax = centers[:, 0].min() - r, centers[:, 0].max() + r
    ymin, ymax = centers[:, 1].min() - r, centers[:, 1].max() + r
    width = _num((xmax - xmin) * style.scale + 2 * style.margin)
    height = _num((ymax - ymin) * style.scale + 2 * style.margin)
    doc = _Doc(style, xmin, ymax)
    eps = float(style.epsilon)

    for i, c in enumerate(centers):
        corners = [(c[0] + dx, c[1] + dy) for dx, dy in _CORNERS]
        if patch.status[i] != DETERMINED and style.mode is not Mode.OVERLAY:
            fill = "url(#undetermined)"
        elif style.mode is Mode.OVERLAY:
            fill = "#ffffff"
        else:
            fill = style.white if patch.parity[i] == 1 else style.gray
        doc.polygon(corners, fill, style.outline, style.outline_width)

    if style.mode is Mode.FULL:
        for i, c in enumerate(centers):
            s = int(patch.stripe[i])
            if s < 0:
                continue
            for w, colour in ((RED_DIR[s], style.red), (BLUE_DIR[s], style.blue)):
                w = WDir(int(w))
                doc.line(_end(c, w, -1), _end(c, w, +1), colour, style.diameter_width)
            if patch.split[i] >= 0:
                w = WDir(int(SPLIT_DIR[s]))
                for sign in (+1, -1):
                    col = int(patch.split[i]) ^ (0 if SPLIT_SIGN[s] == sign else 1)
                    doc.line(c, _end(c, w, sign), style.red if col == RED else style.blue,
                             style.diameter_width)
        _draw_stripes(doc, patch, centers, eps, style.stripe, style.stripe_width)

    if style.mode is Mode.OVERLAY:
        ctx = TriContext(_param_of(patch), patch.K)
        levels = bulk_line_levels(ctx, patch.points)
        for i, c in enumerate(centers):
            for d in ADir:
                lev = int(levels[i, d])
                if lev > style.max_level:
                    lev = style.max_level
                a = _A_VEC[d]
                doc.line((c[0] - a[0] / 2, c[1] - a[1] / 2), (c[0] + a[0] / 2, c[1] + a[1] / 2),
                         "#000000", style.edge_width * (1 + lev))
        _draw_stripes(doc, patch, centers, eps, "#8c8c8c", style.stripe_width * 1.5)

    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f"<!-- q={patch.qspec} K={patch.K} R={patch.R} freebits={patch.freebits} "
        f"mode={style.mode.value} epsilon={style.epsilon} -->\n"
        '<defs><pattern id="undetermined" width="6" height="6" patternUnits="userSpaceOnUse">'
        '<rect width="6" height="6" fill="#ffffff"/>'
        '<path d="M0,6 L6,0" stroke="#888888" stroke-width="1"/></pattern></defs>\n'
    )
    return head + "\n".join(doc.parts) + "\n</svg>\n"


def stripe_segment(center: tuple[float, float], direction: ADir, side: int, epsilon: float):
    """Endpoints of the stripe chord: the short diameter moved by epsilon
    toward the frame normal (side 1) or away from it (side 0)."""
    a = _A_VEC[direction]
    nx, ny = _frame_unit(direction)
    sgn = 1.0 if side == 1 else -1.0
    ox, oy = center[0] + sgn * epsilon * nx, center[1] + sgn * epsilon * ny
    return (ox - a[0] / 2, oy - a[1] / 2), (ox + a[0] / 2, oy + a[1] / 2)


def _draw_stripes(doc: _Doc, patch: Patch, centers, eps: float, colour: str, width: float) -> None:
    for i, c in enumerate(centers):
        s, side = int(patch.stripe[i]), int(patch.shift[i])
        if s < 0 or side < 0:
            continue
        p0, p1 = stripe_segment((c[0], c[1]), ADir(s), side, eps)
        doc.line(p0, p1, colour, width, ' stroke-linecap="butt"')


def _param_of(patch: Patch):
    from .qadic import parse_qspec

    return parse_qspec(patch.qspec)
