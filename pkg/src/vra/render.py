"""Deterministic raster drawings of instances and candidate routes.

Images are palette PNGs drawn with Pillow.  Labels use a built-in 3x5 digit
font so the bytes never depend on installed fonts.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache

from PIL import Image, ImageDraw

from .errors import ConfigError
from .instance import Instance
from .solution import RouteSet

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)
NODE_COLOR = (70, 70, 70)
LABEL_COLOR = (20, 20, 20)

DEFAULT_PALETTE = (
    (31, 119, 180),
    (214, 39, 40),
    (44, 160, 44),
    (148, 103, 189),
    (255, 127, 14),
    (23, 190, 207),
)

_DIGITS = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "010", "010", "010"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}


@dataclass(frozen=True)
class RenderStyle:
    width: int = 1024
    height: int = 1024
    margin: int = 51
    depot_half: int = 10
    node_radius: int = 7
    line_width: int = 3
    font_scale: int = 3
    palette: tuple[tuple[int, int, int], ...] = field(default=DEFAULT_PALETTE)

    def style_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def check(self) -> None:
        marker = 2 * max(self.depot_half, self.node_radius) + 1
        if min(self.width, self.height) - 2 * self.margin < 4 * marker or self.margin < 0:
            raise ConfigError(f"viewport {self.width}x{self.height} with margin {self.margin} is too small for markers")
        if self.line_width < 1 or self.font_scale < 1:
            raise ConfigError("line_width and font_scale must be >= 1")


@dataclass(frozen=True)
class RenderedImage:
    bytes: bytes
    format: str = "png"

    @property
    def content_hash(self) -> str:
        return hashlib.sha256(self.bytes).hexdigest()


def to_pixel(x: float, y: float, extent: float, style: RenderStyle) -> tuple[float, float]:
    """World coordinates to pixel coordinates; larger y is drawn higher."""
    sx = (style.width - 1 - 2 * style.margin) / extent
    sy = (style.height - 1 - 2 * style.margin) / extent
    return style.margin + x * sx, style.height - 1 - style.margin - y * sy


def from_pixel(px: float, py: float, extent: float, style: RenderStyle) -> tuple[float, float]:
    sx = (style.width - 1 - 2 * style.margin) / extent
    sy = (style.height - 1 - 2 * style.margin) / extent
    return (px - style.margin) / sx, (style.height - 1 - style.margin - py) / sy


def _palette_image(style: RenderStyle) -> tuple[Image.Image, dict]:
    colors = [WHITE, BLACK, NODE_COLOR, LABEL_COLOR, *style.palette]
    index = {c: i for i, c in enumerate(colors)}
    flat = [v for c in colors for v in c]
    img = Image.new("P", (style.width, style.height), 0)
    img.putpalette(flat + [0] * (768 - len(flat)))
    return img, index


def _draw_label(draw: ImageDraw.ImageDraw, text: str, left: int, top: int, color: int, scale: int) -> None:
    for ci, ch in enumerate(text):
        rows = _DIGITS[ch]
        x0 = left + ci * 4 * scale
        for r, bits in enumerate(rows):
            for c, bit in enumerate(bits):
                if bit == "1":
                    x, y = x0 + c * scale, top + r * scale
                    draw.rectangle((x, y, x + scale - 1, y + scale - 1), fill=color)


def _draw(inst: Instance, routes, style: RenderStyle) -> bytes:
    style.check()
    img, idx = _palette_image(style)
    draw = ImageDraw.Draw(img)
    pts = [tuple(round(v) for v in to_pixel(p.x, p.y, inst.extent, style)) for p in inst.nodes]

    if routes is not None:
        if len(routes) > len(style.palette):
            raise ConfigError(f"palette has {len(style.palette)} colors, need {len(routes)}")
        for r, route in enumerate(routes):
            color = idx[style.palette[r]]
            valid = [v for v in route if 0 <= v < inst.n]
            for a, b in zip(valid, valid[1:]):
                if a != b:
                    draw.line((pts[a], pts[b]), fill=color, width=style.line_width)

    off = max(style.depot_half, style.node_radius) + 2
    for i, (x, y) in enumerate(pts):
        _draw_label(draw, str(i), x + off, y - off - 5 * style.font_scale, idx[LABEL_COLOR], style.font_scale)

    rad = style.node_radius
    for x, y in pts[1:]:
        draw.ellipse((x - rad, y - rad, x + rad, y + rad), fill=idx[NODE_COLOR])
    x, y = pts[0]
    h = style.depot_half
    draw.rectangle((x - h, y - h, x + h, y + h), fill=idx[BLACK])

    buf = io.BytesIO()
    img.save(buf, format="PNG", compress_level=6)
    return buf.getvalue()


@lru_cache(maxsize=2048)
def _cached_draw(inst: Instance, routes, style: RenderStyle) -> bytes:
    return _draw(inst, routes, style)


def render_instance(inst: Instance, style: RenderStyle = RenderStyle()) -> RenderedImage:
    return RenderedImage(_cached_draw(inst, None, style))


def render_solution(inst: Instance, rs: RouteSet | None, style: RenderStyle = RenderStyle()) -> RenderedImage:
    """Instance layer plus one polyline per route; invalid route sets still render."""
    if rs is None:
        return render_instance(inst, style)
    return RenderedImage(_cached_draw(inst, rs.routes, style))
