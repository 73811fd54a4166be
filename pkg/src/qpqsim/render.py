"""Plain-text (P3) pixmap rendering of database state grids."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .attack_nn import KNOWN_CLASS, UNKNOWN_CLASS

DARK_RED = (139, 0, 0)
GREY = (128, 128, 128)
LIGHT_PALETTE = (
    (255, 182, 193),
    (173, 216, 230),
    (144, 238, 144),
    (255, 255, 153),
    (221, 160, 221),
    (255, 218, 185),
    (175, 238, 238),
    (240, 230, 140),
    (216, 191, 216),
    (152, 251, 152),
    (255, 228, 196),
    (176, 196, 222),
)


def colorize(classes: np.ndarray, palette=LIGHT_PALETTE) -> np.ndarray:
    classes = np.asarray(classes)
    pal = np.asarray(palette, dtype=np.uint8)
    rgb = pal[classes % len(pal)]
    rgb[classes == KNOWN_CLASS] = DARK_RED
    rgb[classes == UNKNOWN_CLASS] = GREY
    return rgb


def ppm_text(classes: np.ndarray, palette=LIGHT_PALETTE) -> str:
    rgb = colorize(classes, palette)
    h, w = rgb.shape[:2]
    lines = ["P3", f"{w} {h}", "255"]
    lines += [" ".join(f"{r} {g} {b}" for r, g, b in row) for row in rgb]
    return "\n".join(lines) + "\n"


def render_grid(classes: np.ndarray, path: str | Path, palette=LIGHT_PALETTE) -> Path:
    path = Path(path)
    path.write_text(ppm_text(classes, palette))
    return path


def grid_shape(n: int) -> tuple[int, int]:
    """(width, height) of the most nearly square factorisation of n."""
    h = int(np.floor(np.sqrt(n)))
    while n % h:
        h -= 1
    return n // h, h
