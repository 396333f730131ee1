import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import ndimage

sys.path.insert(0, str(Path(__file__).parent))

from skelforge import BinaryMask


def disc_array(h, w, cy, cx, r):
    yy, xx = np.mgrid[0:h, 0:w]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r


def disc(h, w, cy, cx, r) -> BinaryMask:
    return BinaryMask(disc_array(h, w, cy, cx, r))


def rectangle(h=14, w=46, top=2, left=3, rh=10, rw=40) -> BinaryMask:
    a = np.zeros((h, w), dtype=bool)
    a[top:top + rh, left:left + rw] = True
    return BinaryMask(a)


def annulus(h=32, w=32, cy=16, cx=16, outer=12, inner=5) -> BinaryMask:
    return BinaryMask(disc_array(h, w, cy, cx, outer)
                      & ~disc_array(h, w, cy, cx, inner))


def y_mask(size=96) -> BinaryMask:
    """Three fat arms meeting at a hub: skeleton decomposes into a Y."""
    a = np.zeros((size, size), dtype=bool)
    cy, cx = 52, 48
    for ang, ln in ((90, 34), (210, 30), (330, 30)):
        rad = math.radians(ang)
        for t in np.linspace(0, 1, 60):
            y = cy - t * ln * math.sin(rad)
            x = cx + t * ln * math.cos(rad)
            a |= disc_array(size, size, y, x, 7)
    return BinaryMask(a)


def random_blob(rng, size=96, discs=6, notch_prob=0.0, scale=1.0) -> BinaryMask:
    """Union of overlapping discs, optionally roughened with 1-px notches,
    holes filled, largest component kept."""
    m = np.zeros((size, size), dtype=bool)
    cy, cx = size // 2, size // 2
    r0 = int(rng.integers(10, 17) * scale)
    m |= disc_array(size, size, cy, cx, r0)
    centers = [(cy, cx, r0)]
    for _ in range(discs - 1):
        by, bx, br = centers[rng.integers(0, len(centers))]
        r = int(rng.integers(7, 15) * scale)
        ang = rng.uniform(0, 2 * np.pi)
        d = rng.uniform(0.5, 0.85) * (br + r)
        y = int(np.clip(by + d * np.sin(ang), r + 3, size - r - 4))
        x = int(np.clip(bx + d * np.cos(ang), r + 3, size - r - 4))
        m |= disc_array(size, size, y, x, r)
        centers.append((y, x, r))
    if notch_prob > 0:
        bg4 = ~m
        border = m & (np.roll(bg4, 1, 0) | np.roll(bg4, -1, 0)
                      | np.roll(bg4, 1, 1) | np.roll(bg4, -1, 1))
        ys, xs = np.nonzero(border)
        sel = rng.random(len(ys)) < notch_prob
        m[ys[sel], xs[sel]] = False
    m = ndimage.binary_fill_holes(m)
    labels, n = ndimage.label(m, structure=np.ones((3, 3)))
    if n > 1:
        sizes = ndimage.sum(m, labels, range(1, n + 1))
        m = labels == (1 + int(np.argmax(sizes)))
    return BinaryMask(m)


def random_mask(rng, h, w, p=0.5) -> BinaryMask:
    return BinaryMask(rng.random((h, w)) < p)


def raster_points(mask: BinaryMask):
    ys, xs = np.nonzero(mask.pixels)
    return [(int(x), int(y)) for y, x in zip(ys, xs)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
