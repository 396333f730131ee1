"""Binary raster foundations: masks, contours, and the Euclidean distance field.

Conventions used throughout the toolkit:

* pixel coordinates are ``(x, y)`` with the origin at the top-left corner and
  y growing downward;
* numpy arrays are indexed ``[y, x]``;
* foreground connectivity is 8, background connectivity is 4;
* pixels outside the grid count as background.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import EmptyMask, MultipleComponents

_STRUCT8 = np.ones((3, 3), dtype=bool)

# Moore neighbourhood in clockwise order starting west, as (dy, dx).
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))


@dataclass(frozen=True)
class BinaryMask:
    """Row-major boolean grid; ``True`` marks foreground."""

    pixels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.pixels, dtype=bool)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("mask must be a 2-D grid with positive size")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        object.__setattr__(self, "pixels", a)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def area(self) -> int:
        """Foreground pixel count."""
        return int(self.pixels.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return (self.pixels.shape == other.pixels.shape
                and bool(np.array_equal(self.pixels, other.pixels)))

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))

    def save_png(self, path) -> None:
        """Write as single-channel PNG, 0 = background, 255 = foreground."""
        img = Image.fromarray(self.pixels.astype(np.uint8) * 255, mode="L")
        img.save(path, format="PNG")

    @classmethod
    def load_png(cls, path) -> "BinaryMask":
        """Load a single-channel PNG; any nonzero pixel is foreground."""
        img = Image.open(path).convert("L")
        return cls(np.asarray(img) > 0)

    @classmethod
    def from_points(cls, points, width: int, height: int) -> "BinaryMask":
        a = np.zeros((height, width), dtype=bool)
        for x, y in points:
            a[y, x] = True
        return cls(a)


@dataclass(frozen=True)
class Contour:
    """Ordered pixel chain along a mask boundary."""

    points: tuple
    closed: bool = True

    def __len__(self) -> int:
        return len(self.points)

    def total_length(self) -> float:
        """Polyline length, closing edge included when closed."""
        pts = self.points
        n = len(pts)
        if n < 2:
            return 0.0
        pairs = zip(pts, pts[1:] + (pts[0],) if self.closed else pts[1:])
        return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in pairs)


@dataclass(frozen=True)
class DistanceField:
    """Exact Euclidean distance to the nearest background pixel.

    ``values_sq`` holds exact integer squared distances; ``values`` is the
    float square root view.  Zero exactly on background.
    """

    values_sq: np.ndarray
    values: np.ndarray = field(init=False)

    def __post_init__(self):
        sq = np.ascontiguousarray(np.asarray(self.values_sq, dtype=np.int64))
        sq.setflags(write=False)
        object.__setattr__(self, "values_sq", sq)
        v = np.sqrt(sq.astype(np.float64))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values_sq.shape[0]

    @property
    def width(self) -> int:
        return self.values_sq.shape[1]

    def value_at(self, point) -> float:
        x, y = point
        return float(self.values[y, x])

    def sq_at(self, point) -> int:
        x, y = point
        return int(self.values_sq[y, x])


def connected_components(mask: BinaryMask, connectivity: int = 8) -> list:
    """Split the foreground into connected regions.

    Returns one mask per region, ordered by descending area; ties break on the
    top-left-most (smallest ``(y, x)``) pixel.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    structure = _STRUCT8 if connectivity == 8 else None
    labels, n = ndimage.label(mask.pixels, structure=structure)
    comps = []
    for i in range(1, n + 1):
        region = labels == i
        ys, xs = np.nonzero(region)
        order = np.lexsort((xs, ys))
        comps.append((-int(region.sum()), (int(ys[order[0]]), int(xs[order[0]])), region))
    comps.sort(key=lambda t: (t[0], t[1]))
    return [BinaryMask(region) for _, _, region in comps]


def fill_holes(mask: BinaryMask) -> BinaryMask:
    """Turn background regions not 4-connected to the border into foreground."""
    bg = ~np.pad(mask.pixels, 1, constant_values=False)
    labels, n = ndimage.label(bg)  # default structure = 4-connectivity
    border_labels = set(np.unique(np.r_[labels[0, :], labels[-1, :],
                                        labels[:, 0], labels[:, -1]]))
    border_labels.discard(0)
    filled = mask.pixels.copy()
    inner = labels[1:-1, 1:-1]
    hole = (inner > 0) & ~np.isin(inner, sorted(border_labels))
    filled[hole] = True
    return BinaryMask(filled)


def trace_boundary(mask: BinaryMask) -> Contour:
    """Moore boundary trace of a single foreground component, counterclockwise.

    Only the outer boundary is traced; hole boundaries are not visited.  On
    shapes with one-pixel-wide protrusions the trace may pass a pixel twice,
    which is inherent to Moore tracing.
    """
    if mask.area == 0:
        raise EmptyMask("cannot trace an empty mask")
    labels, n = ndimage.label(mask.pixels, structure=_STRUCT8)
    if n > 1:
        raise MultipleComponents(f"mask has {n} components")
    if mask.area == 1:
        ys, xs = np.nonzero(mask.pixels)
        return Contour(((int(xs[0]), int(ys[0])),), closed=True)

    g = np.pad(mask.pixels, 1, constant_values=False)
    ys, xs = np.nonzero(g)
    k = np.lexsort((xs, ys))[0]
    start = (int(ys[k]), int(xs[k]))

    # Canonical Moore tracing: scan the ring of the current pixel clockwise
    # starting just after the backtrack (background) pixel; the pixel examined
    # before the hit becomes the next backtrack.  The walk runs until the
    # (pixel, backtrack) state repeats; the contour is one lap of that cycle.
    # This visits every boundary pixel, including ones touching background
    # only diagonally.
    ring = {off: i for i, off in enumerate(_MOORE)}
    seq = []
    first_seen = {}
    p = start
    c = (start[0], start[1] - 1)  # west neighbour of the top-left-most pixel
    prev = None
    while (p, c, prev) not in first_seen:
        first_seen[(p, c, prev)] = len(seq)
        seq.append((p[1] - 1, p[0] - 1))
        base = ring[(c[0] - p[0], c[1] - p[1])]
        hit = None
        for i in range(1, 9):
            idx = (base + i) % 8
            dy, dx = _MOORE[idx]
            q = (p[0] + dy, p[1] + dx)
            if g[q]:
                # A diagonal hit whose following orthogonal neighbour is also
                # set would skip that elbow pixel; step to the elbow instead
                # (unless we just came from it) so every pixel touching
                # background gets visited exactly once per lap.
                if idx % 2 == 1:
                    oy, ox = _MOORE[(idx + 1) % 8]
                    e = (p[0] + oy, p[1] + ox)
                    if g[e] and e != prev:
                        q = e
                prev_idx = (base + i - 1) % 8
                hit = (q, (p[0] + _MOORE[prev_idx][0], p[1] + _MOORE[prev_idx][1]))
                break
        if hit is None:
            return Contour(tuple(seq), closed=True)
        prev = p
        p, c = hit
    points = seq[first_seen[(p, c, prev)]:]

    out = [points[0]]
    for pt in points[1:]:
        if pt != out[-1]:
            out.append(pt)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return Contour(tuple(out), closed=True)


def distance_transform(mask: BinaryMask) -> DistanceField:
    """Exact Euclidean distance transform; out-of-grid pixels are background."""
    padded = np.pad(mask.pixels, 1, constant_values=False)
    d = ndimage.distance_transform_edt(padded)
    sq = np.rint(d[1:-1, 1:-1] ** 2).astype(np.int64)
    return DistanceField(sq)
