"""Digital-topology helpers shared by thinning and graph code.

Works on (y, x)-indexed numpy grids; the public modules translate to the
(x, y) point convention at their boundaries.
"""
from __future__ import annotations

import numpy as np

# 8-neighbour offsets (dy, dx), clockwise from north-west.
OFFS8 = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))
_FOUR = frozenset(i for i, (dy, dx) in enumerate(OFFS8) if abs(dy) + abs(dx) == 1)


def _is_simple(code: int) -> bool:
    """Deletability test for the (8, 4) connectivity pairing.

    The centre pixel of a 3x3 neighbourhood encoded by ``code`` may be removed
    without changing topology iff its foreground neighbours form exactly one
    8-connected component and the background 4-neighbours form exactly one
    4-connected component within the neighbourhood.
    """
    fg = [i for i in range(8) if code >> i & 1]
    if not fg:
        return False

    def adj8(i, j):
        (y1, x1), (y2, x2) = OFFS8[i], OFFS8[j]
        return max(abs(y1 - y2), abs(x1 - x2)) <= 1

    seen = set()
    comps = 0
    for i in fg:
        if i in seen:
            continue
        comps += 1
        stack = [i]
        seen.add(i)
        while stack:
            u = stack.pop()
            for v in fg:
                if v not in seen and adj8(u, v):
                    seen.add(v)
                    stack.append(v)
    if comps != 1:
        return False

    bg = [i for i in range(8) if not code >> i & 1]

    def adj4(i, j):
        (y1, x1), (y2, x2) = OFFS8[i], OFFS8[j]
        return abs(y1 - y2) + abs(x1 - x2) == 1

    seen = set()
    comps = 0
    for i in bg:
        if i in seen or i not in _FOUR:
            continue
        comps += 1
        stack = [i]
        seen.add(i)
        while stack:
            u = stack.pop()
            for v in bg:
                if v not in seen and adj4(u, v):
                    seen.add(v)
                    stack.append(v)
    return comps == 1


SIMPLE_LUT = bytes(1 if _is_simple(c) else 0 for c in range(256))


def neighbour_code(grid: np.ndarray, y: int, x: int) -> int:
    """Bit code of the 8-neighbourhood on a padded grid."""
    c = 0
    for i, (dy, dx) in enumerate(OFFS8):
        if grid[y + dy, x + dx]:
            c |= 1 << i
    return c


def has_full_block(pixels: np.ndarray) -> bool:
    """True if any 2x2 block is entirely foreground."""
    a = pixels
    return bool(np.any(a[:-1, :-1] & a[1:, :-1] & a[:-1, 1:] & a[1:, 1:]))


def in_full_block(grid: np.ndarray, y: int, x: int) -> bool:
    for oy in (-1, 0):
        for ox in (-1, 0):
            if (grid[y + oy, x + ox] and grid[y + oy, x + ox + 1]
                    and grid[y + oy + 1, x + ox] and grid[y + oy + 1, x + ox + 1]):
                return True
    return False
