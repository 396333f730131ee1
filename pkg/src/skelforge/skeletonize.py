"""Initial skeleton extraction and the pruning-strength candidate ladder.

The skeleton of a mask is assembled in stages:

1. a topology-preserving parallel thinning of the mask, anchored at local
   maxima of the distance field, yields the connected core;
2. branches are grown from salient convex contour vertices (ranked by curve
   evolution) down the distance-field ridge onto the core, so every grown
   branch terminates exactly at the boundary vertex that generates it;
3. a completion pass adds short ridge paths at uncovered spots, and a trim
   pass shortens low-radius tips, until the maximal-disc reconstruction area
   sits just below the shape area.  Stage 3 keeps the initial skeleton
   structurally complete while pruning can only move the reconstructed area
   further from the shape area, which keeps the error/simplicity trade-off
   monotone along the ladder.

Candidate ladders then follow the curve-evolution schedule: the branch grown
from vertex ``v`` survives at pruning level ``k`` iff ``v`` is among the ``k``
surviving polygon vertices.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._topo import OFFS8, SIMPLE_LUT, in_full_block, neighbour_code
from .errors import ContourTooShort, EmptyMask, MultipleComponents
from .raster import (BinaryMask, Contour, DistanceField, distance_transform,
                     fill_holes, trace_boundary)

DEFAULT_K_MIN = 4
DEFAULT_K_MAX = 30

# Completeness band targeted by the initial skeleton: the reconstruction area
# is pushed into [COMPLETENESS_TARGET * shape area, shape area).
COMPLETENESS_TARGET = 0.97

# A contour vertex owns a grown branch when its relevance stands out against
# the median relevance of the simplified polygon (so uniformly curved outlines
# such as discs grow nothing), or when the turn measured over a +-(n/24) arc
# marks it as a strong corner regardless of polygon crowding.
_REL_CONTRAST = 2.0
_REL_FLOOR = 0.005
_TURN_RESCUE = math.radians(60.0)


@dataclass(frozen=True)
class SkeletonRaster:
    """One-pixel-wide skeleton with maximal-disc radii attached.

    ``points`` are (x, y) tuples; ``radii_sq`` maps each point to the exact
    integer squared radius (the squared distance-field value at the point).
    """

    width: int
    height: int
    points: frozenset
    radii_sq: dict

    def __post_init__(self):
        object.__setattr__(self, "points", frozenset(self.points))

    @property
    def radii(self) -> dict:
        return {p: math.sqrt(r) for p, r in self.radii_sq.items()}

    def sorted_points(self) -> list:
        return sorted(self.points, key=lambda p: (p[1], p[0]))

    def to_array(self) -> np.ndarray:
        a = np.zeros((self.height, self.width), dtype=bool)
        for x, y in self.points:
            a[y, x] = True
        return a

    def to_mask(self) -> BinaryMask:
        return BinaryMask(self.to_array())

    def subset(self, keep) -> "SkeletonRaster":
        keep = frozenset(keep)
        return SkeletonRaster(self.width, self.height, keep,
                              {p: self.radii_sq[p] for p in keep})

    def __eq__(self, other):
        if not isinstance(other, SkeletonRaster):
            return NotImplemented
        return (self.width, self.height, self.points) == \
            (other.width, other.height, other.points)

    def __hash__(self):
        return hash((self.width, self.height, self.points))


@dataclass(frozen=True)
class DcePolygon:
    """Simplified-polygon snapshot of one curve-evolution step."""

    vertices: tuple          # (x, y) points, contour order
    relevance: dict          # vertex -> current relevance measure


@dataclass
class CandidateLadder:
    """Skeleton candidates from most complex (step 0) to simplest."""

    steps: list = field(default_factory=list)
    dce_k: dict = field(default_factory=dict)
    # vertex-owned leaf branches: list of (survival level k, frozen pixel set)
    branch_levels: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)


# --------------------------------------------------------------------------
# discrete curve evolution


def _relevance(pts, prv, nxt, i, total):
    a, b, c = pts[prv[i]], pts[i], pts[nxt[i]]
    d1 = (b[0] - a[0], b[1] - a[1])
    d2 = (c[0] - b[0], c[1] - b[1])
    n1 = math.hypot(*d1)
    n2 = math.hypot(*d2)
    if n1 == 0.0 or n2 == 0.0:
        return 0.0
    cosb = max(-1.0, min(1.0, (d1[0] * d2[0] + d1[1] * d2[1]) / (n1 * n2)))
    beta = math.acos(cosb)
    l1 = n1 / total
    l2 = n2 / total
    return beta * l1 * l2 / (l1 + l2)


class _DceEngine:
    """Greedy min-relevance vertex removal with lazy-heap updates."""

    def __init__(self, contour: Contour, k_min: int):
        pts = contour.points
        n = len(pts)
        if n < max(3, k_min):
            raise ContourTooShort(f"contour has {n} points, need >= {max(3, k_min)}")
        self.pts = pts
        self.n = n
        self.total = contour.total_length()
        self.nxt = list(range(1, n)) + [0]
        self.prv = [n - 1] + list(range(n - 1))
        self.alive = [True] * n
        self.rel = [_relevance(pts, self.prv, self.nxt, i, self.total)
                    for i in range(n)]
        # survival level: smallest vertex count at which the vertex is alive
        self.alive_min = [k_min] * n
        self.removal_order = []
        heap = [(self.rel[i], i) for i in range(n)]
        heapq.heapify(heap)
        count = n
        stamp = list(self.rel)
        snapshots = []
        while count > k_min:
            r, i = heapq.heappop(heap)
            if not self.alive[i] or r != stamp[i]:
                continue
            self.alive[i] = False
            self.alive_min[i] = count
            self.removal_order.append(i)
            p, q = self.prv[i], self.nxt[i]
            self.nxt[p] = q
            self.prv[q] = p
            count -= 1
            for j in (p, q):
                stamp[j] = _relevance(pts, self.prv, self.nxt, j, self.total)
                heapq.heappush(heap, (stamp[j], j))
        self.final_rel = stamp

    def polygon_at(self, k: int):
        """Alive index list and prev/next maps of the k-vertex polygon."""
        idxs = [i for i in range(self.n) if self.alive_min[i] <= k]
        prv, nxt = {}, {}
        for a, b in zip(idxs, idxs[1:] + idxs[:1]):
            nxt[a] = b
            prv[b] = a
        return idxs, prv, nxt


def dce_evolve(contour: Contour, k_min: int) -> list:
    """Simplify a closed contour by repeated min-relevance vertex removal.

    Returns one :class:`DcePolygon` per evolution step, starting with the
    initial polygon and ending with the ``k_min``-vertex polygon.
    """
    if not contour.closed:
        raise ValueError("dce_evolve needs a closed contour")
    if k_min < 3:
        raise ValueError("k_min must be >= 3")
    eng = _DceEngine(contour, k_min)
    pts = eng.pts
    n = eng.n
    # replay the recorded removal order to snapshot each step
    nxt = list(range(1, n)) + [0]
    prv = [n - 1] + list(range(n - 1))
    alive = [True] * n
    total = eng.total

    def snapshot():
        verts = tuple(pts[i] for i in range(n) if alive[i])
        rel = {pts[i]: _relevance(pts, prv, nxt, i, total)
               for i in range(n) if alive[i]}
        return DcePolygon(verts, rel)

    out = [snapshot()]
    for i in eng.removal_order:
        alive[i] = False
        p, q = prv[i], nxt[i]
        nxt[p] = q
        prv[q] = p
        out.append(snapshot())
    return out


# --------------------------------------------------------------------------
# thinning


def _peak_anchors(dsq: np.ndarray) -> np.ndarray:
    mx = ndimage.maximum_filter(dsq, size=3, mode="constant", cval=0)
    return (dsq > 0) & (dsq == mx)


def _guo_hall(mask: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Two-subiteration parallel thinning, never removing anchor pixels."""
    g = np.pad(mask, 1, constant_values=False)
    a = np.pad(anchors, 1, constant_values=False)
    changed = True
    while changed:
        changed = False
        for odd in (True, False):
            n = g[:-2, 1:-1]; ne = g[:-2, 2:]; e = g[1:-1, 2:]; se = g[2:, 2:]
            s = g[2:, 1:-1]; sw = g[2:, :-2]; w = g[1:-1, :-2]; nw = g[:-2, :-2]
            c = ((~n & (ne | e)).astype(np.uint8) + (~e & (se | s)).astype(np.uint8)
                 + (~s & (sw | w)).astype(np.uint8) + (~w & (nw | n)).astype(np.uint8))
            n1 = ((nw | n).astype(np.uint8) + (ne | e).astype(np.uint8)
                  + (se | s).astype(np.uint8) + (sw | w).astype(np.uint8))
            n2 = ((n | ne).astype(np.uint8) + (e | se).astype(np.uint8)
                  + (s | sw).astype(np.uint8) + (w | nw).astype(np.uint8))
            nmin = np.minimum(n1, n2)
            if odd:
                cond = ~((n | ne | ~se) & e)
            else:
                cond = ~((s | sw | ~nw) & w)
            rem = (g[1:-1, 1:-1] & (c == 1) & (nmin >= 2) & (nmin <= 3)
                   & cond & ~a[1:-1, 1:-1])
            if rem.any():
                g[1:-1, 1:-1] &= ~rem
                changed = True
    return g[1:-1, 1:-1]


def _cleanup_thin(grid: np.ndarray, dsq: np.ndarray) -> np.ndarray:
    """Reduce to a minimal thin set: dissolve 2x2 blocks and redundant corner
    pixels (degree-2 pixels whose two neighbours touch each other), removing
    simple non-endpoint pixels lowest radius first."""
    g = np.pad(grid, 1, constant_values=False)
    dp = np.pad(dsq, 1, constant_values=0)

    def redundant_corner(y, x, code):
        if bin(code).count("1") != 2:
            return False
        ns = [(y + dy, x + dx) for i, (dy, dx) in enumerate(OFFS8) if code >> i & 1]
        (ay, ax), (by, bx) = ns
        return max(abs(ay - by), abs(ax - bx)) <= 1

    changed = True
    while changed:
        changed = False
        ys, xs = np.nonzero(g)
        cand = sorted((int(dp[y, x]), y, x) for y, x in zip(ys, xs))
        for d, y, x in cand:
            if not g[y, x]:
                continue
            code = neighbour_code(g, y, x)
            deg = bin(code).count("1")
            if deg <= 1 or not SIMPLE_LUT[code]:
                continue
            if in_full_block(g, y, x) or redundant_corner(y, x, code):
                g[y, x] = False
                changed = True
    return g[1:-1, 1:-1]


def _climb_path(start_yx, skel: np.ndarray, dsq: np.ndarray):
    """Deterministic least-cost ridge path from a pixel onto the skeleton.

    Entering pixel ``q`` costs ``hmax - dsq[q] + 1``, so the path hugs the
    distance ridge; ties resolve lexicographically.  The goal is the first
    skeleton-adjacent pixel popped; since all path predecessors pop earlier,
    the returned path touches the skeleton only at its last pixel, so grown
    paths never create cycles.  Returns (y, x) pixels ordered from the
    attachment pixel down to the start, or ``None`` if the start already
    touches the skeleton.
    """
    h, w = dsq.shape
    hmax = int(dsq.max())
    sy, sx = start_yx

    def ring_code(y, x):
        c = 0
        for i, (dy, dx) in enumerate(OFFS8):
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and skel[ny, nx]:
                c |= 1 << i
        return c

    def state(y, x):
        """'goal' = touches the skeleton on exactly one side (attaching here
        cannot close a cycle); 'blocked' = on or unsafely touching the
        skeleton; 'free' otherwise."""
        if skel[y, x]:
            return "blocked"
        code = ring_code(y, x)
        if code == 0:
            return "free"
        return "goal" if SIMPLE_LUT[code] else "blocked"

    if state(sy, sx) != "free":
        return None
    dist = {(sy, sx): 0}
    prev = {}
    heap = [(0, sy, sx)]
    goal = None
    while heap:
        d, y, x = heapq.heappop(heap)
        if d > dist.get((y, x), 1 << 62):
            continue
        st = state(y, x)
        if st == "goal":
            goal = (y, x)
            break
        if st == "blocked" and (y, x) != (sy, sx):
            continue
        for dy, dx in OFFS8:
            ny, nx = y + dy, x + dx
            if not (0 <= ny < h and 0 <= nx < w) or dsq[ny, nx] <= 0:
                continue
            if skel[ny, nx]:
                continue
            nd = d + (hmax - int(dsq[ny, nx]) + 1)
            if nd < dist.get((ny, nx), 1 << 62):
                dist[(ny, nx)] = nd
                prev[(ny, nx)] = (y, x)
                heapq.heappush(heap, (nd, ny, nx))
    if goal is None:
        return []
    path = [goal]
    p = goal
    while p != (sy, sx):
        p = prev[p]
        path.append(p)
    return path


# --------------------------------------------------------------------------
# reconstruction-area bookkeeping for the completeness band

_STAMPS = {}


def _stamp(rsq: int) -> np.ndarray:
    st = _STAMPS.get(rsq)
    if st is None:
        r = math.isqrt(rsq)
        yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
        st = (yy * yy + xx * xx) <= rsq
        _STAMPS[rsq] = st
    return st


class _CoverCounter:
    """Multiset union of discs with O(disc) add/remove and exact area."""

    def __init__(self, shape):
        self.counts = np.zeros(shape, dtype=np.int32)
        self.area = 0

    def _views(self, y, x, rsq):
        h, w = self.counts.shape
        r = math.isqrt(rsq)
        st = _stamp(rsq)
        y0, x0 = y - r, x - r
        sy0, sx0 = max(0, -y0), max(0, -x0)
        sy1 = st.shape[0] - max(0, y0 + st.shape[0] - h)
        sx1 = st.shape[1] - max(0, x0 + st.shape[1] - w)
        view = self.counts[max(0, y0):min(h, y + r + 1), max(0, x0):min(w, x + r + 1)]
        return view, st[sy0:sy1, sx0:sx1]

    def add(self, y, x, rsq):
        view, st = self._views(y, x, rsq)
        self.area += int((st & (view == 0)).sum())
        view += st

    def remove(self, y, x, rsq):
        view, st = self._views(y, x, rsq)
        view -= st
        self.area -= int((st & (view == 0)).sum())


# --------------------------------------------------------------------------
# salient-vertex selection


def _signed_turn(a, b, c, sign):
    d1 = (b[0] - a[0], b[1] - a[1])
    d2 = (c[0] - b[0], c[1] - b[1])
    n1 = math.hypot(*d1)
    n2 = math.hypot(*d2)
    if n1 == 0.0 or n2 == 0.0:
        return 0.0, -1.0, n1, n2
    cosb = max(-1.0, min(1.0, (d1[0] * d2[0] + d1[1] * d2[1]) / (n1 * n2)))
    beta = math.acos(cosb)
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    return beta, sign * cross, n1, n2


def _salient_vertices(contour: Contour, eng: _DceEngine, k_ref: int):
    """Convex vertices of the level-``k_ref`` polygon that own a branch.

    A vertex qualifies when its relevance stands out against the polygon's
    median, or when the turn over a +-(n/24) contour arc marks a strong
    corner.  Returns (alive_min, contour index) pairs, best first, after
    suppressing candidates within one support-arc of a better one.
    """
    pts = contour.points
    n = len(pts)
    total = eng.total
    area2 = sum(pts[i][0] * pts[(i + 1) % n][1] - pts[(i + 1) % n][0] * pts[i][1]
                for i in range(n))
    sign = 1.0 if area2 > 0 else -1.0
    idxs, prv, nxt = eng.polygon_at(k_ref)
    if len(idxs) < 3:
        return []
    support = max(3, n // 24)
    rels = {}
    for i in idxs:
        beta, conv, n1, n2 = _signed_turn(pts[prv[i]], pts[i], pts[nxt[i]], sign)
        rel = 0.0
        if n1 > 0.0 and n2 > 0.0:
            rel = beta * (n1 / total) * (n2 / total) / ((n1 + n2) / total)
        rels[i] = (rel, conv)
    med = sorted(r for r, _ in rels.values())[len(rels) // 2]
    thr = max(_REL_FLOOR, _REL_CONTRAST * med)

    def qualifies(i):
        rel, conv = rels[i]
        if conv <= 0:
            return False
        if rel >= thr:
            return True
        wide, wconv, _, _ = _signed_turn(pts[(i - support) % n], pts[i],
                                         pts[(i + support) % n], sign)
        return wconv > 0 and wide >= _TURN_RESCUE

    cands = sorted((eng.alive_min[i], i) for i in idxs if qualifies(i))
    kept = []
    for am, i in cands:
        if all(min((i - j) % n, (j - i) % n) > support for _, j in kept):
            kept.append((am, i))
    return kept


# --------------------------------------------------------------------------
# skeleton assembly


def _leaf_tips(grid: np.ndarray):
    """(radius-sq, y, x) of degree<=1 pixels on a padded grid."""
    ys, xs = np.nonzero(grid)
    tips = []
    for y, x in zip(ys, xs):
        if bin(neighbour_code(grid, y, x)).count("1") <= 1:
            tips.append((y, x))
    return tips


def _build_skeleton(mask: BinaryMask, k_min: int, k_max: int):
    """Core + grown branches + completeness band.

    Returns the skeleton array, the distance field, the tip-level map
    {(y, x) tip pixel -> survival level}, and the contour.
    """
    if mask.area == 0:
        raise EmptyMask("cannot skeletonize an empty mask")
    labels, ncomp = ndimage.label(mask.pixels, structure=np.ones((3, 3)))
    if ncomp > 1:
        raise MultipleComponents(f"mask has {ncomp} components")

    dfield = distance_transform(mask)
    dsq = dfield.values_sq
    anchors = _peak_anchors(dsq)
    skel = _cleanup_thin(_guo_hall(mask.pixels, anchors), dsq)

    contour = trace_boundary(mask)
    eng = None
    if len(contour) >= max(3, k_min):
        eng = _DceEngine(contour, k_min)
        k_ref = min(k_max, len(contour))
        for am, i in _salient_vertices(contour, eng, k_ref):
            x, y = contour.points[i]
            path = _climb_path((y, x), skel, dsq)
            if path:
                for p in path:
                    skel[p] = True
        skel = _cleanup_thin(skel, dsq)

    # Branch survival levels are judged now, while branch tips still touch
    # their generating boundary features; every pixel of a leaf branch
    # remembers its level so later trimming cannot orphan the mapping.
    pixel_levels = {}
    if eng is not None:
        pixel_levels = _branch_pixel_levels(skel, dsq, eng, contour)

    # completeness band: push the reconstruction area into
    # [COMPLETENESS_TARGET * area, area).  Trimming only applies when the
    # ladder will actually prune something; otherwise the sequence is constant
    # and the band does not matter.
    area = mask.area
    cover = _CoverCounter(mask.pixels.shape)
    for y, x in zip(*np.nonzero(skel)):
        cover.add(int(y), int(x), int(dsq[y, x]))

    prunable = any(lv > k_min for lv in pixel_levels.values())

    def trim_to_deficit():
        guard = 0
        while cover.area >= area and int(skel.sum()) > 1 and guard < 20000:
            guard += 1
            tips = [(int(dsq[y, x]), y, x) for y, x in _leaf_tips(skel)]
            if not tips:
                break
            _, y, x = min(tips)
            skel[y, x] = False
            cover.remove(y, x, int(dsq[y, x]))

    if prunable:
        trim_to_deficit()

    target = COMPLETENESS_TARGET * area
    guard = 0
    skipped = np.zeros_like(mask.pixels)
    while cover.area < target and guard < 4000:
        guard += 1
        unc = mask.pixels & (cover.counts == 0) & ~skipped
        ys, xs = np.nonzero(unc)
        if len(ys) == 0:
            break
        k = np.lexsort((xs, ys, -dsq[ys, xs]))[0]
        u = (int(ys[k]), int(xs[k]))
        path = _climb_path(u, skel, dsq)
        if not path:
            skipped[u] = True
            continue
        # accept the longest prefix (attachment pixel outward) that keeps the
        # reconstruction area strictly below the shape area
        accepted = []
        for p in path:
            cover.add(p[0], p[1], int(dsq[p]))
            if cover.area >= area:
                cover.remove(p[0], p[1], int(dsq[p]))
                break
            accepted.append(p)
        if not accepted:
            skipped[u] = True
            continue
        for p in accepted:
            skel[p] = True
        if len(accepted) < len(path):
            skipped[u] = True

    # final thinness pass; keep the cover bookkeeping in sync and re-trim if
    # the cleanup nudged the area back over the shape area
    cleaned = _cleanup_thin(skel, dsq)
    removed = skel & ~cleaned
    for y, x in zip(*np.nonzero(removed)):
        cover.remove(int(y), int(x), int(dsq[y, x]))
    skel = cleaned
    if prunable:
        trim_to_deficit()

    return skel, dfield, eng, contour, pixel_levels


def _tip_level(eng: _DceEngine, contour: Contour, tip_xy, rsq: int) -> int:
    """Survival level of a leaf-branch tip: the smallest ``alive_min`` among
    the contour vertices in the tip's tangency window (nearest boundary points
    within r + 1.5 of the tip)."""
    tx, ty = tip_xy
    r = math.sqrt(max(rsq, 1)) + 1.5
    best = None
    for i, (x, y) in enumerate(contour.points):
        if (x - tx) ** 2 + (y - ty) ** 2 <= r * r:
            am = eng.alive_min[i]
            if best is None or am < best:
                best = am
    if best is None:
        # fall back to the single nearest contour point
        i = min(range(len(contour.points)),
                key=lambda j: (contour.points[j][0] - tx) ** 2
                + (contour.points[j][1] - ty) ** 2)
        best = eng.alive_min[i]
    return best


def _branch_pixel_levels(skel: np.ndarray, dsq: np.ndarray, eng: _DceEngine,
                         contour: Contour) -> dict:
    """Survival level for every pixel of every leaf branch of ``skel``.

    The level of a branch is its tip's tangency-window level; interior pixels
    and the tip carry it (junction terminals stay unmapped).  Keys are (x, y).
    """
    from .graph import decompose
    raster = _raster_from_grid_levels(skel, dsq)
    graph = decompose(raster)
    eps = {p for p, kind in graph.nodes if kind == "endpoint"}
    out = {}
    for br in graph.branches:
        if br.closed:
            continue
        a, b = br.path[0], br.path[-1]
        if a in eps and b not in eps:
            tip, inner = a, br.path[:-1]
        elif b in eps and a not in eps:
            tip, inner = b, br.path[1:]
        else:
            continue
        rsq = int(dsq[tip[1], tip[0]])
        level = _tip_level(eng, contour, tip, rsq)
        for p in inner:
            out[p] = max(level, out.get(p, 0))
    return out


def _raster_from_grid_levels(grid: np.ndarray, dsq: np.ndarray) -> "SkeletonRaster":
    ys, xs = np.nonzero(grid)
    pts = frozenset((int(x), int(y)) for y, x in zip(ys, xs))
    radii = {(x, y): int(dsq[y, x]) for x, y in pts}
    h, w = grid.shape
    return SkeletonRaster(w, h, pts, radii)


def _raster_from_grid(grid: np.ndarray, dfield: DistanceField) -> SkeletonRaster:
    ys, xs = np.nonzero(grid)
    pts = frozenset((int(x), int(y)) for y, x in zip(ys, xs))
    radii = {(x, y): int(dfield.values_sq[y, x]) for x, y in pts}
    h, w = grid.shape
    return SkeletonRaster(w, h, pts, radii)


def medial_axis(mask: BinaryMask, k_min: int = DEFAULT_K_MIN,
                k_max: int = DEFAULT_K_MAX) -> SkeletonRaster:
    """Thin, connected, homotopy-preserving skeleton with radii attached.

    Holes in the mask are preserved as skeleton cycles; fill them first via
    :func:`skelforge.raster.fill_holes` when closed branches are unwanted.
    """
    grid, dfield, _, _, _ = _build_skeleton(mask, k_min, k_max)
    return _raster_from_grid(grid, dfield)


def build_ladder(mask: BinaryMask, k_min: int = DEFAULT_K_MIN,
                 k_max: int = DEFAULT_K_MAX, *,
                 fill_holes_first: bool = True) -> CandidateLadder:
    """Build the complex-to-simple candidate ladder for one shape.

    Step 0 is the full initial skeleton; step ``j`` keeps the branches whose
    owning contour vertex survives curve evolution at ``k = k_max - j``.
    """
    if k_min < 3:
        raise ValueError("k_min must be >= 3")
    if k_max < k_min:
        raise ValueError("k_max must be >= k_min")
    work = fill_holes(mask) if fill_holes_first else mask
    grid, dfield, eng, contour, pixel_levels = _build_skeleton(work, k_min, k_max)
    full = _raster_from_grid(grid, dfield)

    # map each leaf branch to its survival level: pre-band pixels remember
    # their branch's level; completion stubs fall back to the tip window
    from .graph import decompose  # local import to avoid a module cycle
    graph = decompose(full)
    endpoint_pts = {p for p, kind in graph.nodes if kind == "endpoint"}
    branch_levels = []
    for br in graph.branches:
        if br.closed or eng is None:
            continue
        a, b = br.path[0], br.path[-1]
        tip = None
        if a in endpoint_pts and b not in endpoint_pts:
            tip = a
        elif b in endpoint_pts and a not in endpoint_pts:
            tip = b
        if tip is None:
            continue
        level = pixel_levels.get(tip)
        if level is None:
            level = _tip_level(eng, contour, tip, full.radii_sq[tip])
        level = min(level, k_max)
        if level <= k_min:
            continue  # survives the whole ladder
        removable = frozenset(list(br.path[1:-1]) + [tip])
        branch_levels.append((level, removable))

    n = len(contour)
    steps = []
    dce_k = {}
    for j in range(0, k_max - k_min + 1):
        k = k_max - j
        rm = set()
        for level, pix in branch_levels:
            if level > k:
                rm |= pix
        steps.append(full.subset(full.points - rm))
        dce_k[j] = min(k, n)
    return CandidateLadder(steps=steps, dce_k=dce_k, branch_levels=branch_levels)
