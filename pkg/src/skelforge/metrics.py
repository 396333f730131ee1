"""Quantitative skeleton measures: reconstruction error, simplicity, average
error pixel, tolerance F1, and the bulls-eye retrieval score."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import (DimensionMismatch, EmptyShape, EmptySkeleton, MissingRadii)
from .raster import BinaryMask
from .skeletonize import SkeletonRaster, _stamp


@dataclass(frozen=True)
class MetricReport:
    """Per-skeleton quality snapshot emitted by reports and the service."""

    re: float
    ss: float
    point_count: int
    endpoint_count: int
    junction_count: int

    def to_dict(self) -> dict:
        return {
            "re": round(self.re, 6),
            "ss": round(self.ss, 6),
            "point_count": self.point_count,
            "endpoint_count": self.endpoint_count,
            "junction_count": self.junction_count,
        }


def reconstruct(skeleton: SkeletonRaster) -> BinaryMask:
    """Union of rasterized maximal discs: pixel p is covered iff
    dist(p, s) <= r(s) for some skeleton point s."""
    out = np.zeros((skeleton.height, skeleton.width), dtype=bool)
    h, w = out.shape
    for p in skeleton.sorted_points():
        rsq = skeleton.radii_sq.get(p)
        if rsq is None:
            raise MissingRadii(str(p))
        x, y = p
        r = math.isqrt(rsq)
        st = _stamp(rsq)
        y0, x0 = y - r, x - r
        sy0, sx0 = max(0, -y0), max(0, -x0)
        sy1 = st.shape[0] - max(0, y0 + st.shape[0] - h)
        sx1 = st.shape[1] - max(0, x0 + st.shape[1] - w)
        out[max(0, y0):min(h, y + r + 1), max(0, x0):min(w, x + r + 1)] |= st[sy0:sy1, sx0:sx1]
    return BinaryMask(out)


def reconstruction_error(skeleton: SkeletonRaster, shape: BinaryMask) -> float:
    """Normalized absolute area difference between the shape and the
    maximal-disc reconstruction, clamped to [0, 1]."""
    area = shape.area
    if area == 0:
        raise EmptyShape("reconstruction error needs a non-empty shape")
    lam_r = reconstruct(skeleton).area
    return min(1.0, abs(area - lam_r) / area)


def re_xor(skeleton: SkeletonRaster, shape: BinaryMask) -> float:
    """Symmetric-difference variant of the reconstruction error.

    Diagnostic only: penalizes reconstruction leaking outside the shape, which
    the plain area-difference form can partially cancel.  Not part of the
    standard report.
    """
    area = shape.area
    if area == 0:
        raise EmptyShape("reconstruction error needs a non-empty shape")
    rec = reconstruct(skeleton).pixels
    return float(np.logical_xor(rec, shape.pixels).sum()) / area


def simplicity(skeleton: SkeletonRaster) -> float:
    """Simplicity s(S) = 1 / (gamma + 1).

    ``gamma`` is the normalized curve length: the number of skeleton points
    divided by the mean branch path length (in points, terminals included).
    A single simple path therefore scores gamma = 1, s = 0.5; an empty
    skeleton scores 1.0.
    """
    n = len(skeleton.points)
    if n == 0:
        return 1.0
    from .graph import decompose
    graph = decompose(skeleton)
    if graph.branches:
        lens = [len(b.path) for b in graph.branches]
        avg = sum(lens) / len(lens)
    else:
        avg = float(n)  # isolated pixels only
    gamma = n / avg
    return 1.0 / (gamma + 1.0)


def metric_report(skeleton: SkeletonRaster, shape: BinaryMask) -> MetricReport:
    from .graph import decompose
    graph = decompose(skeleton)
    return MetricReport(
        re=reconstruction_error(skeleton, shape),
        ss=simplicity(skeleton),
        point_count=len(skeleton.points),
        endpoint_count=len(graph.endpoints),
        junction_count=len(graph.junctions),
    )


def _as_points(obj) -> np.ndarray:
    if isinstance(obj, SkeletonRaster):
        pts = obj.sorted_points()
    else:
        pts = sorted(obj, key=lambda p: (p[1], p[0]))
    return np.asarray(pts, dtype=float).reshape(-1, 2)


def aep(detected, gt) -> float:
    """Average error pixel: mean distance from each detected skeleton point to
    its nearest ground-truth point."""
    d = _as_points(detected)
    g = _as_points(gt)
    if len(d) == 0 or len(g) == 0:
        raise EmptySkeleton("aep needs non-empty point sets")
    dists, _ = cKDTree(g).query(d)
    return float(np.mean(dists))


def default_f1_tolerance(width: int, height: int) -> float:
    """Matching tolerance used by the skeleton-detection literature:
    0.0075 x image diagonal."""
    return 0.0075 * math.hypot(width, height)


def f1_score(detected, gt, tolerance: float):
    """Greedy nearest-first one-to-one matching within ``tolerance``.

    Returns (precision, recall, f1).  Candidate pairs are taken closest first;
    exact distance ties resolve by (detected index, gt index) over points
    sorted by (y, x).
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    d = _as_points(detected)
    g = _as_points(gt)
    nd, ng = len(d), len(g)
    if nd == 0 and ng == 0:
        return 0.0, 0.0, 0.0
    if nd == 0 or ng == 0:
        return 0.0, 0.0, 0.0
    pairs = []
    tree = cKDTree(g)
    for i, hits in enumerate(tree.query_ball_point(d, tolerance + 1e-12)):
        for j in hits:
            dist = math.hypot(d[i][0] - g[j][0], d[i][1] - g[j][1])
            if dist <= tolerance + 1e-12:
                pairs.append((dist, i, j))
    pairs.sort()
    used_d = set()
    used_g = set()
    matched = 0
    for dist, i, j in pairs:
        if i in used_d or j in used_g:
            continue
        used_d.add(i)
        used_g.add(j)
        matched += 1
    precision = matched / nd
    recall = matched / ng
    f1 = 0.0 if matched == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def bulls_eye(similarity, class_labels, per_class: int) -> float:
    """Bulls-eye score: percentage of same-class items among the top
    ``2 * per_class`` retrievals of each query.

    Retrieval follows the standard bulls-eye protocol: every item (the query
    itself included) is ranked by descending similarity, ties by ascending
    index, so a perfect matrix scores exactly 100.
    """
    sim = np.asarray(similarity, dtype=float)
    if sim.ndim != 2 or sim.shape[0] != sim.shape[1]:
        raise DimensionMismatch(f"similarity must be square, got {sim.shape}")
    n = sim.shape[0]
    if len(class_labels) != n:
        raise DimensionMismatch(
            f"{len(class_labels)} labels for {n}x{n} similarity matrix")
    labels = np.asarray(class_labels)
    top = 2 * per_class
    hits = 0
    idx = np.arange(n)
    for q in range(n):
        order = np.lexsort((idx, -sim[q]))
        chosen = order[:top]
        hits += int(np.sum(labels[chosen] == labels[q]))
    return 100.0 * hits / (n * per_class)
