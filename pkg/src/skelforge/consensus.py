"""Multi-annotator skeleton integration.

The selection rule: a skeleton duplicated more often than any other wins by
votes; otherwise, with three or more distinct candidates, the one whose
reconstruction error is the (lower) median wins; exactly two distinct
candidates with tied votes fall back to a branch union.
"""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

from .errors import IncompatibleLadders, NoSubmissions
from .metrics import reconstruction_error
from .raster import BinaryMask
from .skeletonize import SkeletonRaster


def skeleton_key(skeleton: SkeletonRaster) -> str:
    """Digest of the canonical sorted point list (exact-equality identity)."""
    h = hashlib.sha256()
    h.update(f"{skeleton.width}x{skeleton.height}|".encode())
    for x, y in skeleton.sorted_points():
        h.update(f"{x},{y};".encode())
    return h.hexdigest()


@dataclass(frozen=True)
class AnnotatorSubmission:
    annotator_id: str
    skeleton: SkeletonRaster
    re: float

    @classmethod
    def create(cls, annotator_id: str, skeleton: SkeletonRaster,
               shape: BinaryMask) -> "AnnotatorSubmission":
        return cls(annotator_id, skeleton, reconstruction_error(skeleton, shape))


@dataclass(frozen=True)
class IntegrationResult:
    skeleton: SkeletonRaster
    rationale: str
    votes: int

    def describe(self) -> str:
        if self.rationale == "max_votes":
            return f"max_votes({self.votes})"
        return self.rationale


def hints(submissions) -> dict:
    """Duplicate counts keyed by the canonical skeleton digest."""
    return dict(Counter(skeleton_key(s.skeleton) for s in submissions))


def integrate(submissions, shape: BinaryMask) -> IntegrationResult:
    """Pick the consensus skeleton from one group of submissions.

    Permutation-invariant and deterministic: distinct candidates are ordered
    by (reconstruction error, canonical digest).
    """
    subs = list(submissions)
    if not subs:
        raise NoSubmissions("integrate needs at least one submission")

    groups = {}
    for s in subs:
        groups.setdefault(skeleton_key(s.skeleton), []).append(s)
    counts = {k: len(v) for k, v in groups.items()}
    best = max(counts.values())
    winners = [k for k, c in counts.items() if c == best]
    if len(winners) == 1:
        key = winners[0]
        return IntegrationResult(groups[key][0].skeleton, "max_votes", best)

    distinct = sorted(((min(s.re for s in group), key)
                       for key, group in groups.items()))
    if len(distinct) >= 3:
        # lower median for even counts
        mid = (len(distinct) - 1) // 2
        _, key = distinct[mid]
        return IntegrationResult(groups[key][0].skeleton, "median_error",
                                 counts[key])
    merged = merge_branches(subs)
    return IntegrationResult(merged, "branch_union", 0)


def merge_branches(submissions) -> SkeletonRaster:
    """Union of the branch sets selected by each annotator.

    All submissions must be prunings of one common superset skeleton: the
    pixel union must decompose into branches that each submission either keeps
    in full or dropped entirely.
    """
    subs = list(submissions)
    if len(subs) < 2:
        raise NoSubmissions("merge_branches needs at least two submissions")
    w = subs[0].skeleton.width
    h = subs[0].skeleton.height
    for s in subs[1:]:
        if (s.skeleton.width, s.skeleton.height) != (w, h):
            raise IncompatibleLadders("submissions use different grids")

    union_pts = frozenset().union(*(s.skeleton.points for s in subs))
    radii = {}
    for s in subs:
        for p, rsq in s.skeleton.radii_sq.items():
            if radii.setdefault(p, rsq) != rsq:
                raise IncompatibleLadders(f"radius mismatch at {p}")
    union = SkeletonRaster(w, h, union_pts, radii)

    from .graph import decompose
    graph = decompose(union)
    for s in subs:
        pts = s.skeleton.points
        for b in graph.branches:
            interior = b.path if b.closed else b.path[1:-1]
            inside = [p in pts for p in interior]
            if any(inside) and not all(inside):
                raise IncompatibleLadders(
                    f"submission {s.annotator_id} splits branch {b.id}")
    return union
