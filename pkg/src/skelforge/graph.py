"""Skeleton graph decomposition and pruning.

Node kinds follow the neighbour-count rule: an endpoint has exactly one
skeleton 8-neighbour, a junction three or more.  Isolated single pixels are
classified as endpoints.  Branch paths include both terminal nodes; closed
branches (cycles) store each pixel once and carry ``closed=True``.
"""
from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass

from .errors import (Disconnected, NotALeafBranch, NotSkeletonPoint,
                     TooFewPreservedEndpoints, UnknownBranchId)
from .skeletonize import SkeletonRaster

_SQRT2 = math.sqrt(2.0)


def _neighbours(p, pts):
    x, y = p
    out = []
    for dx, dy in ((-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)):
        q = (x + dx, y + dy)
        if q in pts:
            out.append(q)
    return out


def _path_length(path, closed=False) -> float:
    pts = list(path) + ([path[0]] if closed and len(path) > 1 else [])
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        total += _SQRT2 if (a[0] != b[0] and a[1] != b[1]) else 1.0
    return total


def _branch_id(path, closed) -> str:
    h = hashlib.sha1()
    h.update(b"closed" if closed else b"open")
    for x, y in path:
        h.update(f"{x},{y};".encode())
    return h.hexdigest()[:12]


@dataclass(frozen=True)
class Branch:
    """Maximal run of connection points between two nodes (or a cycle)."""

    id: str
    path: tuple      # (x, y) points; includes terminal nodes unless closed
    closed: bool = False

    @property
    def length(self) -> float:
        return _path_length(self.path, self.closed)

    @property
    def terminals(self) -> tuple:
        if self.closed:
            return ()
        return (self.path[0], self.path[-1])


@dataclass(frozen=True)
class SkeletonGraph:
    """Endpoints, junctions, and branches of a skeleton raster."""

    nodes: tuple         # ((x, y), kind) pairs, kind in {"endpoint", "junction"}
    branches: tuple
    raster: SkeletonRaster

    @property
    def endpoints(self) -> list:
        return [p for p, kind in self.nodes if kind == "endpoint"]

    @property
    def junctions(self) -> list:
        return [p for p, kind in self.nodes if kind == "junction"]

    def branch(self, branch_id: str) -> Branch:
        for b in self.branches:
            if b.id == branch_id:
                return b
        raise UnknownBranchId(branch_id)

    def leaf_branches(self) -> list:
        """Branches prunable one at a time: exactly one endpoint terminal and
        one junction terminal."""
        eps = set(self.endpoints)
        juncs = set(self.junctions)
        out = []
        for b in self.branches:
            if b.closed:
                continue
            a, z = b.path[0], b.path[-1]
            if (a in eps and z in juncs) or (z in eps and a in juncs):
                out.append(b)
        return out


def _orient(path):
    """Canonical orientation: path reads from its smaller (y, x) terminal."""
    a, z = path[0], path[-1]
    ka, kz = (a[1], a[0]), (z[1], z[0])
    if kz < ka or (kz == ka and len(path) > 1
                   and (path[-2][1], path[-2][0]) < (path[1][1], path[1][0])):
        return tuple(reversed(path))
    return tuple(path)


def _orient_cycle(cycle):
    """Canonical cycle: starts at the smallest (y, x) pixel, lesser neighbour
    second."""
    n = len(cycle)
    k = min(range(n), key=lambda i: (cycle[i][1], cycle[i][0]))
    fwd = [cycle[(k + i) % n] for i in range(n)]
    bwd = [cycle[(k - i) % n] for i in range(n)]
    if n > 1 and (bwd[1][1], bwd[1][0]) < (fwd[1][1], fwd[1][0]):
        return tuple(bwd)
    return tuple(fwd)


def decompose(raster: SkeletonRaster) -> SkeletonGraph:
    """Split a skeleton into nodes and maximal branches.

    Every skeleton pixel lies on exactly one branch or is a node; branches are
    ordered by their smallest terminal coordinate so decomposition is
    deterministic.
    """
    pts = raster.points
    if not pts:
        return SkeletonGraph((), (), raster)
    degree = {p: len(_neighbours(p, pts)) for p in pts}
    nodes = {}
    for p, d in degree.items():
        if d <= 1:
            nodes[p] = "endpoint"
        elif d >= 3:
            nodes[p] = "junction"

    branches = []
    used_dirs = set()
    for node in sorted(nodes, key=lambda p: (p[1], p[0])):
        for nb in sorted(_neighbours(node, pts), key=lambda p: (p[1], p[0])):
            if (node, nb) in used_dirs:
                continue
            path = [node]
            prev, cur = node, nb
            while cur not in nodes and degree[cur] == 2:
                path.append(cur)
                ns = [q for q in _neighbours(cur, pts) if q != prev]
                prev, cur = cur, ns[0]
            path.append(cur)
            used_dirs.add((node, nb))
            used_dirs.add((cur, prev))
            oriented = _orient(path)
            branches.append(Branch(_branch_id(oriented, False), oriented, False))

    # pure cycles: degree-2 pixels not reached from any node
    covered = set(nodes)
    for b in branches:
        covered.update(b.path)
    leftover = sorted(pts - covered, key=lambda p: (p[1], p[0]))
    seen = set()
    for start in leftover:
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            ns = sorted((q for q in _neighbours(cur, pts) if q != prev),
                        key=lambda p: (p[1], p[0]))
            nxt = ns[0]
            if nxt == start:
                break
            cycle.append(nxt)
            seen.add(nxt)
            prev, cur = cur, nxt
        oriented = _orient_cycle(cycle)
        branches.append(Branch(_branch_id(oriented, True), oriented, True))

    branches.sort(key=lambda b: tuple((y, x) for x, y in b.path[:2]))
    node_list = tuple((p, nodes[p]) for p in sorted(nodes, key=lambda p: (p[1], p[0])))
    return SkeletonGraph(node_list, tuple(branches), raster)


def prune_branch(graph: SkeletonGraph, branch_ids) -> SkeletonGraph:
    """Remove leaf branches (their interiors and endpoint terminals).

    All requested branches are validated against the current graph and removed
    together, so sibling arms of one junction can be pruned in a single call.
    Junctions left with degree 2 dissolve when the result is re-decomposed.
    """
    if isinstance(branch_ids, str):
        branch_ids = {branch_ids}
    ids = set(branch_ids)
    known = {b.id: b for b in graph.branches}
    for bid in sorted(ids):
        if bid not in known:
            raise UnknownBranchId(bid)
    leaf_ids = {b.id for b in graph.leaf_branches()}
    eps = set(graph.endpoints)
    remove = set()
    for bid in sorted(ids):
        b = known[bid]
        if bid not in leaf_ids:
            raise NotALeafBranch(bid)
        tip = b.path[0] if b.path[0] in eps else b.path[-1]
        remove.update(b.path[1:-1])
        remove.add(tip)
    keep = graph.raster.points - remove
    return decompose(graph.raster.subset(keep))


def _exact_less(a, b):
    """Compare path lengths given as (straight, diagonal) step counts."""
    ds = a[0] - b[0]
    dd = a[1] - b[1]
    if dd == 0:
        return ds < 0
    if ds == 0:
        return dd < 0
    # sign of ds + dd*sqrt(2)
    if ds > 0 and dd > 0:
        return False
    if ds < 0 and dd < 0:
        return True
    if ds > 0:  # dd < 0: positive iff ds^2 > 2 dd^2
        return ds * ds < 2 * dd * dd
    return ds * ds > 2 * dd * dd  # ds < 0, dd > 0


class _Dist:
    """Exact straight/diagonal step-count distance, totally ordered."""

    __slots__ = ("s", "d")

    def __init__(self, s=0, d=0):
        self.s = s
        self.d = d

    def step(self, diagonal):
        return _Dist(self.s + (not diagonal), self.d + diagonal)

    def __lt__(self, other):
        return _exact_less((self.s, self.d), (other.s, other.d))

    def __eq__(self, other):
        return self.s == other.s and self.d == other.d

    def __le__(self, other):
        return self == other or self < other

    @property
    def value(self) -> float:
        return self.s + self.d * _SQRT2


def geodesic_path(graph: SkeletonGraph, a, b) -> list:
    """Shortest pixel path along the skeleton, diagonal steps weighing sqrt(2).

    Ties between equal-length paths resolve by preferring the lexicographically
    smaller (y, x) predecessor, which makes the chosen path deterministic.
    """
    pts = graph.raster.points
    if a not in pts or b not in pts:
        raise NotSkeletonPoint(str(a if a not in pts else b))
    if a == b:
        return [a]
    dist = {a: _Dist()}
    prev = {}
    counter = 0
    heap = [(_Dist(), (a[1], a[0]), counter, a)]
    done = set()
    while heap:
        d, _, _, p = heapq.heappop(heap)
        if p in done:
            continue
        done.add(p)
        if p == b:
            break
        for q in sorted(_neighbours(p, pts), key=lambda t: (t[1], t[0])):
            if q in done:
                continue
            nd = d.step(q[0] != p[0] and q[1] != p[1])
            old = dist.get(q)
            if old is None or nd < old or (nd == old
                                           and (p[1], p[0]) < (prev[q][1], prev[q][0])):
                dist[q] = nd
                prev[q] = p
                counter += 1
                heapq.heappush(heap, (nd, (q[1], q[0]), counter, q))
    if b not in dist:
        raise Disconnected(f"{a} and {b} are not connected")
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    path.reverse()
    return path


def prune_by_boxes(graph: SkeletonGraph, boxes) -> SkeletonGraph:
    """Keep only geodesic paths between endpoints covered by the given boxes.

    Boxes are ``(x0, y0, x1, y1)`` rectangles, inclusive on all edges.  Boxes
    that cover no endpoint are ignored.
    """
    eps = graph.endpoints
    preserved = set()
    for x0, y0, x1, y1 in boxes:
        for p in eps:
            if x0 <= p[0] <= x1 and y0 <= p[1] <= y1:
                preserved.add(p)
    if len(preserved) < 2:
        raise TooFewPreservedEndpoints(
            f"boxes cover {len(preserved)} endpoint(s), need at least 2")
    keep = set()
    ordered = sorted(preserved, key=lambda p: (p[1], p[0]))
    for i, p in enumerate(ordered):
        for q in ordered[i + 1:]:
            keep.update(geodesic_path(graph, p, q))
    return decompose(graph.raster.subset(keep))
