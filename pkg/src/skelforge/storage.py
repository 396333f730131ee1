"""On-disk formats: GT record bundles, candidate-ladder files, annotation
session event logs, and dataset ingestion.

All JSON written here is canonical: keys sorted, floats rounded to six
decimals, two-space indent, trailing newline.  Writes go through a
write-temp-then-rename step so concurrent readers never observe partial
files.
"""
from __future__ import annotations

import json
import os
import re as _re
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (DecodeError, InvariantViolation, MissingLadder,
                     MissingRoot, VersionMismatch)
from .raster import BinaryMask, distance_transform, trace_boundary
from .skeletonize import CandidateLadder, SkeletonRaster

FORMAT_VERSION = 1
TOOL_VERSION = "skelforge 0.1.0"

# Coordinates in manifests are (x, y), origin top-left, y growing downward.
COORDINATE_CONVENTION = "x right, y down, origin top-left"


# --------------------------------------------------------------------------
# canonical json + atomic io


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, obj) -> None:
    atomic_write_bytes(path, canonical_json(obj).encode())


def _png_bytes(array: np.ndarray, mode: str) -> bytes:
    import io
    buf = io.BytesIO()
    Image.fromarray(array, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


# --------------------------------------------------------------------------
# thumbnails


def render_thumbs(skeleton: BinaryMask, shape: BinaryMask) -> dict:
    """Preview images: pure skeleton, and skeleton in red over the shape at
    50% transparency."""
    h, w = shape.pixels.shape
    pure = np.zeros((h, w, 4), dtype=np.uint8)
    pure[skeleton.pixels] = (255, 0, 0, 255)
    preview = np.zeros((h, w, 4), dtype=np.uint8)
    preview[shape.pixels] = (128, 128, 128, 128)
    preview[skeleton.pixels] = (255, 0, 0, 255)
    return {"skeleton": pure, "preview": preview}


# --------------------------------------------------------------------------
# GT records


@dataclass(frozen=True)
class GTRecord:
    """Export bundle for one annotated shape."""

    skeleton_matrix: BinaryMask
    endpoints: tuple           # (x, y) points
    junctions: tuple
    shape_matrix: BinaryMask
    boundary_matrix: BinaryMask
    thumbs: dict               # name -> RGBA uint8 array
    provenance: dict
    object_matrix: BinaryMask | None = None

    def __eq__(self, other):
        if not isinstance(other, GTRecord):
            return NotImplemented
        if (self.skeleton_matrix, self.endpoints, self.junctions,
                self.shape_matrix, self.boundary_matrix, self.object_matrix) != \
                (other.skeleton_matrix, other.endpoints, other.junctions,
                 other.shape_matrix, other.boundary_matrix, other.object_matrix):
            return False
        if self.provenance != other.provenance:
            return False
        if sorted(self.thumbs) != sorted(other.thumbs):
            return False
        return all(np.array_equal(self.thumbs[k], other.thumbs[k])
                   for k in self.thumbs)

    def skeleton_raster(self) -> SkeletonRaster:
        """Skeleton with radii re-attached from the shape's distance field."""
        dfield = distance_transform(self.shape_matrix)
        ys, xs = np.nonzero(self.skeleton_matrix.pixels)
        pts = frozenset((int(x), int(y)) for y, x in zip(ys, xs))
        radii = {(x, y): int(dfield.values_sq[y, x]) for x, y in pts}
        return SkeletonRaster(self.shape_matrix.width, self.shape_matrix.height,
                              pts, radii)


def make_gt_record(skeleton: SkeletonRaster, shape: BinaryMask,
                   provenance: dict, object_matrix: BinaryMask | None = None) -> GTRecord:
    """Assemble a consistent record from a skeleton and its shape."""
    from .graph import decompose
    graph = decompose(skeleton)
    skel_mask = skeleton.to_mask()
    boundary = BinaryMask.from_points(trace_boundary(shape).points,
                                      shape.width, shape.height)
    return GTRecord(
        skeleton_matrix=skel_mask,
        endpoints=tuple(graph.endpoints),
        junctions=tuple(graph.junctions),
        shape_matrix=shape,
        boundary_matrix=boundary,
        thumbs=render_thumbs(skel_mask, shape),
        provenance=dict(provenance),
        object_matrix=object_matrix,
    )


def _validate_record(record: GTRecord) -> None:
    from .graph import decompose
    if record.skeleton_matrix.pixels.shape != record.shape_matrix.pixels.shape:
        raise InvariantViolation("skeleton and shape grids differ")
    if np.any(record.skeleton_matrix.pixels & ~record.shape_matrix.pixels):
        raise InvariantViolation("skeleton leaves the shape foreground")
    graph = decompose(record.skeleton_raster())
    if tuple(graph.endpoints) != tuple(record.endpoints):
        raise InvariantViolation("endpoint list does not match the skeleton")
    if tuple(graph.junctions) != tuple(record.junctions):
        raise InvariantViolation("junction list does not match the skeleton")
    boundary = BinaryMask.from_points(trace_boundary(record.shape_matrix).points,
                                      record.shape_matrix.width,
                                      record.shape_matrix.height)
    if boundary != record.boundary_matrix:
        raise InvariantViolation("boundary matrix does not match the shape")


def export_gt(record: GTRecord, out_dir) -> Path:
    """Write the record bundle; returns the manifest path.

    Refuses inconsistent records.  Exports are canonical: re-exporting an
    imported record produces byte-identical files.
    """
    _validate_record(record)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    files = {
        "skeleton.png": _png_bytes(record.skeleton_matrix.pixels.astype(np.uint8) * 255, "L"),
        "shape.png": _png_bytes(record.shape_matrix.pixels.astype(np.uint8) * 255, "L"),
        "boundary.png": _png_bytes(record.boundary_matrix.pixels.astype(np.uint8) * 255, "L"),
        "thumb_skeleton.png": _png_bytes(record.thumbs["skeleton"], "RGBA"),
        "thumb_preview.png": _png_bytes(record.thumbs["preview"], "RGBA"),
    }
    if record.object_matrix is not None:
        files["object.png"] = _png_bytes(
            record.object_matrix.pixels.astype(np.uint8) * 255, "L")
    for name, data in files.items():
        atomic_write_bytes(out / name, data)

    manifest = {
        "format_version": FORMAT_VERSION,
        "coordinate_convention": COORDINATE_CONVENTION,
        "width": record.shape_matrix.width,
        "height": record.shape_matrix.height,
        "endpoints": [list(p) for p in record.endpoints],
        "junctions": [list(p) for p in record.junctions],
        "files": sorted(files),
        "has_object": record.object_matrix is not None,
        "provenance": record.provenance,
    }
    path = out / "gt.json"
    atomic_write_json(path, manifest)
    return path


def import_gt(gt_dir) -> GTRecord:
    gt_dir = Path(gt_dir)
    manifest_path = gt_dir / "gt.json"
    if not manifest_path.exists():
        raise MissingRoot(str(manifest_path))
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(str(manifest.get("format_version")))

    def load_mask(name):
        return BinaryMask.load_png(gt_dir / name)

    def load_rgba(name):
        return np.asarray(Image.open(gt_dir / name).convert("RGBA"))

    object_matrix = load_mask("object.png") if manifest.get("has_object") else None
    return GTRecord(
        skeleton_matrix=load_mask("skeleton.png"),
        endpoints=tuple(tuple(p) for p in manifest["endpoints"]),
        junctions=tuple(tuple(p) for p in manifest["junctions"]),
        shape_matrix=load_mask("shape.png"),
        boundary_matrix=load_mask("boundary.png"),
        thumbs={"skeleton": load_rgba("thumb_skeleton.png"),
                "preview": load_rgba("thumb_preview.png")},
        provenance=manifest["provenance"],
        object_matrix=object_matrix,
    )


# --------------------------------------------------------------------------
# candidate-ladder files


def save_ladder(ladder: CandidateLadder, path) -> Path:
    """Serialize a ladder: full step-0 skeleton plus per-step removals."""
    path = Path(path)
    full = ladder.steps[0]
    pts = full.sorted_points()
    index = {p: i for i, p in enumerate(pts)}
    steps = []
    for step in ladder.steps:
        removed = sorted(index[p] for p in full.points - step.points)
        steps.append(removed)
    doc = {
        "format_version": FORMAT_VERSION,
        "width": full.width,
        "height": full.height,
        "points": [list(p) for p in pts],
        "radii_sq": [full.radii_sq[p] for p in pts],
        "steps_removed": steps,
        "dce_k": {str(k): v for k, v in ladder.dce_k.items()},
        "branch_levels": [
            {"level": level, "points": [list(p) for p in sorted(pix, key=lambda q: (q[1], q[0]))]}
            for level, pix in ladder.branch_levels
        ],
    }
    atomic_write_json(path, doc)
    return path


def load_ladder(path) -> CandidateLadder:
    path = Path(path)
    if not path.exists():
        raise MissingLadder(str(path))
    doc = json.loads(path.read_text())
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(str(doc.get("format_version")))
    pts = [tuple(p) for p in doc["points"]]
    radii = {p: int(r) for p, r in zip(pts, doc["radii_sq"])}
    full = SkeletonRaster(doc["width"], doc["height"], frozenset(pts), radii)
    steps = []
    for removed in doc["steps_removed"]:
        gone = {pts[i] for i in removed}
        steps.append(full.subset(full.points - gone))
    branch_levels = [(int(b["level"]), frozenset(tuple(p) for p in b["points"]))
                     for b in doc["branch_levels"]]
    dce_k = {int(k): v for k, v in doc["dce_k"].items()}
    return CandidateLadder(steps=steps, dce_k=dce_k, branch_levels=branch_levels)


# --------------------------------------------------------------------------
# annotation sessions


@dataclass(frozen=True)
class SessionState:
    """Event-sourced pruning session.

    ``events`` is append-only; every event names its parent state, so replay
    is unambiguous even after undo branches.  ``cursor`` selects the state the
    session currently shows; state 0 is ladder step 0 untouched.
    """

    shape_id: str
    annotator_id: str
    k_min: int
    k_max: int
    fill_holes: bool
    events: tuple = ()
    cursor: int = 0
    revision: int = 0

    def n_states(self) -> int:
        return len(self.events) + 1

    def with_event(self, event: dict) -> "SessionState":
        ev = dict(event)
        ev["parent"] = self.cursor
        events = self.events + (ev,)
        return replace(self, events=events, cursor=len(events),
                       revision=self.revision + 1)

    def with_cursor(self, cursor: int) -> "SessionState":
        return replace(self, cursor=cursor, revision=self.revision + 1)


def replay_states(state: SessionState) -> list:
    """Resolve every session state to (ladder step, pruned branch ids).

    State 0 is (0, ()); each event derives state ``i+1`` from its parent.
    A ladder step change resets manual prunes.
    """
    states = [(0, ())]
    for ev in state.events:
        parent = states[ev["parent"]]
        if ev["type"] == "step":
            states.append((ev["step"], ()))
        elif ev["type"] == "prune":
            states.append((parent[0], parent[1] + tuple(ev["branch_ids"])))
        else:
            raise ValueError(f"unknown event type {ev['type']!r}")
    return states


def resolve_skeleton(ladder: CandidateLadder, step: int, pruned_ids) -> SkeletonRaster:
    """Apply a state's prunes to its ladder step."""
    from .graph import decompose, prune_branch
    graph = decompose(ladder.steps[step])
    for bid in pruned_ids:
        graph = prune_branch(graph, bid)
    return graph.raster


def save_session(state: SessionState, path) -> Path:
    path = Path(path)
    doc = {
        "format_version": FORMAT_VERSION,
        "shape_id": state.shape_id,
        "annotator_id": state.annotator_id,
        "k_min": state.k_min,
        "k_max": state.k_max,
        "fill_holes": state.fill_holes,
        "events": [dict(e) for e in state.events],
        "cursor": state.cursor,
        "revision": state.revision,
    }
    atomic_write_json(path, doc)
    return path


def load_session(path) -> SessionState:
    path = Path(path)
    if not path.exists():
        raise MissingRoot(str(path))
    doc = json.loads(path.read_text())
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(str(doc.get("format_version")))
    return SessionState(
        shape_id=doc["shape_id"],
        annotator_id=doc["annotator_id"],
        k_min=doc["k_min"],
        k_max=doc["k_max"],
        fill_holes=doc["fill_holes"],
        events=tuple(doc["events"]),
        cursor=doc["cursor"],
        revision=doc["revision"],
    )


# --------------------------------------------------------------------------
# dataset ingestion


@dataclass(frozen=True)
class DatasetItem:
    id: str
    mask: BinaryMask
    label: str
    image_path: Path | None = None


_EXTENSIONS = (".png", ".gif", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff")
_LABEL_RE = _re.compile(r"^(.*?)[-_]?\d*$")


def class_label(stem: str) -> str:
    """Class prefix of a dataset file name (``bird-12`` -> ``bird``)."""
    m = _LABEL_RE.match(stem)
    return m.group(1) if m and m.group(1) else stem


def load_dataset(root, kind: str = "shape", on_error=None):
    """Iterate dataset items in deterministic lexicographic order.

    ``kind='shape'``: every image file under ``root`` is a shape mask,
    binarized at threshold 128.  ``kind='image+mask'``: masks live under
    ``root/masks`` with source images of the same stem under ``root/images``.
    Per-item decode failures are reported through ``on_error(path, exc)`` and
    iteration continues.
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingRoot(str(root))
    if kind not in ("shape", "image+mask"):
        raise ValueError(f"unknown dataset kind {kind!r}")

    if kind == "shape":
        files = sorted(p for p in root.rglob("*")
                       if p.is_file() and p.suffix.lower() in _EXTENSIONS)
        image_for = {}
    else:
        mask_root = root / "masks"
        if not mask_root.is_dir():
            raise MissingRoot(str(mask_root))
        files = sorted(p for p in mask_root.rglob("*")
                       if p.is_file() and p.suffix.lower() in _EXTENSIONS)
        image_for = {}
        image_root = root / "images"
        if image_root.is_dir():
            for p in image_root.rglob("*"):
                if p.is_file() and p.suffix.lower() in _EXTENSIONS:
                    image_for[p.stem] = p

    for path in files:
        try:
            img = Image.open(path).convert("L")
            mask = BinaryMask(np.asarray(img) >= 128)
        except Exception as exc:  # decode errors isolated per item
            if on_error is not None:
                on_error(path, DecodeError(f"{path}: {exc}"))
            continue
        stem = path.stem
        yield DatasetItem(id=stem, mask=mask, label=class_label(stem),
                          image_path=image_for.get(stem))


def load_similarity_csv(path) -> np.ndarray:
    """Header-less CSV of n rows of n floats."""
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    mat = np.asarray(rows, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        from .errors import DimensionMismatch
        raise DimensionMismatch(f"similarity csv is {mat.shape}, expected square")
    return mat
