"""Batch command-line front door.

Exit codes: 0 success, 1 per-item failures occurred, 2 configuration error.
All commands are deterministic for a fixed input tree; worker count never
changes the output bytes.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import metrics
from .errors import SkelforgeError
from .graph import decompose
from .raster import BinaryMask, fill_holes
from .skeletonize import DEFAULT_K_MAX, DEFAULT_K_MIN, build_ladder
from .storage import (TOOL_VERSION, atomic_write_bytes, atomic_write_json,
                      canonical_json, class_label, load_dataset, load_ladder,
                      load_similarity_csv, make_gt_record, export_gt, save_ladder)

log = logging.getLogger("skelforge")


def _setup_logging():
    level = os.environ.get("SKELFORGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@click.group()
@click.version_option(version="0.1.0", prog_name="skelforge")
def main():
    """Skeleton ground-truth extraction toolkit."""
    _setup_logging()


# --------------------------------------------------------------------------
# skeletonize


def _skeletonize_one(args):
    """Worker: build the ladder and step-0 record for one shape."""
    (item_id, mask_path, out_root, k_min, k_max, fill, plots) = args
    try:
        mask = BinaryMask.load_png(mask_path)
        work = fill_holes(mask) if fill else mask
        ladder = build_ladder(mask, k_min, k_max, fill_holes_first=fill)
        out_root = Path(out_root)
        save_ladder(ladder, out_root / "ladders" / f"{item_id}.json")

        skeleton = ladder.steps[0]
        graph = decompose(skeleton)
        re = metrics.reconstruction_error(skeleton, work)
        ss = metrics.simplicity(skeleton)
        provenance = {
            "shape_id": item_id,
            "annotator_ids": [],
            "k_min": k_min,
            "k_max": k_max,
            "dce_k": ladder.dce_k[0],
            "step": 0,
            "fill_holes": fill,
            "pruned_branch_ids": [],
            "tool_version": TOOL_VERSION,
        }
        record = make_gt_record(skeleton, work, provenance)
        export_gt(record, out_root / "records" / item_id)
        if plots:
            from .plots import ladder_curve
            res, sss = [], []
            for step in ladder.steps:
                res.append(metrics.reconstruction_error(step, work))
                sss.append(metrics.simplicity(step))
            ladder_curve(res, sss, ladder.dce_k,
                         out_root / "plots" / f"{item_id}.png")
        row = {"id": item_id, "re": round(re, 6), "ss": round(ss, 6),
               "points": len(skeleton.points),
               "endpoints": len(graph.endpoints),
               "junctions": len(graph.junctions),
               "steps": len(ladder.steps)}
        return item_id, row, None
    except Exception as exc:  # per-item isolation
        return item_id, None, f"{type(exc).__name__}: {exc}"


@main.command()
@click.option("--input", "input_root", required=True,
              type=click.Path(file_okay=False), help="dataset root (shape PNGs)")
@click.option("--output", "output_root", required=True,
              type=click.Path(file_okay=False), help="run output root")
@click.option("--kmin", default=DEFAULT_K_MIN, show_default=True)
@click.option("--kmax", default=DEFAULT_K_MAX, show_default=True)
@click.option("--fill-holes/--keep-holes", "fill", default=True, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--plots", is_flag=True, help="emit per-item ladder curve PNGs")
def skeletonize(input_root, output_root, kmin, kmax, fill, workers, plots):
    """Build candidate ladders and step-0 GT records for a dataset."""
    if kmin < 3 or kmax < kmin or workers < 1:
        click.echo("invalid configuration: need kmax >= kmin >= 3, workers >= 1",
                   err=True)
        sys.exit(2)
    root = Path(input_root)
    if not root.is_dir():
        click.echo(f"input root {root} does not exist", err=True)
        sys.exit(2)
    out_root = Path(output_root)
    out_root.mkdir(parents=True, exist_ok=True)

    decode_errors = []
    items = list(load_dataset(root, "shape",
                              on_error=lambda p, e: decode_errors.append(str(e))))
    # items need stable mask paths for workers; dataset files are re-read there
    paths = {}
    files = sorted(p for p in root.rglob("*") if p.is_file())
    for p in files:
        paths.setdefault(p.stem, p)
    jobs = [(it.id, str(paths[it.id]), str(out_root), kmin, kmax, fill, plots)
            for it in items]

    results = []
    if workers == 1:
        for job in jobs:
            results.append(_skeletonize_one(job))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_skeletonize_one, jobs))

    rows = []
    failures = list(decode_errors)
    for item_id, row, err in sorted(results, key=lambda r: r[0]):
        if err is not None:
            failures.append(f"{item_id}: {err}")
            log.warning("item %s failed: %s", item_id, err)
        else:
            rows.append(row)
    summary = {
        "dataset": root.name,
        "k_min": kmin,
        "k_max": kmax,
        "fill_holes": fill,
        "items": rows,
        "errors": sorted(failures),
        "tool_version": TOOL_VERSION,
    }
    atomic_write_json(out_root / "summary.json", summary)
    click.echo(f"{len(rows)} items, {len(failures)} errors -> {out_root}")
    sys.exit(1 if failures else 0)


# --------------------------------------------------------------------------
# report


def _select_step(ladder, shape, min_ss: float):
    """Min-RE ladder step among those with SS >= min_ss (falls back to the
    overall min-RE step)."""
    best = None
    fallback = None
    for j, step in enumerate(ladder.steps):
        re = metrics.reconstruction_error(step, shape)
        ss = metrics.simplicity(step)
        if fallback is None or re < fallback[0]:
            fallback = (re, ss, j)
        if ss >= min_ss and (best is None or re < best[0]):
            best = (re, ss, j)
    return best if best is not None else fallback


def _report_one_run(run_dir: Path, auto_select: bool, min_ss: float):
    records_dir = run_dir / "records"
    if not records_dir.is_dir():
        return None
    item_rows = []
    for rec_dir in sorted(p for p in records_dir.iterdir() if p.is_dir()):
        from .storage import import_gt
        record = import_gt(rec_dir)
        shape = record.shape_matrix
        ladder_path = run_dir / "ladders" / f"{rec_dir.name}.json"
        if auto_select and ladder_path.exists():
            ladder = load_ladder(ladder_path)
            re, ss, step = _select_step(ladder, shape, min_ss)
        else:
            skeleton = record.skeleton_raster()
            re = metrics.reconstruction_error(skeleton, shape)
            ss = metrics.simplicity(skeleton)
            step = record.provenance.get("step", 0)
        item_rows.append({"id": rec_dir.name, "re": re, "ss": ss, "step": step})
    if not item_rows:
        return None
    return {
        "dataset": run_dir.name,
        "count": len(item_rows),
        "mean_re": sum(r["re"] for r in item_rows) / len(item_rows),
        "mean_ss": sum(r["ss"] for r in item_rows) / len(item_rows),
        "items": item_rows,
    }


@main.command()
@click.option("--input", "inputs", required=True, multiple=True,
              type=click.Path(file_okay=False),
              help="run directory produced by skeletonize (repeatable)")
@click.option("--output", "output_root", default=None,
              type=click.Path(file_okay=False),
              help="where to write the report (default: first input)")
@click.option("--auto-select", is_flag=True,
              help="pick the min-RE ladder step with SS >= --min-ss per item")
@click.option("--min-ss", default=0.05, show_default=True)
def report(inputs, output_root, auto_select, min_ss):
    """Tabulate mean reconstruction error and simplicity per dataset."""
    rows = []
    for run in inputs:
        row = _report_one_run(Path(run), auto_select, min_ss)
        if row is not None:
            rows.append(row)
    if not rows:
        click.echo("no GT records found under the given inputs", err=True)
        sys.exit(2)
    out = Path(output_root) if output_root else Path(inputs[0])
    out.mkdir(parents=True, exist_ok=True)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "count", "mean_re", "mean_ss"])
    for r in rows:
        writer.writerow([r["dataset"], r["count"],
                         f"{r['mean_re']:.6f}", f"{r['mean_ss']:.6f}"])
    atomic_write_bytes(out / "report.csv", buf.getvalue().encode())

    lines = [f"{'dataset':<24} {'count':>6} {'mean RE':>10} {'mean SS':>10}"]
    for r in rows:
        lines.append(f"{r['dataset']:<24} {r['count']:>6} "
                     f"{r['mean_re']:>10.4f} {r['mean_ss']:>10.4f}")
    text = "\n".join(lines) + "\n"
    atomic_write_bytes(out / "report.txt", text.encode())
    atomic_write_json(out / "report.json", {"rows": rows})

    from .plots import report_figure
    report_figure(rows, out / "report.png")
    click.echo(text, nl=False)
    sys.exit(0)


# --------------------------------------------------------------------------
# eval


def _skeleton_points_from(path: Path):
    mask = BinaryMask.load_png(path)
    ys, xs = np.nonzero(mask.pixels)
    return [(int(x), int(y)) for y, x in zip(ys, xs)], mask


def _collect_skeletons(root: Path) -> dict:
    """id -> skeleton PNG path.  Accepts flat PNG dirs and record trees."""
    out = {}
    if not root.is_dir():
        return out
    for p in sorted(root.iterdir()):
        if p.is_file() and p.suffix.lower() == ".png":
            out[p.stem] = p
        elif p.is_dir() and (p / "skeleton.png").exists():
            out[p.name] = p / "skeleton.png"
    return out


@main.command("eval")
@click.option("--predicted", "predicted_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--gt", "gt_dir", required=True, type=click.Path(file_okay=False))
@click.option("--output", "output_root", default=None,
              type=click.Path(file_okay=False))
@click.option("--tolerance", default=None, type=float,
              help="F1 matching tolerance in pixels "
                   "(default: 0.0075 x image diagonal)")
@click.option("--intersect", is_flag=True,
              help="evaluate the id intersection instead of failing on mismatch")
@click.option("--similarity", "similarity_csv", default=None,
              type=click.Path(dir_okay=False),
              help="similarity matrix CSV for the bulls-eye score")
@click.option("--per-class", "per_class", default=None, type=int,
              help="items per class for the bulls-eye score")
def eval_cmd(predicted_dir, gt_dir, output_root, tolerance, intersect,
             similarity_csv, per_class):
    """Evaluate predicted skeletons against ground truth (AEP, F1, BES)."""
    pred = _collect_skeletons(Path(predicted_dir))
    gt = _collect_skeletons(Path(gt_dir))
    if not pred or not gt:
        click.echo("predicted or gt directory holds no skeletons", err=True)
        sys.exit(2)
    if set(pred) != set(gt):
        if not intersect:
            missing = sorted(set(pred) ^ set(gt))
            click.echo(f"id mismatch between predicted and gt: {missing[:10]}"
                       f"{'...' if len(missing) > 10 else ''} "
                       f"(use --intersect to evaluate the overlap)", err=True)
            sys.exit(2)
    ids = sorted(set(pred) & set(gt))
    if not ids:
        click.echo("no common ids to evaluate", err=True)
        sys.exit(2)

    rows = []
    failures = []
    for item_id in ids:
        try:
            d_pts, d_mask = _skeleton_points_from(pred[item_id])
            g_pts, _ = _skeleton_points_from(gt[item_id])
            tol = tolerance if tolerance is not None else \
                metrics.default_f1_tolerance(d_mask.width, d_mask.height)
            a = metrics.aep(d_pts, g_pts)
            p, r, f1 = metrics.f1_score(d_pts, g_pts, tol)
            rows.append({"id": item_id, "aep": round(a, 6),
                         "precision": round(p, 6), "recall": round(r, 6),
                         "f1": round(f1, 6), "tolerance": round(tol, 6)})
        except SkelforgeError as exc:
            failures.append(f"{item_id}: {exc}")

    out = Path(output_root) if output_root else Path(predicted_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "items": rows,
        "errors": sorted(failures),
        "mean_aep": round(sum(r["aep"] for r in rows) / len(rows), 6) if rows else None,
        "mean_f1": round(sum(r["f1"] for r in rows) / len(rows), 6) if rows else None,
    }

    if similarity_csv:
        sim = load_similarity_csv(similarity_csv)
        labels = [class_label(i) for i in ids]
        if sim.shape[0] != len(ids):
            click.echo(f"similarity matrix is {sim.shape[0]}x{sim.shape[0]} "
                       f"but there are {len(ids)} items", err=True)
            sys.exit(2)
        counts = {lb: labels.count(lb) for lb in set(labels)}
        if per_class is None:
            sizes = sorted(set(counts.values()))
            if len(sizes) != 1:
                click.echo("classes are uneven; pass --per-class", err=True)
                sys.exit(2)
            per_class = sizes[0]
        summary["bes"] = round(metrics.bulls_eye(sim, labels, per_class), 6)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "aep", "precision", "recall", "f1", "tolerance"])
    for r in rows:
        writer.writerow([r["id"], f"{r['aep']:.6f}", f"{r['precision']:.6f}",
                         f"{r['recall']:.6f}", f"{r['f1']:.6f}",
                         f"{r['tolerance']:.6f}"])
    atomic_write_bytes(out / "eval.csv", buf.getvalue().encode())
    atomic_write_json(out / "eval.json", summary)
    from .plots import eval_figure
    eval_figure([r["aep"] for r in rows], [r["f1"] for r in rows],
                out / "eval.png")

    click.echo(canonical_json({k: v for k, v in summary.items() if k != "items"}),
               nl=False)
    sys.exit(1 if failures else 0)


# --------------------------------------------------------------------------
# serve


@main.command()
@click.option("--dataset-root", required=True, type=click.Path(file_okay=False))
@click.option("--export-root", default="exports", type=click.Path(file_okay=False))
@click.option("--session-root", default="sessions", type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True)
def serve(dataset_root, export_root, session_root, host, port):
    """Run the annotation HTTP service."""
    import uvicorn

    from .service import create_app
    app = create_app(dataset_root, export_root, session_root)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
