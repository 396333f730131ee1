"""HTTP service driving the annotation UI.

Sessions are event-sourced: mutations append events (with their parent state)
or move the cursor; every accepted mutation bumps the revision and persists
the event log, so a restart loses nothing.  Stale-revision mutations are
rejected with 409.
"""
from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from pydantic import BaseModel, Field

from . import metrics
from .consensus import AnnotatorSubmission, integrate
from .errors import NotALeafBranch, SkelforgeError, UnknownBranchId
from .graph import decompose
from .raster import fill_holes as fill_holes_op
from .skeletonize import DEFAULT_K_MAX, DEFAULT_K_MIN, build_ladder
from .storage import (SessionState, load_dataset, load_session, make_gt_record,
                      export_gt, replay_states, resolve_skeleton, save_session,
                      TOOL_VERSION)


class CreateSession(BaseModel):
    shape_id: str
    annotator_id: str
    k_min: int = DEFAULT_K_MIN
    k_max: int = DEFAULT_K_MAX
    fill_holes: bool = True


class StepRequest(BaseModel):
    direction: int = Field(description="+1 towards more branches, -1 towards fewer")
    revision: int


class PruneRequest(BaseModel):
    branch_ids: list
    revision: int


class RevisionOnly(BaseModel):
    revision: int


class RestoreRequest(BaseModel):
    index: int
    revision: int


class IntegrateRequest(BaseModel):
    shape_id: str
    session_ids: list


class _Session:
    def __init__(self, state: SessionState, ladder, shape):
        self.state = state
        self.ladder = ladder
        self.shape = shape
        self.metric_cache = {}
        self.lock = threading.Lock()


class AnnotationService:
    def __init__(self, dataset_root, export_root, session_root):
        self.dataset_root = Path(dataset_root)
        self.export_root = Path(export_root)
        self.session_root = Path(session_root)
        self.session_root.mkdir(parents=True, exist_ok=True)
        self._shapes = None
        self._sessions = {}
        self._ladders = {}
        self._registry_lock = threading.Lock()

    # -- shapes ------------------------------------------------------------

    def shapes(self) -> dict:
        if self._shapes is None:
            self._shapes = {item.id: item
                            for item in load_dataset(self.dataset_root, "shape")}
        return self._shapes

    def shape(self, shape_id: str):
        item = self.shapes().get(shape_id)
        if item is None:
            raise HTTPException(404, f"unknown shape {shape_id!r}")
        return item

    def working_shape(self, shape_id: str, fill: bool):
        mask = self.shape(shape_id).mask
        return fill_holes_op(mask) if fill else mask

    def ladder(self, shape_id: str, k_min: int, k_max: int, fill: bool):
        key = (shape_id, k_min, k_max, fill)
        ladder = self._ladders.get(key)
        if ladder is None:
            mask = self.shape(shape_id).mask
            ladder = build_ladder(mask, k_min, k_max, fill_holes_first=fill)
            self._ladders[key] = ladder
        return ladder

    # -- sessions ----------------------------------------------------------

    def _session_path(self, session_id: str) -> Path:
        return self.session_root / f"{session_id}.json"

    def create_session(self, req: CreateSession) -> str:
        if req.k_min < 3 or req.k_max < req.k_min:
            raise HTTPException(422, "invalid k range: need k_max >= k_min >= 3")
        self.shape(req.shape_id)
        state = SessionState(shape_id=req.shape_id, annotator_id=req.annotator_id,
                             k_min=req.k_min, k_max=req.k_max,
                             fill_holes=req.fill_holes)
        session_id = uuid.uuid4().hex[:12]
        ladder = self.ladder(req.shape_id, req.k_min, req.k_max, req.fill_holes)
        shape = self.working_shape(req.shape_id, req.fill_holes)
        self._sessions[session_id] = _Session(state, ladder, shape)
        save_session(state, self._session_path(session_id))
        return session_id

    def get(self, session_id: str) -> _Session:
        with self._registry_lock:
            sess = self._sessions.get(session_id)
            if sess is None:
                path = self._session_path(session_id)
                if not path.exists():
                    raise HTTPException(404, f"unknown session {session_id!r}")
                state = load_session(path)
                ladder = self.ladder(state.shape_id, state.k_min, state.k_max,
                                     state.fill_holes)
                shape = self.working_shape(state.shape_id, state.fill_holes)
                sess = _Session(state, ladder, shape)
                self._sessions[session_id] = sess
            return sess

    # -- state payloads ------------------------------------------------------

    def _state_metrics(self, sess: _Session, index: int, step: int, pruned):
        cached = sess.metric_cache.get(index)
        if cached is None:
            skeleton = resolve_skeleton(sess.ladder, step, pruned)
            re = metrics.reconstruction_error(skeleton, sess.shape)
            ss = metrics.simplicity(skeleton)
            label = f"step k={sess.ladder.dce_k[step]}" if not pruned \
                else f"prune x{len(pruned)}"
            cached = {"index": index, "re": re, "ss": ss, "label": label}
            sess.metric_cache[index] = cached
        return cached

    def payload(self, session_id: str, sess: _Session) -> dict:
        states = replay_states(sess.state)
        step, pruned = states[sess.state.cursor]
        skeleton = resolve_skeleton(sess.ladder, step, pruned)
        graph = decompose(skeleton)
        leaf_ids = {b.id for b in graph.leaf_branches()}
        history = [self._state_metrics(sess, i, st, pr)
                   for i, (st, pr) in enumerate(states)]
        current = history[sess.state.cursor]
        return {
            "session_id": session_id,
            "shape_id": sess.state.shape_id,
            "annotator_id": sess.state.annotator_id,
            "revision": sess.state.revision,
            "cursor": sess.state.cursor,
            "n_states": len(states),
            "step": step,
            "dce_k": sess.ladder.dce_k[step],
            "n_steps": len(sess.ladder.steps),
            "pruned_branch_ids": list(pruned),
            "width": skeleton.width,
            "height": skeleton.height,
            "skeleton_points": [list(p) for p in skeleton.sorted_points()],
            "endpoints": [list(p) for p in graph.endpoints],
            "junctions": [list(p) for p in graph.junctions],
            "branches": [
                {
                    "id": b.id,
                    "path": [list(p) for p in b.path],
                    "closed": b.closed,
                    "leaf": b.id in leaf_ids,
                    "length": round(b.length, 6),
                }
                for b in graph.branches
            ],
            "re": current["re"],
            "ss": current["ss"],
            "history": history,
        }

    def mutate(self, session_id: str, revision: int, fn) -> dict:
        sess = self.get(session_id)
        with sess.lock:
            if revision != sess.state.revision:
                raise HTTPException(
                    409, f"stale revision {revision}, current {sess.state.revision}")
            sess.state = fn(sess)
            save_session(sess.state, self._session_path(session_id))
            return self.payload(session_id, sess)


def create_app(dataset_root, export_root, session_root) -> FastAPI:
    svc = AnnotationService(dataset_root, export_root, session_root)
    app = FastAPI(title="skelforge annotation service")
    app.state.service = svc

    @app.get("/shapes")
    def list_shapes():
        return {"shapes": sorted(svc.shapes())}

    @app.get("/shapes/{shape_id}.png")
    def shape_png(shape_id: str):
        item = svc.shape(shape_id)
        import io
        from PIL import Image
        import numpy as np
        buf = io.BytesIO()
        Image.fromarray(item.mask.pixels.astype(np.uint8) * 255, "L").save(
            buf, format="PNG")
        return Response(buf.getvalue(), media_type="image/png")

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSession):
        session_id = svc.create_session(req)
        sess = svc.get(session_id)
        return svc.payload(session_id, sess)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return svc.payload(session_id, svc.get(session_id))

    @app.post("/sessions/{session_id}/step")
    def step(session_id: str, req: StepRequest):
        if req.direction not in (1, -1):
            raise HTTPException(422, "direction must be +1 or -1")

        def fn(sess):
            states = replay_states(sess.state)
            cur_step, _ = states[sess.state.cursor]
            new_step = cur_step - req.direction
            if not 0 <= new_step < len(sess.ladder.steps):
                raise HTTPException(422, f"step {new_step} out of ladder bounds")
            return sess.state.with_event({"type": "step", "step": new_step})

        return svc.mutate(session_id, req.revision, fn)

    @app.post("/sessions/{session_id}/prune")
    def prune(session_id: str, req: PruneRequest):
        if not req.branch_ids:
            raise HTTPException(422, "branch_ids must be non-empty")

        def fn(sess):
            states = replay_states(sess.state)
            step_i, pruned = states[sess.state.cursor]
            skeleton = resolve_skeleton(sess.ladder, step_i, pruned)
            graph = decompose(skeleton)
            try:
                from .graph import prune_branch
                prune_branch(graph, set(req.branch_ids))
            except (NotALeafBranch, UnknownBranchId) as exc:
                raise HTTPException(422, str(exc))
            return sess.state.with_event(
                {"type": "prune", "branch_ids": sorted(req.branch_ids)})

        return svc.mutate(session_id, req.revision, fn)

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str, req: RevisionOnly):
        def fn(sess):
            if sess.state.cursor == 0:
                raise HTTPException(422, "nothing to undo")
            return sess.state.with_cursor(sess.state.cursor - 1)

        return svc.mutate(session_id, req.revision, fn)

    @app.post("/sessions/{session_id}/redo")
    def redo(session_id: str, req: RevisionOnly):
        def fn(sess):
            if sess.state.cursor >= sess.state.n_states() - 1:
                raise HTTPException(422, "nothing to redo")
            return sess.state.with_cursor(sess.state.cursor + 1)

        return svc.mutate(session_id, req.revision, fn)

    @app.post("/sessions/{session_id}/restore")
    def restore(session_id: str, req: RestoreRequest):
        def fn(sess):
            if not 0 <= req.index < sess.state.n_states():
                raise HTTPException(422, f"no history state {req.index}")
            return sess.state.with_cursor(req.index)

        return svc.mutate(session_id, req.revision, fn)

    @app.get("/sessions/{session_id}/history")
    def history(session_id: str):
        sess = svc.get(session_id)
        states = replay_states(sess.state)
        return {
            "cursor": sess.state.cursor,
            "revision": sess.state.revision,
            "history": [svc._state_metrics(sess, i, st, pr)
                        for i, (st, pr) in enumerate(states)],
        }

    @app.post("/sessions/{session_id}/export")
    def export(session_id: str):
        sess = svc.get(session_id)
        with sess.lock:
            states = replay_states(sess.state)
            step_i, pruned = states[sess.state.cursor]
            skeleton = resolve_skeleton(sess.ladder, step_i, pruned)
            provenance = {
                "shape_id": sess.state.shape_id,
                "annotator_ids": [sess.state.annotator_id],
                "k_min": sess.state.k_min,
                "k_max": sess.state.k_max,
                "dce_k": sess.ladder.dce_k[step_i],
                "step": step_i,
                "fill_holes": sess.state.fill_holes,
                "pruned_branch_ids": list(pruned),
                "tool_version": TOOL_VERSION,
            }
            record = make_gt_record(skeleton, sess.shape, provenance)
            out_dir = svc.export_root / sess.state.shape_id / session_id
            try:
                manifest = export_gt(record, out_dir)
            except SkelforgeError as exc:
                raise HTTPException(500, str(exc))
            return {"manifest_path": str(manifest)}

    @app.post("/integrate")
    def integrate_sessions(req: IntegrateRequest):
        if not req.session_ids:
            raise HTTPException(422, "session_ids must be non-empty")
        subs = []
        shape = None
        for sid in req.session_ids:
            sess = svc.get(sid)
            if sess.state.shape_id != req.shape_id:
                raise HTTPException(
                    409, f"session {sid} annotates {sess.state.shape_id!r}, "
                         f"not {req.shape_id!r}")
            states = replay_states(sess.state)
            step_i, pruned = states[sess.state.cursor]
            skeleton = resolve_skeleton(sess.ladder, step_i, pruned)
            shape = sess.shape
            subs.append(AnnotatorSubmission.create(sess.state.annotator_id,
                                                   skeleton, shape))
        result = integrate(subs, shape)
        return {
            "rationale": result.describe(),
            "votes": result.votes,
            "skeleton_points": [list(p) for p in result.skeleton.sorted_points()],
            "width": result.skeleton.width,
            "height": result.skeleton.height,
            "hints": {sub.annotator_id: round(sub.re, 6) for sub in subs},
        }

    return app
