import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from skelforge import build_ladder, import_gt, reconstruction_error, simplicity
from skelforge.service import create_app
from conftest import disc, y_mask


@pytest.fixture(scope="module")
def roots(tmp_path_factory):
    base = tmp_path_factory.mktemp("svc")
    dataset = base / "shapes"
    dataset.mkdir()
    y_mask().save_png(dataset / "y.png")
    disc(32, 32, 16, 16, 10).save_png(dataset / "disc.png")
    return dataset, base / "exports", base / "sessions"


@pytest.fixture()
def client(roots):
    dataset, exports, sessions = roots
    app = create_app(dataset, exports, sessions)
    return TestClient(app)


def make_session(client, shape_id="y", **kw):
    body = {"shape_id": shape_id, "annotator_id": "tester", "k_min": 3,
            "k_max": 20}
    body.update(kw)
    r = client.post("/sessions", json=body)
    assert r.status_code == 201, r.text
    return r.json()


def skeleton_of(payload) -> frozenset:
    return frozenset(tuple(p) for p in payload["skeleton_points"])


class TestSessionLifecycle:
    def test_create_valid_shape(self, client):
        s = make_session(client)
        assert s["step"] == 0
        assert s["revision"] == 0
        assert len(s["branches"]) >= 1
        assert s["endpoints"]
        assert 0.0 <= s["re"] <= 1.0

    def test_unknown_shape_404(self, client):
        r = client.post("/sessions", json={"shape_id": "nope",
                                           "annotator_id": "x"})
        assert r.status_code == 404

    def test_invalid_k_range_422(self, client):
        r = client.post("/sessions", json={"shape_id": "y", "annotator_id": "x",
                                           "k_min": 2, "k_max": 1})
        assert r.status_code == 422

    def test_disc_has_at_most_one_branch(self, client):
        s = make_session(client, shape_id="disc", k_min=4, k_max=12)
        assert len(s["branches"]) <= 1

    def test_metrics_match_direct_recomputation(self, client, roots):
        s = make_session(client)
        dataset, _, _ = roots
        from skelforge import BinaryMask, fill_holes
        mask = fill_holes(BinaryMask.load_png(dataset / "y.png"))
        ladder = build_ladder(mask, 3, 20, fill_holes_first=False)
        skel = ladder.steps[0].subset(skeleton_of(s))
        assert s["re"] == pytest.approx(reconstruction_error(skel, mask), abs=1e-9)
        assert s["ss"] == pytest.approx(simplicity(skel), abs=1e-9)


class TestStep:
    def test_minus_moves_simpler_and_re_grows(self, client):
        s = make_session(client)
        r = client.post(f"/sessions/{s['session_id']}/step",
                        json={"direction": -1, "revision": s["revision"]})
        assert r.status_code == 200
        s2 = r.json()
        assert s2["step"] == 1
        assert s2["re"] >= s["re"] - 1e-9
        assert s2["revision"] == 1

    def test_plus_at_step_zero_422(self, client):
        s = make_session(client)
        r = client.post(f"/sessions/{s['session_id']}/step",
                        json={"direction": 1, "revision": s["revision"]})
        assert r.status_code == 422

    def test_stale_revision_409(self, client):
        s = make_session(client)
        r = client.post(f"/sessions/{s['session_id']}/step",
                        json={"direction": -1, "revision": 99})
        assert r.status_code == 409

    def test_alternating_returns_identical_pixels(self, client):
        s = make_session(client)
        sid = s["session_id"]
        rev = s["revision"]
        before = skeleton_of(s)
        r1 = client.post(f"/sessions/{sid}/step",
                         json={"direction": -1, "revision": rev}).json()
        r2 = client.post(f"/sessions/{sid}/step",
                         json={"direction": 1, "revision": r1["revision"]}).json()
        assert skeleton_of(r2) == before


class TestPrune:
    def leafy_session(self, client):
        s = make_session(client)
        sid = s["session_id"]
        # step down until at least one leaf branch exists
        while not any(b["leaf"] for b in s["branches"]):
            s = client.post(f"/sessions/{sid}/step",
                            json={"direction": -1,
                                  "revision": s["revision"]}).json()
        return sid, s

    def test_prune_leaf_drops_endpoint(self, client):
        sid, s = self.leafy_session(client)
        leaf = next(b for b in s["branches"] if b["leaf"])
        r = client.post(f"/sessions/{sid}/prune",
                        json={"branch_ids": [leaf["id"]],
                              "revision": s["revision"]})
        assert r.status_code == 200
        s2 = r.json()
        assert len(s2["endpoints"]) == len(s["endpoints"]) - 1
        assert s2["re"] >= s["re"] - 1e-9

    def test_prune_non_leaf_422(self, client):
        sid, s = self.leafy_session(client)
        non_leaf = [b for b in s["branches"] if not b["leaf"]]
        if not non_leaf:
            pytest.skip("fixture has no interior branch at this step")
        r = client.post(f"/sessions/{sid}/prune",
                        json={"branch_ids": [non_leaf[0]["id"]],
                              "revision": s["revision"]})
        assert r.status_code == 422

    def test_unknown_branch_422(self, client):
        sid, s = self.leafy_session(client)
        r = client.post(f"/sessions/{sid}/prune",
                        json={"branch_ids": ["bogus"], "revision": s["revision"]})
        assert r.status_code == 422

    def test_prune_undo_pixel_identical(self, client):
        sid, s = self.leafy_session(client)
        before = skeleton_of(s)
        leaf = next(b for b in s["branches"] if b["leaf"])
        s2 = client.post(f"/sessions/{sid}/prune",
                         json={"branch_ids": [leaf["id"]],
                               "revision": s["revision"]}).json()
        assert skeleton_of(s2) != before
        s3 = client.post(f"/sessions/{sid}/undo",
                         json={"revision": s2["revision"]}).json()
        assert skeleton_of(s3) == before


class TestHistoryUndoRedo:
    def test_undo_at_start_422(self, client):
        s = make_session(client)
        r = client.post(f"/sessions/{s['session_id']}/undo",
                        json={"revision": s["revision"]})
        assert r.status_code == 422

    def test_redo_at_tip_422(self, client):
        s = make_session(client)
        r = client.post(f"/sessions/{s['session_id']}/redo",
                        json={"revision": s["revision"]})
        assert r.status_code == 422

    def test_history_grows_and_restores(self, client):
        s = make_session(client)
        sid = s["session_id"]
        s1 = client.post(f"/sessions/{sid}/step",
                         json={"direction": -1, "revision": s["revision"]}).json()
        s2 = client.post(f"/sessions/{sid}/step",
                         json={"direction": -1, "revision": s1["revision"]}).json()
        h = client.get(f"/sessions/{sid}/history").json()
        assert len(h["history"]) == 3
        res = [e["re"] for e in h["history"]]
        assert res == sorted(res)
        restored = client.post(f"/sessions/{sid}/restore",
                               json={"index": 0,
                                     "revision": s2["revision"]}).json()
        assert restored["cursor"] == 0
        assert skeleton_of(restored) == skeleton_of(s)

    def test_history_immutable_after_undo_mutation(self, client):
        sid, s = TestPrune().leafy_session(client)
        leaf = next(b for b in s["branches"] if b["leaf"])
        s2 = client.post(f"/sessions/{sid}/prune",
                         json={"branch_ids": [leaf["id"]],
                               "revision": s["revision"]}).json()
        s3 = client.post(f"/sessions/{sid}/undo",
                         json={"revision": s2["revision"]}).json()
        # new mutation after undo appends, never deletes
        leaf2 = next(b for b in s3["branches"] if b["leaf"])
        s4 = client.post(f"/sessions/{sid}/prune",
                         json={"branch_ids": [leaf2["id"]],
                               "revision": s3["revision"]}).json()
        assert s4["n_states"] == s2["n_states"] + 1


class TestPersistence:
    def test_restart_loses_nothing(self, roots):
        dataset, exports, sessions = roots
        app1 = create_app(dataset, exports, sessions)
        c1 = TestClient(app1)
        s = make_session(c1)
        sid = s["session_id"]
        s1 = c1.post(f"/sessions/{sid}/step",
                     json={"direction": -1, "revision": s["revision"]}).json()
        # fresh service instance over the same roots
        app2 = create_app(dataset, exports, sessions)
        c2 = TestClient(app2)
        s2 = c2.get(f"/sessions/{sid}").json()
        assert skeleton_of(s2) == skeleton_of(s1)
        assert s2["revision"] == s1["revision"]


class TestExportIntegrate:
    def test_export_round_trips(self, client):
        s = make_session(client)
        sid = s["session_id"]
        r = client.post(f"/sessions/{sid}/export")
        assert r.status_code == 200
        manifest = Path(r.json()["manifest_path"])
        assert manifest.exists()
        record = import_gt(manifest.parent)
        assert frozenset(
            (int(x), int(y)) for y, x in
            zip(*np.nonzero(record.skeleton_matrix.pixels))) == skeleton_of(s)

    def test_integrate_max_votes(self, client):
        a = make_session(client)
        b = make_session(client)
        c = make_session(client)
        sid_c = c["session_id"]
        leaf = next(br for br in c["branches"] if br["leaf"])
        client.post(f"/sessions/{sid_c}/prune",
                    json={"branch_ids": [leaf["id"]],
                          "revision": c["revision"]})
        r = client.post("/integrate", json={
            "shape_id": "y",
            "session_ids": [a["session_id"], b["session_id"], sid_c]})
        assert r.status_code == 200
        doc = r.json()
        assert doc["rationale"] == "max_votes(2)"
        assert frozenset(tuple(p) for p in doc["skeleton_points"]) == skeleton_of(a)

    def test_integrate_mixed_shapes_409(self, client):
        a = make_session(client, shape_id="y")
        b = make_session(client, shape_id="disc", k_min=4, k_max=12)
        r = client.post("/integrate", json={
            "shape_id": "y", "session_ids": [a["session_id"], b["session_id"]]})
        assert r.status_code == 409

    def test_unknown_session_404(self, client):
        r = client.get("/sessions/doesnotexist")
        assert r.status_code == 404


class TestShapes:
    def test_list_and_png(self, client):
        r = client.get("/shapes")
        assert r.status_code == 200
        assert set(r.json()["shapes"]) == {"disc", "y"}
        png = client.get("/shapes/y.png")
        assert png.status_code == 200
        assert png.headers["content-type"] == "image/png"
