import numpy as np
import pytest
from fastapi.testclient import TestClient

from cascade_spotter.cli import main
from cascade_spotter.labeler import TreeEnsembleModel, load_annotations
from cascade_spotter.service import create_app
from cascade_spotter.tables import read_users_table

from conftest import synthetic_dump, write_dump


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    """Processed directory plus a trained model, shared read-only."""
    dump = write_dump(tmp_path_factory.mktemp("dump") / "dump.jsonl",
                      synthetic_dump(n_roots=20, seed=5, n_users=25))
    out = tmp_path_factory.mktemp("served")
    assert main(["process", "--input", str(dump), "--out", str(out)]) == 0
    table = read_users_table(out / "users.csv")
    median = np.median(table.X[:, 0])
    ann = out.parent / "labels.csv"
    ann.write_text("user_id,screen_name,label\n" + "".join(
        f"{uid},x,{1 if row[0] > median else 0}\n"
        for uid, row in zip(table.user_ids, table.X)))
    assert main(["train", "--input", str(out / "users.csv"),
                 "--annotations", str(ann), "--out", str(out)]) == 0
    return out


@pytest.fixture
def client(data_dir, tmp_path):
    """Each test gets its own working copy so annotations don't leak."""
    import shutil

    work = tmp_path / "dir"
    shutil.copytree(data_dir, work)
    app = create_app(work, model_path=work / "model.json")
    with TestClient(app) as c:
        c.work_dir = work
        yield c


class TestScatter:
    def test_shape_and_version(self, client):
        doc = client.get("/api/scatter").json()
        assert doc["scores_version"] == 1
        assert doc["total_users"] == len(doc["points"])  # fewer users than cap
        p = doc["points"][0]
        assert set(p) == {"user_id", "screen_name", "botness",
                          "influence_percentile", "top_hashtag"}
        assert 0.0 <= p["botness"] <= 1.0
        assert 0.0 <= p["influence_percentile"] <= 100.0

    def test_density_covers_everyone(self, client):
        doc = client.get("/api/scatter").json()
        density = doc["density"]
        assert density["x_bins"] == density["y_bins"] == 50
        assert sum(sum(row) for row in density["counts"]) == doc["total_users"]

    def test_sample_is_capped_and_seeded(self, client):
        a = client.get("/api/scatter", params={"n": 4, "seed": 9}).json()
        b = client.get("/api/scatter", params={"n": 4, "seed": 9}).json()
        assert len(a["points"]) == 4
        assert a["points"] == b["points"]
        c = client.get("/api/scatter", params={"n": 4, "seed": 10}).json()
        assert [p["user_id"] for p in c["points"]] != [p["user_id"] for p in a["points"]]

    def test_nonpositive_n_rejected(self, client):
        assert client.get("/api/scatter", params={"n": 0}).status_code == 400

    def test_oversized_n_clamps(self, client):
        doc = client.get("/api/scatter", params={"n": 10_000}).json()
        assert len(doc["points"]) == doc["total_users"]


class TestDetails:
    def test_user_detail(self, client):
        uid = client.get("/api/scatter").json()["points"][0]["user_id"]
        doc = client.get(f"/api/users/{uid}").json()
        assert doc["user_id"] == uid
        assert doc["followers_count"] >= 0
        assert isinstance(doc["hashtags"], list)
        assert doc["cascade_ids"]
        assert 0.0 <= doc["botness"] <= 1.0
        assert doc["influence"] >= 1.0 - 1e-9

    def test_unknown_user_404(self, client):
        assert client.get("/api/users/zzz").status_code == 404

    def test_cascade_detail(self, client):
        uid_doc = client.get("/api/scatter").json()["points"][0]["user_id"]
        cid = client.get(f"/api/users/{uid_doc}").json()["cascade_ids"][0]
        doc = client.get(f"/api/cascades/{cid}").json()
        events = doc["events"]
        assert events[0]["expected_parent"] is None
        assert events[0]["rel_time"] == 0.0
        assert [e["index"] for e in events] == list(range(len(events)))
        for e in events[1:]:
            assert 0 <= e["expected_parent"] < e["index"] + 1
        assert doc["root_text"].startswith("original")

    def test_unknown_cascade_404(self, client):
        assert client.get("/api/cascades/zzz").status_code == 404

    def test_health(self, client):
        doc = client.get("/health").json()
        assert doc["status"] == "ok"
        assert doc["model"] is True
        assert doc["users"] > 0

    def test_index_page(self, client):
        r = client.get("/")
        assert r.status_code == 200
        assert "explorer" in r.text


class TestAnnotate:
    def test_accepted_and_persisted(self, client):
        uid = client.get("/api/scatter").json()["points"][0]["user_id"]
        r = client.post("/api/annotations", json={"user_id": uid, "label": 0.0})
        assert r.status_code == 204
        records = load_annotations(client.work_dir / "annotations.csv")
        assert records[-1].user_id == uid
        assert records[-1].label == 0.0

    def test_latest_annotation_wins(self, client):
        uid = client.get("/api/scatter").json()["points"][0]["user_id"]
        client.post("/api/annotations", json={"user_id": uid, "label": 0.0})
        client.post("/api/annotations", json={"user_id": uid, "label": 1.0})
        state = client.app.state.explorer
        assert state.labeled_annotations()[uid] == 1.0

    def test_unknown_user_404(self, client):
        r = client.post("/api/annotations", json={"user_id": "zzz", "label": 1.0})
        assert r.status_code == 404

    def test_out_of_range_label_422(self, client):
        uid = client.get("/api/scatter").json()["points"][0]["user_id"]
        r = client.post("/api/annotations", json={"user_id": uid, "label": 1.5})
        assert r.status_code == 422


class TestRetrain:
    def highest_scoring_user(self, client):
        doc = client.get("/api/scatter", params={"n": 1000}).json()
        return max(doc["points"], key=lambda p: p["botness"])

    def test_annotate_then_retrain_lowers_score(self, client):
        target = self.highest_scoring_user(client)
        uid = target["user_id"]
        client.post("/api/annotations", json={"user_id": uid, "label": 0.0})
        r = client.post("/api/retrain", json={"rounds": 5})
        assert r.status_code == 200
        assert r.json()["new_scores_version"] == 2
        after = client.get(f"/api/users/{uid}").json()
        assert after["botness"] < target["botness"]
        assert after["scores_version"] == 2
        # the fine-tuned model was persisted for the next serve
        active = TreeEnsembleModel.load(client.work_dir / "model_active.json")
        base = TreeEnsembleModel.load(client.work_dir / "model.json")
        assert len(active.trees) == len(base.trees) + 5

    def test_version_bumps_every_retrain(self, client):
        uid = self.highest_scoring_user(client)["user_id"]
        client.post("/api/annotations", json={"user_id": uid, "label": 0.0})
        assert client.post("/api/retrain", json={}).json()["new_scores_version"] == 2
        assert client.post("/api/retrain", json={}).json()["new_scores_version"] == 3

    def test_no_annotations_409(self, client):
        assert client.post("/api/retrain", json={}).status_code == 409

    def test_busy_409(self, client):
        uid = self.highest_scoring_user(client)["user_id"]
        client.post("/api/annotations", json={"user_id": uid, "label": 0.0})
        state = client.app.state.explorer
        assert state.retrain_lock.acquire(blocking=False)
        try:
            r = client.post("/api/retrain", json={})
            assert r.status_code == 409
            assert "in flight" in r.json()["detail"]
        finally:
            state.retrain_lock.release()
        assert client.post("/api/retrain", json={}).status_code == 200

    def test_invalid_rounds_422(self, client):
        assert client.post("/api/retrain", json={"rounds": 0}).status_code == 422

    def test_no_model_409(self, data_dir, tmp_path):
        import shutil

        work = tmp_path / "nomodel"
        shutil.copytree(data_dir, work)
        app = create_app(work, model_path=None)
        with TestClient(app) as c:
            uid = c.get("/api/scatter").json()["points"][0]["user_id"]
            c.post("/api/annotations", json={"user_id": uid, "label": 1.0})
            assert c.post("/api/retrain", json={}).status_code == 409
            # without a model and with no stored scores, botness is neutral
            assert c.get(f"/api/users/{uid}").json()["botness"] == 0.5


class TestRestart:
    def test_annotations_survive_and_feed_later_retrains(self, data_dir, tmp_path):
        import shutil

        work = tmp_path / "dir"
        shutil.copytree(data_dir, work)
        app = create_app(work, model_path=work / "model.json")
        with TestClient(app) as c:
            uid = c.get("/api/scatter").json()["points"][0]["user_id"]
            c.post("/api/annotations", json={"user_id": uid, "label": 0.0})

        # fresh process over the same directory sees the annotation
        app2 = create_app(work, model_path=work / "model.json")
        with TestClient(app2) as c2:
            r = c2.post("/api/retrain", json={"rounds": 2})
            assert r.status_code == 200

    def test_serve_prefers_active_model(self, data_dir, tmp_path):
        import shutil

        work = tmp_path / "dir"
        shutil.copytree(data_dir, work)
        app = create_app(work, model_path=work / "model.json")
        with TestClient(app) as c:
            uid = c.get("/api/scatter").json()["points"][0]["user_id"]
            c.post("/api/annotations", json={"user_id": uid, "label": 0.0})
            c.post("/api/retrain", json={"rounds": 3})

        base = TreeEnsembleModel.load(work / "model.json")
        active = TreeEnsembleModel.load(work / "model_active.json")
        assert len(active.trees) == len(base.trees) + 3
