import json
import shutil

import numpy as np
import pytest

from cascade_spotter.cli import main
from cascade_spotter.labeler import TreeEnsembleModel
from cascade_spotter.ingest import load_dataset
from cascade_spotter.tables import read_users_table

from conftest import synthetic_dump, write_dump

OUT_FILES = ("users.csv", "cascades.csv", "hashtags.csv", "run_meta.json")


@pytest.fixture(scope="module")
def dump_path(tmp_path_factory):
    objs = synthetic_dump(n_roots=25, seed=3, n_users=30)
    return write_dump(tmp_path_factory.mktemp("dump") / "dump.jsonl", objs)


@pytest.fixture(scope="module")
def processed(dump_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    assert main(["process", "--input", str(dump_path), "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def annotations_path(processed, tmp_path_factory):
    table = read_users_table(processed / "users.csv")
    median = np.median(table.X[:, 0])
    lines = ["user_id,screen_name,label"]
    for uid, row in zip(table.user_ids, table.X):
        lines.append(f"{uid},any,{1 if row[0] > median else 0}")
    path = tmp_path_factory.mktemp("ann") / "labels.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def trained(processed, annotations_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    rc = main(["train", "--input", str(processed / "users.csv"),
               "--annotations", str(annotations_path), "--out", str(out)])
    assert rc == 0
    return out


class TestProcess:
    def test_outputs_exist(self, processed):
        for name in OUT_FILES:
            assert (processed / name).exists(), name

    def test_meta_counts_match_dataset(self, processed, dump_path):
        meta = json.loads((processed / "run_meta.json").read_text())
        data = load_dataset([dump_path])
        counts = meta["counts"]
        assert counts["parsed_tweets"] == data.stats.parsed_tweets
        assert counts["cascades"] == len(data.cascades)
        assert counts["users"] == len(data.users)
        assert counts["events"] + counts["duplicate_tweets"] + counts["skipped_lines"] \
            == counts["input_lines"]
        assert meta["parameters"]["kernel"] == "exponential"
        assert meta["feature_columns"][:3] == ["followers_count", "friends_count",
                                               "statuses_count"]

    def test_users_table_readable(self, processed):
        table = read_users_table(processed / "users.csv")
        assert len(table.user_ids) > 10
        assert table.botness is None
        assert np.isfinite(table.X).all()
        assert np.all(table.influence >= 1.0 - 1e-9)

    def test_byte_identical_rerun(self, dump_path, processed, tmp_path):
        again = tmp_path / "again"
        assert main(["process", "--input", str(dump_path), "--out", str(again)]) == 0
        for name in OUT_FILES:
            assert (again / name).read_bytes() == (processed / name).read_bytes(), name

    def test_power_law_kernel_flags(self, dump_path, tmp_path):
        rc = main(["process", "--input", str(dump_path), "--out", str(tmp_path),
                   "--kernel", "plaw", "--theta", "0.5", "--c", "10"])
        assert rc == 0
        meta = json.loads((tmp_path / "run_meta.json").read_text())
        assert meta["parameters"]["kernel"] == "power-law"
        assert meta["parameters"]["theta"] == 0.5
        assert meta["parameters"]["c"] == 10.0

    def test_embeddings_extend_schema(self, dump_path, tmp_path):
        vec = tmp_path / "vectors.vec"
        vec.write_text("2 3\nhello 1 0 0\nworld 0 1 0\n")
        out = tmp_path / "emb"
        rc = main(["process", "--input", str(dump_path), "--out", str(out),
                   "--embeddings", str(vec)])
        assert rc == 0
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["parameters"]["embedding_dim"] == 3
        assert "desc_emb_0" in meta["feature_columns"]
        assert "content_emb_2" in meta["feature_columns"]

    def test_noise_only_dump(self, tmp_path):
        dump = tmp_path / "noise.jsonl"
        dump.write_text('{"delete": {"status": {"id": 1}}}\n\n')
        out = tmp_path / "empty"
        assert main(["process", "--input", str(dump), "--out", str(out)]) == 0
        users = (out / "users.csv").read_text().strip().split("\r\n")
        assert len(users) == 1  # header only
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["counts"]["users"] == 0
        assert meta["counts"]["cascades"] == 0

    def test_missing_input_is_io_error(self, tmp_path):
        out = tmp_path / "never"
        rc = main(["process", "--input", str(tmp_path / "no_such.jsonl"),
                   "--out", str(out)])
        assert rc == 1
        assert not any(out.glob("*.csv"))

    def test_missing_out_dir_is_validation_error(self, dump_path, monkeypatch):
        monkeypatch.delenv("CASCADE_SPOTTER_OUT", raising=False)
        assert main(["process", "--input", str(dump_path)]) == 2

    def test_out_dir_from_environment(self, dump_path, tmp_path, monkeypatch):
        monkeypatch.setenv("CASCADE_SPOTTER_OUT", str(tmp_path / "env_out"))
        assert main(["process", "--input", str(dump_path)]) == 0
        assert (tmp_path / "env_out" / "users.csv").exists()


class TestTrain:
    def test_model_and_report_written(self, trained):
        model = TreeEnsembleModel.load(trained / "model.json")
        assert len(model.trees) > 0
        assert model.metadata["cv_auc"] == pytest.approx(
            json.loads((trained / "cv_report.json").read_text())["cv_auc"])
        report = json.loads((trained / "cv_report.json").read_text())
        assert report["mode"] == "train"
        assert report["n_labeled"] >= 10

    def test_fine_tune_appends_rounds(self, processed, annotations_path, trained, tmp_path):
        rc = main(["train", "--input", str(processed / "users.csv"),
                   "--annotations", str(annotations_path),
                   "--fine-tune", str(trained / "model.json"),
                   "--rounds", "4", "--out", str(tmp_path)])
        assert rc == 0
        base = TreeEnsembleModel.load(trained / "model.json")
        tuned = TreeEnsembleModel.load(tmp_path / "model.json")
        assert len(tuned.trees) == len(base.trees) + 4
        report = json.loads((tmp_path / "cv_report.json").read_text())
        assert report["mode"] == "fine_tune"

    def test_degenerate_labels_rejected(self, processed, tmp_path):
        table = read_users_table(processed / "users.csv")
        ann = tmp_path / "all_ones.csv"
        ann.write_text("user_id,screen_name,label\n" +
                       "".join(f"{uid},x,1\n" for uid in table.user_ids))
        out = tmp_path / "out"
        rc = main(["train", "--input", str(processed / "users.csv"),
                   "--annotations", str(ann), "--out", str(out)])
        assert rc == 2
        assert not (out / "model.json").exists()

    def test_unjoinable_annotations_rejected(self, processed, tmp_path):
        ann = tmp_path / "bad.csv"
        ann.write_text("user_id,screen_name,label\nnobody,x,1\n")
        rc = main(["train", "--input", str(processed / "users.csv"),
                   "--annotations", str(ann), "--out", str(tmp_path)])
        assert rc == 2


class TestLabel:
    def test_fills_only_botness(self, processed, trained, tmp_path):
        work = tmp_path / "work"
        work.mkdir()
        shutil.copy(processed / "users.csv", work / "users.csv")
        shutil.copy(processed / "run_meta.json", work / "run_meta.json")
        before = (work / "users.csv").read_text(encoding="utf-8")
        rc = main(["label", "--input", str(work / "users.csv"),
                   "--model", str(trained / "model.json"), "--out", str(work)])
        assert rc == 0
        table = read_users_table(work / "users.csv")
        assert table.botness is not None
        assert np.all((table.botness > 0) & (table.botness < 1))
        # every cell except the botness column is unchanged
        after = (work / "users.csv").read_text(encoding="utf-8")
        strip = lambda text: [
            ",".join(line.split(",")[:9]) for line in text.splitlines()]
        assert strip(before)[:3] == strip(after)[:3]

    def test_missing_model_is_io_error(self, processed, tmp_path):
        rc = main(["label", "--input", str(processed / "users.csv"),
                   "--model", str(tmp_path / "ghost.json"), "--out", str(tmp_path)])
        assert rc == 1

    def test_schema_mismatch_is_validation_error(self, dump_path, trained, tmp_path):
        vec = tmp_path / "v.vec"
        vec.write_text("1 2\nhello 1 0\n")
        out = tmp_path / "emb_out"
        assert main(["process", "--input", str(dump_path), "--out", str(out),
                     "--embeddings", str(vec)]) == 0
        rc = main(["label", "--input", str(out / "users.csv"),
                   "--model", str(trained / "model.json"), "--out", str(out)])
        assert rc == 2


class TestServe:
    def test_unprocessed_dir_rejected(self, tmp_path):
        rc = main(["serve", "--input", str(tmp_path), "--out", str(tmp_path)])
        assert rc == 1


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
