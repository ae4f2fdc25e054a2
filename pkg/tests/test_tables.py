import numpy as np
import pytest

from cascade_spotter.features import USER_STAT_NAMES, assemble_features
from cascade_spotter.influence import influence_report
from cascade_spotter.ingest import UserRecord, load_dataset
from cascade_spotter.tables import (
    decode_hashtags,
    encode_hashtags,
    format_number,
    infer_feature_columns,
    read_cascades_table,
    read_users_table,
    render_cascades_csv,
    render_users_csv,
)


class TestScalars:
    def test_format_number_integers(self):
        assert format_number(3.0) == "3"
        assert format_number(-12.0) == "-12"
        assert format_number(0.0) == "0"

    def test_format_number_round_trips_binary64(self):
        for x in (0.1 + 0.2, 1 / 3, 6.8e-4, 1e-300):
            assert float(format_number(x)) == x

    def test_huge_magnitudes_stay_exact(self):
        assert float(format_number(1e20)) == 1e20

    def test_hashtag_encoding(self):
        counts = {"b": 2, "a": 2, "z": 9}
        text = encode_hashtags(counts)
        assert text == "z:9 a:2 b:2"  # count desc, then tag
        assert decode_hashtags(text) == [("z", 9), ("a", 2), ("b", 2)]
        assert decode_hashtags("") == []

    def test_hashtag_with_colon(self):
        text = encode_hashtags({"a:b": 3})
        assert decode_hashtags(text) == [("a:b", 3)]

    def test_infer_feature_columns(self):
        header = ["user_id", "influence", "botness", "followers_count",
                  "desc_emb_0", "content_emb_1", "tfidf_x", "location"]
        got = infer_feature_columns(header)
        assert got == ["followers_count", "desc_emb_0", "content_emb_1", "tfidf_x"]


class TestRoundTrip:
    def build(self, tiny_dump, tmp_path, botness=None):
        result = load_dataset([tiny_dump])
        feats = assemble_features(result.users)
        report = influence_report(result.cascades)
        text = render_users_csv(result.users, feats, report.user_influence,
                                botness=botness)
        path = tmp_path / "users.csv"
        path.write_text(text, encoding="utf-8", newline="")
        return result, feats, report, path

    def test_users_csv_round_trip(self, tiny_dump, tmp_path):
        result, feats, report, path = self.build(tiny_dump, tmp_path)
        table = read_users_table(path)
        assert tuple(table.user_ids) == feats.user_ids
        assert table.feature_names == feats.names
        assert np.array_equal(table.X, feats.values)
        for uid, inf in zip(table.user_ids, table.influence):
            assert inf == pytest.approx(report.user_influence[uid])
        assert table.botness is None

    def test_botness_column_round_trip(self, tiny_dump, tmp_path):
        botness = np.array([0.25, 0.5, 0.75])
        *_, path = self.build(tiny_dump, tmp_path, botness=botness)
        table = read_users_table(path)
        assert np.array_equal(table.botness, botness)

    def test_display_fields_survive(self, tiny_dump, tmp_path):
        result, _, _, path = self.build(tiny_dump, tmp_path)
        table = read_users_table(path)
        row = table.display[table.row_of("2")]
        assert row["screen_name"] == "user2"
        assert decode_hashtags(row["hashtags_used"]) == [("news", 1)]
        assert set(row["cascade_ids"].split()) == {"100", "103"}

    def test_explicit_schema_check(self, tiny_dump, tmp_path):
        *_, path = self.build(tiny_dump, tmp_path)
        with pytest.raises(ValueError):
            read_users_table(path, feature_names=("not_a_column",))
        table = read_users_table(path, feature_names=USER_STAT_NAMES)
        assert table.feature_names == tuple(USER_STAT_NAMES)

    def test_cascades_csv_round_trip(self, tiny_dump, tmp_path):
        result = load_dataset([tiny_dump])
        report = influence_report(result.cascades)
        text = render_cascades_csv(result.cascades, report)
        path = tmp_path / "cascades.csv"
        path.write_text(text, encoding="utf-8", newline="")
        tables = read_cascades_table(path)
        assert set(tables) == {"100", "103"}
        c = tables["100"]
        assert [r.tweet_id for r in c.events] == ["100", "101", "102"]
        assert c.events[0].expected_parent is None
        assert c.events[1].expected_parent == 0
        assert c.root_text == "root one #News"
        assert [r.rel_time for r in c.events] == [0.0, 60.0, 120.0]
        order = [casc.cascade_id for casc in result.cascades]
        want = report.cascades[order.index("100")]
        assert [r.expected_parent for r in c.events] == list(want.expected_parent)

    def test_crlf_line_endings(self, tiny_dump, tmp_path):
        *_, path = self.build(tiny_dump, tmp_path)
        raw = path.read_bytes()
        assert b"\r\n" in raw
        assert b"\r\r" not in raw
