"""CSV/JSON table layouts shared by the CLI and the explorer service.

users.csv holds display columns first (see DISPLAY_COLUMNS), then
`influence` and `botness`, then the full numeric feature block in schema
order.  run_meta.json records the feature column names so readers never
have to guess; when it is missing the feature block is recovered by name
prefix.  All CSVs are RFC 4180 (CRLF, quoted as needed) and floats are
written with repr, which round-trips binary64 exactly, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from cascade_spotter.features import USER_STAT_NAMES, FeatureMatrix
from cascade_spotter.influence import InfluenceReport
from cascade_spotter.ingest import Cascade, UserRecord

USERS_CSV = "users.csv"
CASCADES_CSV = "cascades.csv"
HASHTAGS_CSV = "hashtags.csv"
RUN_META_JSON = "run_meta.json"
ANNOTATIONS_CSV = "annotations.csv"

DISPLAY_COLUMNS = (
    "user_id",
    "screen_name",
    "location",
    "profile_image_url",
    "description",
    "hashtags_used",
    "cascade_ids",
    "tweets_in_dump",
)

_FEATURE_PREFIXES = ("desc_emb_", "content_emb_", "tfidf_")


def format_number(x: float) -> str:
    """Shortest exact decimal; integral values drop the trailing .0"""
    f = float(x)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def encode_hashtags(counts: dict[str, int]) -> str:
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return " ".join(f"{tag}:{count}" for tag, count in ranked)


def decode_hashtags(text: str) -> list[tuple[str, int]]:
    out = []
    for part in text.split():
        tag, _, count = part.rpartition(":")
        out.append((tag, int(count)))
    return out


def _writer(buf: io.StringIO):
    return csv.writer(buf, lineterminator="\r\n")


def render_users_csv(
    users: Sequence[UserRecord],
    feats: FeatureMatrix,
    influence: dict[str, float],
    botness: Optional[np.ndarray] = None,
) -> str:
    assert feats.user_ids == tuple(u.user_id for u in users)
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(list(DISPLAY_COLUMNS) + ["influence", "botness"] + list(feats.names))
    for i, u in enumerate(users):
        row = [
            u.user_id,
            u.screen_name,
            u.location,
            u.profile_image_url,
            u.description,
            encode_hashtags(u.hashtag_counts),
            " ".join(u.cascade_ids),
            str(u.tweets_in_dump),
            format_number(influence.get(u.user_id, 0.0)),
            format_number(botness[i]) if botness is not None else "",
        ]
        row.extend(format_number(v) for v in feats.values[i])
        w.writerow(row)
    return buf.getvalue()


def render_cascades_csv(cascades: Sequence[Cascade], report: InfluenceReport) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["cascade_id", "tweet_id", "user_id", "rel_time", "mark",
                "expected_parent", "text"])
    for cascade, res in zip(cascades, report.cascades):
        for k, event in enumerate(cascade.events):
            parent = res.expected_parent[k]
            w.writerow([
                cascade.cascade_id,
                event.tweet_id,
                event.user_id,
                format_number(event.rel_time),
                format_number(event.mark),
                "" if parent is None else str(parent),
                cascade.root_text if k == 0 else "",
            ])
    return buf.getvalue()


def render_hashtags_csv(vocab) -> str:
    # vocabulary summary; the per-user TF-IDF block lives in users.csv
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["hashtag", "rank", "df", "idf"])
    idf = vocab.idf()
    for rank, tag in enumerate(vocab.tags):
        w.writerow([tag, str(rank), str(vocab.df[rank]), repr(float(idf[rank]))])
    return buf.getvalue()


def render_run_meta(meta: dict) -> str:
    return json.dumps(meta, indent=2, ensure_ascii=False) + "\n"


def infer_feature_columns(header: Sequence[str]) -> list[str]:
    stats = set(USER_STAT_NAMES)
    return [
        name for name in header
        if name in stats or name.startswith(_FEATURE_PREFIXES)
    ]


@dataclass
class UserTable:
    """users.csv pulled back into memory: display data plus the numeric
    feature block aligned row-for-row."""

    user_ids: list[str]
    display: list[dict[str, str]]
    feature_names: tuple[str, ...]
    X: np.ndarray
    influence: np.ndarray
    botness: Optional[np.ndarray]  # None when the column was empty

    def row_of(self, user_id: str) -> Optional[int]:
        try:
            return self.user_ids.index(user_id)
        except ValueError:
            return None


def read_users_table(path, feature_names: Optional[Sequence[str]] = None) -> UserTable:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if feature_names is None:
        meta_path = path.parent / RUN_META_JSON
        if meta_path.exists():
            feature_names = json.loads(meta_path.read_text(encoding="utf-8")).get(
                "feature_columns"
            )
    if feature_names is None:
        feature_names = infer_feature_columns(header)
    feature_names = tuple(feature_names)

    col = {name: i for i, name in enumerate(header)}
    missing = [n for n in feature_names if n not in col]
    if missing:
        raise ValueError(f"{path}: missing feature columns {missing!r}")
    for required in ("user_id", "influence"):
        if required not in col:
            raise ValueError(f"{path}: missing required column {required!r}")

    user_ids = [r[col["user_id"]] for r in rows]
    display = [
        {name: r[col[name]] for name in DISPLAY_COLUMNS if name in col} for r in rows
    ]
    fidx = [col[n] for n in feature_names]
    X = np.array([[float(r[i]) for i in fidx] for r in rows], dtype=np.float64) \
        if rows else np.zeros((0, len(feature_names)))
    influence = np.array([float(r[col["influence"]]) for r in rows])
    botness = None
    if "botness" in col and rows and all(r[col["botness"]] != "" for r in rows):
        botness = np.array([float(r[col["botness"]]) for r in rows])
    return UserTable(user_ids, display, feature_names, X, influence, botness)


@dataclass
class CascadeRow:
    tweet_id: str
    user_id: str
    rel_time: float
    mark: float
    expected_parent: Optional[int]


@dataclass
class CascadeTable:
    cascade_id: str
    root_text: str
    events: list[CascadeRow]


def read_cascades_table(path) -> dict[str, CascadeTable]:
    out: dict[str, CascadeTable] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cid = row["cascade_id"]
            table = out.get(cid)
            if table is None:
                table = out[cid] = CascadeTable(cid, row["text"], [])
            table.events.append(CascadeRow(
                tweet_id=row["tweet_id"],
                user_id=row["user_id"],
                rel_time=float(row["rel_time"]),
                mark=float(row["mark"]),
                expected_parent=int(row["expected_parent"]) if row["expected_parent"] else None,
            ))
    return out
