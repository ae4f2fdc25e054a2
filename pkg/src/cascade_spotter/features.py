"""Per-user feature engineering: profile statistics, text embeddings, and
hashtag TF-IDF.

Three blocks are concatenated per user, in this order:

1. profile/activity statistics (fixed 18-name schema, see USER_STAT_NAMES)
2. description embedding (d values) and tweet-content embedding (d values),
   both zero vectors when no embedding table is supplied
3. hashtag TF-IDF over the vocabulary of the most frequent hashtags

The content embedding averages per-tweet embeddings, each of which averages
word vectors; the two-level order matters when tweet lengths differ.  The
resulting column schema is recorded in FeatureMatrix.names and persisted
with trained models, so feature alignment is by name, never by position.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from cascade_spotter.ingest import UserRecord

log = logging.getLogger(__name__)

DEFAULT_VOCAB_SIZE = 1000
SECONDS_PER_DAY = 86400.0

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_MENTION_RE = re.compile(r"@\w+")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

USER_STAT_NAMES = (
    "followers_count",
    "friends_count",
    "statuses_count",
    "favourites_count",
    "listed_count",
    "verified",
    "default_profile",
    "default_profile_image",
    "account_age_days",
    "follower_friend_ratio",
    "statuses_per_day",
    "retweet_fraction",
    "hashtags_per_tweet",
    "mentions_per_tweet",
    "urls_per_tweet",
    "screen_name_length",
    "screen_name_digits",
    "description_length",
)


@dataclass(frozen=True)
class EmbeddingTable:
    """Word to vector map loaded from the common text layout: a
    "<vocab_count> <dimension>" header line, then one word and d
    space-separated decimals per line.  Lookup is lowercase."""

    dimension: int
    vectors: dict[str, np.ndarray] = field(repr=False)

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        vectors: dict[str, np.ndarray] = {}
        dim = 0
        with open(path, encoding="utf-8", errors="replace") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: expected '<count> <dim>' header line")
            dim = int(header[1])
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    log.warning("%s:%d: expected %d values, skipping", path, lineno, dim)
                    continue
                try:
                    vec = np.array(parts[1:], dtype=np.float64)
                except ValueError:
                    log.warning("%s:%d: non-numeric vector, skipping", path, lineno)
                    continue
                vectors.setdefault(parts[0].lower(), vec)
        return cls(dimension=dim, vectors=vectors)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.vectors

    def get(self, word: str) -> Optional[np.ndarray]:
        return self.vectors.get(word.lower())


def tokenize(text: str) -> list[str]:
    """Lowercase, drop URLs and @mentions, split on non-alphanumerics.
    Hashtags survive as bare words."""
    text = _URL_RE.sub(" ", text.lower())
    text = _MENTION_RE.sub(" ", text)
    return _TOKEN_RE.findall(text)


def embed_text(text: str, table: EmbeddingTable) -> np.ndarray:
    """Mean vector of the in-vocabulary tokens; zero vector when none."""
    hits = [table.vectors[tok] for tok in tokenize(text) if tok in table.vectors]
    if not hits:
        return np.zeros(table.dimension)
    return np.mean(hits, axis=0)


def content_embedding(texts: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    # average of per-tweet embeddings, not a pooled token average
    if not texts:
        return np.zeros(table.dimension)
    return np.mean([embed_text(t, table) for t in texts], axis=0)


def user_stat_features(u: UserRecord, now: float) -> dict[str, float]:
    """The fixed profile/activity block, keyed by USER_STAT_NAMES.

    Smoothed so zero-activity users produce zeros rather than NaNs: the
    follower/friend ratio adds 1 to both sides, per-day and per-tweet rates
    divide by max(denominator, 1)-style guards.
    """
    age_days = 0.0
    if u.account_created_at:  # 0 means the dump never told us
        age_days = max(now - u.account_created_at, 0.0) / SECONDS_PER_DAY
    n_tweets = u.tweets_in_dump
    screen = u.screen_name or ""
    feats = {
        "followers_count": float(u.followers_count),
        "friends_count": float(u.friends_count),
        "statuses_count": float(u.statuses_count),
        "favourites_count": float(u.favourites_count),
        "listed_count": float(u.listed_count),
        "verified": 1.0 if u.verified else 0.0,
        "default_profile": 1.0 if u.default_profile else 0.0,
        "default_profile_image": 1.0 if u.default_profile_image else 0.0,
        "account_age_days": age_days,
        "follower_friend_ratio": (u.followers_count + 1.0) / (u.friends_count + 1.0),
        "statuses_per_day": u.statuses_count / (age_days + 1.0),
        "retweet_fraction": u.retweets_in_dump / n_tweets if n_tweets else 0.0,
        "hashtags_per_tweet": u.hashtags_total / n_tweets if n_tweets else 0.0,
        "mentions_per_tweet": u.mentions_total / n_tweets if n_tweets else 0.0,
        "urls_per_tweet": u.urls_total / n_tweets if n_tweets else 0.0,
        "screen_name_length": float(len(screen)),
        "screen_name_digits": float(sum(ch.isdigit() for ch in screen)),
        "description_length": float(len(u.description or "")),
    }
    assert tuple(feats) == USER_STAT_NAMES
    return feats


@dataclass(frozen=True)
class HashtagVocabulary:
    """Hashtags ordered by total occurrence count descending, ties broken
    lexicographically; df counts users that used the tag at least once."""

    tags: tuple[str, ...]
    df: tuple[int, ...]
    n_users: int

    def idf(self) -> np.ndarray:
        if not self.tags:
            return np.zeros(0)
        return np.log(self.n_users / np.array(self.df, dtype=np.float64))


def build_vocabulary(users: Sequence[UserRecord], vocab_size: int = DEFAULT_VOCAB_SIZE) -> HashtagVocabulary:
    totals: dict[str, int] = {}
    df: dict[str, int] = {}
    for u in users:
        for tag, count in u.hashtag_counts.items():
            totals[tag] = totals.get(tag, 0) + count
            df[tag] = df.get(tag, 0) + 1
    ranked = sorted(totals, key=lambda tag: (-totals[tag], tag))[:vocab_size]
    return HashtagVocabulary(
        tags=tuple(ranked),
        df=tuple(df[tag] for tag in ranked),
        n_users=len(users),
    )


def hashtag_tfidf(
    users: Sequence[UserRecord], vocab_size: int = DEFAULT_VOCAB_SIZE
) -> tuple[HashtagVocabulary, np.ndarray]:
    """tf(u,h) * ln(N_users / df(h)) over the top hashtags by occurrence."""
    if not users:
        raise ValueError("hashtag_tfidf needs at least one user")
    vocab = build_vocabulary(users, vocab_size)
    return vocab, _tfidf_matrix(users, vocab)


def _tfidf_matrix(users: Sequence[UserRecord], vocab: HashtagVocabulary) -> np.ndarray:
    out = np.zeros((len(users), len(vocab.tags)))
    idf = vocab.idf()
    index = {tag: j for j, tag in enumerate(vocab.tags)}
    for i, u in enumerate(users):
        for tag, count in u.hashtag_counts.items():
            j = index.get(tag)
            if j is not None:
                out[i, j] = count * idf[j]
    return out


class HashtagTfidfVectorizer(BaseEstimator, TransformerMixin):
    """fit learns the vocabulary and document frequencies; transform scores
    any user list against that fitted vocabulary."""

    def __init__(self, vocab_size: int = DEFAULT_VOCAB_SIZE):
        self.vocab_size = vocab_size

    def fit(self, X: Sequence[UserRecord], y=None):
        if not X:
            raise ValueError("cannot fit on an empty user list")
        self.vocabulary_: HashtagVocabulary = build_vocabulary(X, self.vocab_size)
        return self

    def transform(self, X: Sequence[UserRecord]) -> np.ndarray:
        check_is_fitted(self, "vocabulary_")
        return _tfidf_matrix(X, self.vocabulary_)

    def get_feature_names_out(self, input_features=None) -> list[str]:
        check_is_fitted(self, "vocabulary_")
        return [f"tfidf_{tag}" for tag in self.vocabulary_.tags]


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-per-user numeric matrix with its column schema attached."""

    names: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    user_ids: tuple[str, ...]

    def __post_init__(self):
        if self.values.shape != (len(self.user_ids), len(self.names)):
            raise ValueError("feature matrix shape does not match schema")


def embedding_block_names(dimension: int) -> tuple[str, ...]:
    desc = tuple(f"desc_emb_{i}" for i in range(dimension))
    content = tuple(f"content_emb_{i}" for i in range(dimension))
    return desc + content


def schema_embedding_dim(names: Sequence[str]) -> int:
    """Embedding dimension implied by a stored schema (0 when the text
    blocks were disabled)."""
    return sum(1 for n in names if n.startswith("desc_emb_"))


class UserFeaturizer(BaseEstimator, TransformerMixin):
    """End-to-end featurizer: user stats + description/content embeddings +
    hashtag TF-IDF, with the schema exposed after fit.

    `now` anchors account age; pass the dump's latest tweet timestamp for
    reproducible output (wall clock would break idempotency).  When None it
    falls back to the latest profile creation time seen at transform.
    """

    def __init__(
        self,
        embeddings: Optional[EmbeddingTable] = None,
        vocab_size: int = DEFAULT_VOCAB_SIZE,
        now: Optional[float] = None,
    ):
        self.embeddings = embeddings
        self.vocab_size = vocab_size
        self.now = now

    def fit(self, X: Sequence[UserRecord], y=None):
        self.tfidf_ = HashtagTfidfVectorizer(self.vocab_size).fit(X)
        dim = self.embeddings.dimension if self.embeddings is not None else 0
        self.feature_names_: tuple[str, ...] = (
            USER_STAT_NAMES
            + embedding_block_names(dim)
            + tuple(self.tfidf_.get_feature_names_out())
        )
        return self

    def transform(self, X: Sequence[UserRecord]) -> FeatureMatrix:
        check_is_fitted(self, "tfidf_")
        now = self.now
        if now is None:
            known = [u.account_created_at for u in X if u.account_created_at]
            now = float(max(known)) if known else 0.0
        table = self.embeddings
        dim = table.dimension if table is not None else 0

        blocks = []
        for u in X:
            stats = list(user_stat_features(u, now).values())
            if table is not None:
                desc = embed_text(u.description or "", table)
                content = content_embedding(u.tweet_texts, table)
                row = np.concatenate([stats, desc, content])
            else:
                row = np.array(stats, dtype=np.float64)
            blocks.append(row)

        left = np.array(blocks, dtype=np.float64).reshape(len(X), len(USER_STAT_NAMES) + 2 * dim)
        values = np.hstack([left, self.tfidf_.transform(X)])
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(
                f"non-finite feature {self.feature_names_[bad[1]]!r} "
                f"for user {X[bad[0]].user_id}"
            )
        return FeatureMatrix(
            names=self.feature_names_,
            values=values,
            user_ids=tuple(u.user_id for u in X),
        )


def assemble_features(
    users: Sequence[UserRecord],
    embeddings: Optional[EmbeddingTable] = None,
    vocab_size: int = DEFAULT_VOCAB_SIZE,
    now: Optional[float] = None,
) -> FeatureMatrix:
    """One-shot fit + transform over a full user set."""
    if not users:
        raise ValueError("assemble_features needs at least one user")
    return UserFeaturizer(embeddings, vocab_size, now).fit(users).transform(users)


def check_embedding_dim(schema_names: Sequence[str], table: Optional[EmbeddingTable]) -> None:
    """Guard for applying a stored model schema with a different table."""
    want = schema_embedding_dim(schema_names)
    got = table.dimension if table is not None else 0
    if want != got:
        raise ValueError(
            f"embedding dimension mismatch: model schema expects {want}, "
            f"supplied table has {got}"
        )
