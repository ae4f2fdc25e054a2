"""Shared test fixtures: synthetic v1.1 tweet objects, dumps, and cascades."""

from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np
import pytest

from cascade_spotter.ingest import Cascade, CascadeEvent

_WEEKDAYS = ("Thu", "Fri", "Sat", "Sun", "Mon", "Tue", "Wed")  # epoch day 0 = Thursday
_MONTH_NAMES = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
                "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_DAYS_BEFORE_MONTH = (0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334)


def twitter_timestamp(epoch: int) -> str:
    """Render epoch seconds in the v1.1 created_at layout, UTC, without
    relying on strftime's locale-dependent names."""
    days, rem = divmod(epoch, 86400)
    hh, rem = divmod(rem, 3600)
    mm, ss = divmod(rem, 60)
    # civil date from days since 1970-01-01 (proleptic Gregorian)
    era_days = days + 719468
    era = era_days // 146097
    doe = era_days - era * 146097
    yoe = (doe - doe // 1460 + doe // 36524 - doe // 146096) // 365
    year = yoe + era * 400
    doy = doe - (365 * yoe + yoe // 4 - yoe // 100)
    mp = (5 * doy + 2) // 153
    day = doy - (153 * mp + 2) // 5 + 1
    month = mp + 3 if mp < 10 else mp - 9
    if month <= 2:
        year += 1
    wd = _WEEKDAYS[days % 7]
    return (f"{wd} {_MONTH_NAMES[month - 1]} {day:02d} "
            f"{hh:02d}:{mm:02d}:{ss:02d} +0000 {year}")


def make_user(uid: int, rng: random.Random | None = None, **overrides) -> dict:
    rng = rng or random.Random(uid)
    base = {
        "id": uid,
        "id_str": str(uid),
        "screen_name": f"user{uid}",
        "description": "",
        "followers_count": rng.randrange(0, 50000),
        "friends_count": rng.randrange(0, 2000),
        "statuses_count": rng.randrange(1, 20000),
        "favourites_count": rng.randrange(0, 500),
        "listed_count": rng.randrange(0, 20),
        "verified": False,
        "default_profile": True,
        "default_profile_image": False,
        "created_at": twitter_timestamp(1200000000 + uid * 1000),
        "location": "",
        "profile_image_url_https": f"https://img.test/{uid}.png",
    }
    base.update(overrides)
    return base


def make_tweet(tweet_id: int, user: dict, created: int, text: str = "hello world",
               hashtags: tuple[str, ...] = (), mentions: int = 0, urls: int = 0,
               retweet_of: int | None = None, **extra) -> dict:
    obj = {
        "id": tweet_id,
        "id_str": str(tweet_id),
        "created_at": twitter_timestamp(created),
        "text": text,
        "user": user,
        "entities": {
            "hashtags": [{"text": h} for h in hashtags],
            "user_mentions": [{"screen_name": f"m{i}"} for i in range(mentions)],
            "urls": [{"url": f"https://t.co/{i}"} for i in range(urls)],
        },
    }
    if retweet_of is not None:
        obj["retweeted_status"] = {"id": retweet_of, "id_str": str(retweet_of)}
    obj.update(extra)
    return obj


def write_dump(path: Path, objects: list) -> Path:
    lines = [obj if isinstance(obj, str) else json.dumps(obj) for obj in objects]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def synthetic_dump(n_roots: int, seed: int = 0, mean_retweets: int = 5,
                   n_users: int = 0) -> list[dict]:
    """Plausible dump: n_roots originals, geometric-ish retweet counts,
    hashtags and mentions sprinkled in."""
    rng = random.Random(seed)
    n_users = n_users or max(10, n_roots * 2)
    base = 1470000000
    out = []
    tid = 10_000
    users = {uid: make_user(uid, rng) for uid in range(1, n_users + 1)}
    for r in range(n_roots):
        tid += 1
        root_id = tid
        t0 = base + r * 300
        author = users[rng.randrange(1, n_users + 1)]
        tags = (f"tag{r % 7}",) if r % 3 else (f"tag{r % 7}", "common")
        out.append(make_tweet(root_id, author, t0,
                              text=f"original {r} #"+tags[0], hashtags=tags,
                              mentions=r % 3, urls=r % 2))
        for _ in range(rng.randrange(0, 2 * mean_retweets + 1)):
            tid += 1
            rt_author = users[rng.randrange(1, n_users + 1)]
            out.append(make_tweet(
                tid, rt_author, t0 + rng.randrange(1, 50000),
                text=f"RT @{author['screen_name']}: original {r}",
                hashtags=tags, retweet_of=root_id))
    return out


def random_cascade(n: int, seed: int, cascade_id: str = "c",
                   t_max: float = 1e7, mark_max: float = 1e7) -> Cascade:
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0.0, t_max, size=n))
    t[0] = 0.0
    marks = rng.integers(0, int(mark_max), size=n)
    events = tuple(
        CascadeEvent(rel_time=float(t[i]), mark=int(marks[i]),
                     user_id=f"u{seed}_{i % max(2, n // 3)}", tweet_id=f"t{seed}_{i}")
        for i in range(n)
    )
    return Cascade(cascade_id=cascade_id, events=events, root_text="root")


def mc_ancestor_frequencies(P: np.ndarray, n_samples: int, seed: int) -> np.ndarray:
    """Monte-Carlo oracle for the influence matrix: draw each event's parent
    from its probability column, then count how often i is an
    ancestor-or-self of j.  Independent of the closed-form recursion."""
    rng = np.random.default_rng(seed)
    n = P.shape[0]
    anc = np.zeros((n_samples, n, n), dtype=bool)
    anc[:, 0, 0] = True
    idx = np.arange(n_samples)
    for j in range(1, n):
        col = P[:j, j]
        parents = rng.choice(j, size=n_samples, p=col / col.sum())
        anc[:, :, j] = anc[idx, :, parents]
        anc[:, j, j] = True
    return anc.mean(axis=0)


def separable_dataset(n: int = 2000, d: int = 10, seed: int = 0):
    """Linearly separable two-class points with a clean margin."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = np.zeros(d)
    w[0], w[1] = 1.0, 0.5
    margin = X @ w
    y = (margin > 0).astype(float)
    X[:, 0] += np.where(y > 0, 0.5, -0.5)  # widen the gap
    return X, y


@pytest.fixture
def tiny_dump(tmp_path):
    """1 original + 2 retweets, a second singleton root, plus noise lines."""
    u1, u2, u3 = make_user(1), make_user(2), make_user(3)
    objs = [
        make_tweet(100, u1, 1470000000, text="root one #News", hashtags=("news",)),
        make_tweet(101, u2, 1470000060, retweet_of=100, hashtags=("news",)),
        make_tweet(102, u3, 1470000120, retweet_of=100),
        make_tweet(103, u2, 1470000500, text="standalone"),
        json.dumps({"delete": {"status": {"id": 42}}}),
        "",
        "{broken json",
    ]
    return write_dump(tmp_path / "tiny.jsonl", objs)
