"""Stream-parse Twitter jsonl dumps into retweet cascades and user records.

Input is the Twitter v1.1 tweet object format (one JSON object per line, the
layout produced by the Streaming/Filter APIs), optionally gzip-compressed.
Unknown fields are ignored; delete notices and other non-tweet objects are
skipped, and malformed lines are counted but never abort the stream.

Conventions baked in here:

- Quoted tweets and replies start new cascades; only the retweet relation
  groups tweets, because that is the only attribution the API provides.
- Retweets whose original is missing from the dump are kept: they form a
  cascade rooted at the earliest observed retweet, with times rebased to it.
- Duplicate tweet ids: the first occurrence wins for cascade membership,
  while a user's profile snapshot comes from their latest tweet (keyed on
  created_at, then tweet_id).
- Timestamps are truncated to whole seconds (v1.1 resolution).
"""

from __future__ import annotations

import gzip
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence

log = logging.getLogger(__name__)

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}

_DAYS_BEFORE_MONTH = (0, 0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334)


def _parse_twitter_timestamp(value) -> Optional[int]:
    """Parse a v1.1 timestamp ("Wed Aug 27 13:08:45 +0000 2008") to epoch
    seconds, UTC.  Locale-independent on purpose: strptime's %a/%b are not.
    Numeric epoch values (timestamp_ms style) pass through truncated."""
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return int(value)
    parts = str(value).split()
    if len(parts) != 6:
        return None
    _, mon, day, clock, offset, year = parts
    try:
        month = _MONTHS[mon]
        y, d = int(year), int(day)
        hh, mm, ss = (int(x) for x in clock.split(":"))
        off_sign = -1 if offset.startswith("-") else 1
        off_min = int(offset[1:3]) * 60 + int(offset[3:5])
    except (KeyError, ValueError, IndexError):
        return None
    # days since 1970-01-01, proleptic Gregorian
    days = (y - 1970) * 365 + (y - 1969) // 4 - (y - 1901) // 100 + (y - 1601) // 400
    days += _DAYS_BEFORE_MONTH[month] + (d - 1)
    if month > 2 and y % 4 == 0 and (y % 100 != 0 or y % 400 == 0):
        days += 1
    return days * 86400 + hh * 3600 + mm * 60 + ss - off_sign * off_min * 60


@dataclass(frozen=True)
class RawUser:
    """Author profile as embedded in a tweet object."""

    user_id: str
    screen_name: str = ""
    description: str = ""
    followers_count: int = 0
    friends_count: int = 0
    statuses_count: int = 0
    favourites_count: int = 0
    listed_count: int = 0
    verified: bool = False
    default_profile: bool = False
    default_profile_image: bool = False
    account_created_at: int = 0
    location: str = ""
    profile_image_url: str = ""


@dataclass(frozen=True)
class RawTweet:
    """One tweet, normalized from the v1.1 schema.

    retweet_of is the original tweet's id iff this tweet is a retweet.
    """

    tweet_id: str
    author: RawUser
    created_at: int
    text: str
    hashtags: tuple[str, ...] = ()
    mention_count: int = 0
    url_count: int = 0
    retweet_of: Optional[str] = None


@dataclass(frozen=True)
class CascadeEvent:
    """One (re)tweet inside a cascade: time relative to the root and the
    author's follower count at posting time (the event mark)."""

    rel_time: float
    mark: int
    user_id: str
    tweet_id: str


@dataclass(frozen=True)
class Cascade:
    """Time-ordered events rooted at an original tweet.  Events are sorted
    by (rel_time, tweet_id); the root has rel_time 0."""

    cascade_id: str
    events: tuple[CascadeEvent, ...]
    root_text: str = ""

    def __post_init__(self):
        if not self.events:
            raise ValueError("a cascade needs at least one event")


@dataclass
class UserRecord:
    """Per-user aggregation over a dump: latest profile snapshot plus
    activity tallies consumed by the feature builder."""

    user_id: str
    screen_name: str = ""
    description: str = ""
    followers_count: int = 0
    friends_count: int = 0
    statuses_count: int = 0
    favourites_count: int = 0
    listed_count: int = 0
    verified: bool = False
    default_profile: bool = False
    default_profile_image: bool = False
    account_created_at: int = 0
    location: str = ""
    profile_image_url: str = ""
    tweets_in_dump: int = 0
    retweets_in_dump: int = 0
    hashtag_counts: dict[str, int] = field(default_factory=dict)
    tweet_texts: tuple[str, ...] = ()
    mentions_total: int = 0
    urls_total: int = 0
    cascade_ids: tuple[str, ...] = ()

    @property
    def hashtags_total(self) -> int:
        return sum(self.hashtag_counts.values())


@dataclass
class IngestStats:
    """Counters satisfying: sum of cascade events + duplicate_tweets +
    skipped_lines == total input lines."""

    input_lines: int = 0
    parsed_tweets: int = 0
    skipped_lines: int = 0
    malformed_lines: int = 0
    duplicate_tweets: int = 0
    orphan_cascades: int = 0
    max_created_at: int = 0


def parse_tweet_line(line: str, stats: Optional[IngestStats] = None) -> Optional[RawTweet]:
    """Parse one jsonl line into a RawTweet, or None for anything that is
    not a tweet (blank line, delete notice, malformed JSON).

    Malformed JSON additionally bumps the malformed counter and logs a
    warning; the stream is never aborted.
    """
    if stats is not None:
        stats.input_lines += 1
    if not line.strip():
        if stats is not None:
            stats.skipped_lines += 1
        return None
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        if stats is not None:
            stats.skipped_lines += 1
            stats.malformed_lines += 1
        log.warning("skipping malformed line: %s", exc)
        return None
    tweet = _tweet_from_object(obj)
    if tweet is None:
        if stats is not None:
            stats.skipped_lines += 1
        return None
    if stats is not None:
        stats.parsed_tweets += 1
        if tweet.created_at > stats.max_created_at:
            stats.max_created_at = tweet.created_at
    return tweet


def _tweet_from_object(obj) -> Optional[RawTweet]:
    if not isinstance(obj, dict):
        return None
    tweet_id = obj.get("id_str") or (str(obj["id"]) if "id" in obj else "")
    user = obj.get("user")
    created = None
    if "timestamp_ms" in obj:
        try:
            created = int(obj["timestamp_ms"]) // 1000
        except (TypeError, ValueError):
            created = None
    if created is None:
        created = _parse_twitter_timestamp(obj.get("created_at"))
    if not tweet_id or not isinstance(user, dict) or created is None:
        return None  # delete notices, limit notices, etc.

    # The extended tweet carries the untruncated text and matching entities.
    extended = obj.get("extended_tweet")
    if isinstance(extended, dict) and extended.get("full_text"):
        text = extended["full_text"]
        entities = extended.get("entities", obj.get("entities", {}))
    else:
        text = obj.get("full_text") or obj.get("text") or ""
        entities = obj.get("entities", {})
    if not isinstance(entities, dict):
        entities = {}

    hashtags = tuple(
        str(h.get("text", "")).lower()
        for h in entities.get("hashtags", ())
        if isinstance(h, dict) and h.get("text")
    )
    retweeted = obj.get("retweeted_status")
    retweet_of = None
    if isinstance(retweeted, dict):
        retweet_of = retweeted.get("id_str") or (
            str(retweeted["id"]) if "id" in retweeted else None
        )
    return RawTweet(
        tweet_id=tweet_id,
        author=_user_from_object(user),
        created_at=created,
        text=text,
        hashtags=hashtags,
        mention_count=len(entities.get("user_mentions", ()) or ()),
        url_count=len(entities.get("urls", ()) or ()),
        retweet_of=retweet_of,
    )


def _user_from_object(user: dict) -> RawUser:
    def _int(key):
        v = user.get(key)
        return int(v) if isinstance(v, (int, float)) and v >= 0 else 0

    return RawUser(
        user_id=user.get("id_str") or str(user.get("id", "")),
        screen_name=str(user.get("screen_name") or ""),
        description=str(user.get("description") or ""),
        followers_count=_int("followers_count"),
        friends_count=_int("friends_count"),
        statuses_count=_int("statuses_count"),
        favourites_count=_int("favourites_count"),
        listed_count=_int("listed_count"),
        verified=bool(user.get("verified", False)),
        default_profile=bool(user.get("default_profile", False)),
        default_profile_image=bool(user.get("default_profile_image", False)),
        account_created_at=_parse_twitter_timestamp(user.get("created_at")) or 0,
        location=str(user.get("location") or ""),
        profile_image_url=str(
            user.get("profile_image_url_https") or user.get("profile_image_url") or ""
        ),
    )


def read_lines(paths: Sequence[str | Path]) -> Iterator[str]:
    """Yield lines from jsonl dump files, transparently decompressing .gz."""
    for path in paths:
        path = Path(path)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "rt", encoding="utf-8", errors="replace") as fh:
            yield from fh


def dedup_tweets(tweets: Iterable[RawTweet], stats: Optional[IngestStats] = None) -> list[RawTweet]:
    """Drop repeated tweet_ids, first occurrence wins."""
    seen: set[str] = set()
    out = []
    for t in tweets:
        if t.tweet_id in seen:
            if stats is not None:
                stats.duplicate_tweets += 1
            continue
        seen.add(t.tweet_id)
        out.append(t)
    return out


def build_cascades(
    tweets: Iterable[RawTweet], stats: Optional[IngestStats] = None
) -> list[Cascade]:
    """Group tweets into cascades, one per original tweet.

    Originals with no retweets become singleton cascades.  Retweets whose
    original is absent are grouped by the missing id and rebased onto the
    earliest observed retweet, which becomes the root (and lends the
    cascade its id).  Event times are seconds since the root, clamped at 0,
    ordered by (rel_time, tweet_id).
    """
    tweets = dedup_tweets(tweets, stats)
    originals: dict[str, RawTweet] = {}
    retweets: dict[str, list[RawTweet]] = defaultdict(list)
    for t in tweets:
        if t.retweet_of is None:
            originals[t.tweet_id] = t
        else:
            retweets[t.retweet_of].append(t)

    cascades: list[tuple[int, str, Cascade]] = []
    for tid, root in originals.items():
        cascades.append((root.created_at, tid, _assemble(root, retweets.pop(tid, []))))
    for missing_id, group in retweets.items():
        root = min(group, key=lambda t: (t.created_at, t.tweet_id))
        group = [t for t in group if t.tweet_id != root.tweet_id]
        if stats is not None:
            stats.orphan_cascades += 1
        cascades.append((root.created_at, root.tweet_id, _assemble(root, group)))

    cascades.sort(key=lambda item: (item[0], item[1]))
    return [c for _, _, c in cascades]


def _assemble(root: RawTweet, rest: list[RawTweet]) -> Cascade:
    events = [CascadeEvent(0.0, root.author.followers_count, root.author.user_id, root.tweet_id)]
    for t in rest:
        rel = float(max(t.created_at - root.created_at, 0))
        events.append(CascadeEvent(rel, t.author.followers_count, t.author.user_id, t.tweet_id))
    events.sort(key=lambda e: (e.rel_time, e.tweet_id))
    return Cascade(cascade_id=root.tweet_id, events=tuple(events), root_text=root.text)


def aggregate_users(
    tweets: Iterable[RawTweet],
    cascade_ids: Optional[Mapping[str, str]] = None,
) -> list[UserRecord]:
    """One UserRecord per distinct user_id, sorted by user_id.

    Profile fields come from the user's latest tweet (created_at, then
    tweet_id, as the tiebreaker).  cascade_ids maps tweet_id to the cascade
    it landed in; without it, membership falls back to retweet_of/self,
    which is only wrong for orphan cascades.
    """
    by_user: dict[str, list[RawTweet]] = defaultdict(list)
    for t in dedup_tweets(tweets):
        by_user[t.author.user_id].append(t)

    records = []
    for user_id in sorted(by_user):
        rows = sorted(by_user[user_id], key=lambda t: (t.created_at, t.tweet_id))
        latest = rows[-1].author
        counts: dict[str, int] = {}
        member: set[str] = set()
        mentions = urls = n_retweets = 0
        for t in rows:
            for h in t.hashtags:
                counts[h] = counts.get(h, 0) + 1
            mentions += t.mention_count
            urls += t.url_count
            if t.retweet_of is not None:
                n_retweets += 1
            fallback = t.retweet_of if t.retweet_of is not None else t.tweet_id
            member.add(cascade_ids.get(t.tweet_id, fallback) if cascade_ids else fallback)
        records.append(
            UserRecord(
                user_id=user_id,
                screen_name=latest.screen_name,
                description=latest.description,
                followers_count=latest.followers_count,
                friends_count=latest.friends_count,
                statuses_count=latest.statuses_count,
                favourites_count=latest.favourites_count,
                listed_count=latest.listed_count,
                verified=latest.verified,
                default_profile=latest.default_profile,
                default_profile_image=latest.default_profile_image,
                account_created_at=latest.account_created_at,
                location=latest.location,
                profile_image_url=latest.profile_image_url,
                tweets_in_dump=len(rows),
                retweets_in_dump=n_retweets,
                hashtag_counts=counts,
                tweet_texts=tuple(t.text for t in rows),
                mentions_total=mentions,
                urls_total=urls,
                cascade_ids=tuple(sorted(member)),
            )
        )
    return records


@dataclass
class IngestResult:
    cascades: list[Cascade]
    users: list[UserRecord]
    stats: IngestStats


def load_dataset(paths: Sequence[str | Path]) -> IngestResult:
    """Full first-step pipeline: parse dumps, assemble cascades, aggregate
    users, with user cascade membership wired to the actual cascade ids."""
    stats = IngestStats()
    tweets = [
        t for line in read_lines(paths) if (t := parse_tweet_line(line, stats)) is not None
    ]
    tweets = dedup_tweets(tweets, stats)
    cascades = build_cascades(tweets, stats)
    membership = {e.tweet_id: c.cascade_id for c in cascades for e in c.events}
    users = aggregate_users(tweets, cascade_ids=membership)
    return IngestResult(cascades=cascades, users=users, stats=stats)
