"""Archive parsing and cascade persistence.

Input formats
-------------
Tweet stream: JSON Lines, one object per line with fields ``id``,
``author_id``, ``created_at`` (RFC 3339) and, for retweets, ``retweeted_id``.

Friends file: one record per line, ``user_id<TAB>friend_id,friend_id,...``.
An empty friend field is allowed; duplicate user lines merge by set union.

Cascade store: JSON Lines with a ``{"format": "cascade", "version": 1}``
header line followed by one object per cascade.  The store round-trips
bit-exactly: identifiers, second-resolution timestamps, and labels survive
``load(save(x)) == x``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .model import Cascade, CascadeNode, FriendList, _require_id, as_utc_second

log = logging.getLogger(__name__)

STORE_FORMAT = "cascade"
STORE_VERSION = 1


class ParseError(ValueError):
    """A malformed input line; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class FormatError(ValueError):
    """Wrong or missing header in a versioned file."""


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp to tz-aware UTC at second resolution."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {value!r} lacks a timezone offset")
    return as_utc_second(ts)


def format_rfc3339(ts: datetime) -> str:
    return as_utc_second(ts).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class TweetRecord:
    """One archived tweet; ``retweet_of`` is set iff the record is a retweet."""

    tweet_id: str
    author: str
    created_at: datetime
    retweet_of: str | None = None

    def __post_init__(self) -> None:
        _require_id(self.tweet_id, "tweet_id")
        _require_id(self.author, "author")
        object.__setattr__(self, "created_at", as_utc_second(self.created_at))
        if self.retweet_of == self.tweet_id:
            raise ValueError(f"tweet {self.tweet_id!r} cannot retweet itself")
        if self.retweet_of is not None:
            _require_id(self.retweet_of, "retweet_of")


def _record_from_json(obj: dict) -> TweetRecord:
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    for key in ("id", "author_id", "created_at"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    return TweetRecord(
        tweet_id=str(obj["id"]),
        author=str(obj["author_id"]),
        created_at=parse_rfc3339(str(obj["created_at"])),
        retweet_of=str(obj["retweeted_id"]) if obj.get("retweeted_id") else None,
    )


def load_tweet_stream(path: str | Path, max_bad_lines: int = 0) -> list[TweetRecord]:
    """Parse a JSONL tweet archive, preserving file order.

    Malformed lines are counted; if their number exceeds ``max_bad_lines``
    the whole load fails with a :class:`ParseError` naming the first
    offending line.  Otherwise the bad count is logged and the valid
    records are returned.
    """
    records: list[TweetRecord] = []
    bad: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(_record_from_json(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                bad.append((line_no, str(exc)))
    if len(bad) > max_bad_lines:
        first_no, first_err = bad[0]
        raise ParseError(
            f"{len(bad)} malformed line(s) in {path} exceed the allowed "
            f"{max_bad_lines}; first at line {first_no}: {first_err}",
            line_no=first_no,
        )
    if bad:
        log.warning("%s: skipped %d malformed line(s), first at line %d",
                    path, len(bad), bad[0][0])
    return records


def load_friend_lists(path: str | Path) -> dict[str, FriendList]:
    """Parse a TAB-separated friends file into a user -> FriendList map."""
    merged: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise ParseError(
                    f"line {line_no} in {path} has no TAB separator", line_no
                )
            user, _, friend_field = line.partition("\t")
            if not user:
                raise ParseError(f"line {line_no} in {path} has an empty user id",
                                 line_no)
            friends = {f for f in friend_field.split(",") if f}
            if user in friends:
                raise ParseError(
                    f"line {line_no} in {path}: user {user!r} follows themselves",
                    line_no,
                )
            merged.setdefault(user, set()).update(friends)
    return {
        user: FriendList(user=user, friends=frozenset(friends))
        for user, friends in merged.items()
    }


def _cascade_to_json(cascade: Cascade) -> dict:
    return {
        "root": cascade.root,
        "root_tweet": cascade.root_tweet,
        "root_time": format_rfc3339(cascade.root_time),
        "labeled": cascade.labeled,
        "nodes": [
            {
                "user": n.user,
                "time": format_rfc3339(n.retweet_time),
                "level": n.level,
                "delay_min": n.action_delay_min,
                "out_degree": n.out_degree,
                "coordinated": n.coordinated,
            }
            for n in cascade.nodes
        ],
        "edges": [list(e) for e in cascade.edges],
        "sparse": sorted(cascade.sparse),
    }


def _cascade_from_json(obj: dict) -> Cascade:
    nodes = tuple(
        CascadeNode(
            user=n["user"],
            retweet_time=parse_rfc3339(n["time"]),
            level=int(n["level"]),
            action_delay_min=float(n["delay_min"]),
            out_degree=int(n["out_degree"]),
            coordinated=bool(n["coordinated"]),
        )
        for n in obj["nodes"]
    )
    return Cascade(
        root=obj["root"],
        root_tweet=obj["root_tweet"],
        root_time=parse_rfc3339(obj["root_time"]),
        nodes=nodes,
        edges=tuple((e[0], e[1]) for e in obj["edges"]),
        sparse=frozenset(obj["sparse"]),
        labeled=bool(obj["labeled"]),
    )


def save_cascades(cascades: list[Cascade], path: str | Path) -> None:
    """Write cascades to a versioned JSONL store."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"format": STORE_FORMAT, "version": STORE_VERSION},
                            sort_keys=True) + "\n")
        for cascade in cascades:
            fh.write(json.dumps(_cascade_to_json(cascade), sort_keys=True) + "\n")


def load_cascades(path: str | Path) -> list[Cascade]:
    """Read a versioned JSONL cascade store written by :func:`save_cascades`."""
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line) if header_line.strip() else {}
        except json.JSONDecodeError:
            header = {}
        if not isinstance(header, dict) or header.get("format") != STORE_FORMAT:
            raise FormatError(f"{path} is not a cascade store")
        if header.get("version") != STORE_VERSION:
            raise FormatError(
                f"{path} has store version {header.get('version')!r}, "
                f"expected {STORE_VERSION}"
            )
        cascades = []
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                cascades.append(_cascade_from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(
                    f"corrupt cascade at line {line_no} of {path}: {exc}", line_no
                ) from exc
    return cascades
