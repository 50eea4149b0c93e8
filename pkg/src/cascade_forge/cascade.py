"""Retweet cascade reconstruction and tree metrics.

A cascade is rebuilt from the flattened archive (every retweet references
only the original tweet) by attributing each retweet to the retweeter's
friend who most recently posted or retweeted the same content strictly
before them.  Retweeters with no qualifying friend in the root's tree are
disconnected "sparse" nodes, placed at level 1 by convention.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import replace

from .ingest import TweetRecord
from .model import Cascade, CascadeNode, FriendList, RetweetEvent

log = logging.getLogger(__name__)


def build_cascade(
    root_tweet: TweetRecord,
    retweets: list[RetweetEvent],
    friends: dict[str, FriendList],
) -> Cascade:
    """Reconstruct one cascade with the most-recent-friend rule.

    Each retweeter attaches to the friend (the root author included) whose
    post or retweet of the content is the latest one strictly before their
    own timestamp; simultaneous candidates never qualify.  Ties on candidate
    time break to the lexicographically smallest user id so rebuilds are
    reproducible.  A user with no qualifying friend becomes a sparse node.

    Duplicate retweets by the same user keep the earliest event; the rest
    are counted and logged as dropped.  Events referencing a different tweet
    id, authored by the root, or not strictly after the root time are input
    errors.
    """
    if root_tweet.retweet_of is not None:
        raise ValueError(f"root tweet {root_tweet.tweet_id!r} is itself a retweet")
    root = root_tweet.author
    root_time = root_tweet.created_at

    events = sorted(retweets, key=lambda e: (e.timestamp, e.retweeter))
    seen: set[str] = set()
    dropped = 0
    unique: list[RetweetEvent] = []
    for event in events:
        if event.original_tweet != root_tweet.tweet_id:
            raise ValueError(
                f"retweet by {event.retweeter!r} references tweet "
                f"{event.original_tweet!r}, expected {root_tweet.tweet_id!r}"
            )
        if event.timestamp <= root_time:
            raise ValueError(
                f"retweet by {event.retweeter!r} is not strictly after the "
                f"original tweet"
            )
        if event.retweeter in seen:
            dropped += 1
            continue
        seen.add(event.retweeter)
        unique.append(event)
    if dropped:
        log.debug("cascade %s: dropped %d duplicate retweet(s)",
                  root_tweet.tweet_id, dropped)

    # Time of the latest post/retweet per user currently inside the tree.
    tree_time = {root: root_time}
    level = {root: 0}
    edges: list[tuple[str, str]] = []
    out_degree: Counter[str] = Counter()
    sparse: set[str] = set()
    node_rows: list[CascadeNode] = [
        CascadeNode(user=root, retweet_time=root_time, level=0,
                    action_delay_min=0.0, out_degree=0)
    ]

    for event in unique:
        user = event.retweeter
        friend_list = friends.get(user)
        parent = None
        parent_time = None
        if friend_list is not None:
            for friend in friend_list.friends:
                t = tree_time.get(friend)
                if t is None or t >= event.timestamp:
                    continue
                if parent_time is None or t > parent_time or (
                    t == parent_time and friend < parent
                ):
                    parent, parent_time = friend, t
        delay = (event.timestamp - root_time).total_seconds() / 60.0
        if parent is None:
            sparse.add(user)
            node_rows.append(
                CascadeNode(user=user, retweet_time=event.timestamp, level=1,
                            action_delay_min=delay, out_degree=0)
            )
        else:
            edges.append((parent, user))
            out_degree[parent] += 1
            level[user] = level[parent] + 1
            tree_time[user] = event.timestamp
            node_rows.append(
                CascadeNode(user=user, retweet_time=event.timestamp,
                            level=level[user], action_delay_min=delay,
                            out_degree=0)
            )

    nodes = tuple(
        replace(n, out_degree=out_degree[n.user]) if n.user in out_degree else n
        for n in node_rows
    )
    return Cascade(
        root=root,
        root_tweet=root_tweet.tweet_id,
        root_time=root_time,
        nodes=nodes,
        edges=tuple(edges),
        sparse=frozenset(sparse),
    )


def cascade_size(cascade: Cascade) -> tuple[int, int, int]:
    """Return (s, s_prime, s_sparse): total, tree, and sparse node counts."""
    s_sparse = len(cascade.sparse)
    return cascade.size, cascade.size - s_sparse, s_sparse


def cascade_height(cascade: Cascade) -> int:
    """Longest root-to-node path in the tree; sparse nodes do not count."""
    return max(
        (n.level for n in cascade.nodes if n.user not in cascade.sparse), default=0
    )


def node_features(cascade: Cascade) -> list[tuple[str, int, float, int, bool]]:
    """Per-node rows (user, level, action_delay_min, out_degree, coordinated).

    The root is excluded: its level and delay are identically zero and would
    bias any group comparison.  Sparse nodes appear at level 1 with
    out-degree 0.
    """
    return [
        (n.user, n.level, n.action_delay_min, n.out_degree, n.coordinated)
        for n in cascade.nodes
        if n.user != cascade.root
    ]


def classify_edges(cascade: Cascade) -> tuple[int, int, int, int]:
    """Count edges by endpoint labels: (m, m_cc, m_cn, m_nn).

    Direction is ignored, so a coordinated/non-coordinated pair counts once
    regardless of which endpoint is the parent.
    """
    flag = {n.user: n.coordinated for n in cascade.nodes}
    m_cc = m_cn = m_nn = 0
    for parent, child in cascade.edges:
        a, b = flag[parent], flag[child]
        if a and b:
            m_cc += 1
        elif a or b:
            m_cn += 1
        else:
            m_nn += 1
    return len(cascade.edges), m_cc, m_cn, m_nn


def with_labels(cascade: Cascade, coordinated: frozenset[str] | set[str]) -> Cascade:
    """Return a copy with coordinated flags applied.

    The root always stays non-coordinated: the pipeline only analyzes
    cascades whose author is not a coordinated account, and the null model
    relies on roots being outside the label pool.
    """
    nodes = tuple(
        replace(n, coordinated=(n.user in coordinated and n.user != cascade.root))
        for n in cascade.nodes
    )
    return replace(cascade, nodes=nodes, labeled=True)


def group_retweets(
    records: list[TweetRecord],
) -> tuple[dict[str, TweetRecord], dict[str, list[RetweetEvent]], Counter]:
    """Split an archive into root tweets and resolvable retweet events.

    Returns (roots keyed by tweet id, events keyed by the root tweet id,
    skip counters).  Retweets of tweets absent from the archive and self
    retweets by the original author are counted and skipped, not fatal.
    """
    roots = {r.tweet_id: r for r in records if r.retweet_of is None}
    events: dict[str, list[RetweetEvent]] = {tid: [] for tid in roots}
    skipped: Counter = Counter()
    for record in records:
        if record.retweet_of is None:
            continue
        original = roots.get(record.retweet_of)
        if original is None:
            skipped["orphan"] += 1
            continue
        if record.author == original.author:
            skipped["self_retweet"] += 1
            continue
        events[record.retweet_of].append(
            RetweetEvent(
                retweeter=record.author,
                original_tweet=record.retweet_of,
                original_author=original.author,
                timestamp=record.created_at,
            )
        )
    if skipped:
        log.warning("skipped retweets: %s", dict(skipped))
    return roots, events, skipped
