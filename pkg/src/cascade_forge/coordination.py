"""Coordination scoring from retweet behavior.

Each account is represented as a TF-IDF weighted sparse vector over the
tweet ids it retweeted; pairwise cosine similarities form a user-similarity
network, and the accounts touched by the top percentile of its edges are
labeled coordinated.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass

from .model import CoordinationLabeling, RetweetEvent

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UserVector:
    """Sparse TF-IDF vector over tweet ids; zero entries are never stored."""

    user: str
    weights: dict[str, float]

    @property
    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights.values()))


def build_user_vectors(events: list[RetweetEvent]) -> list[UserVector]:
    """TF-IDF vectors for every retweeting user in the event list.

    tf(u, t) is the number of times u retweeted t; idf(t) = ln(N / df(t))
    with N the number of distinct retweeters and df(t) the number of distinct
    users who retweeted t.  Tweets retweeted by every user get weight zero
    and drop out, which is exactly the down-weighting of highly popular
    content the scoring relies on.
    """
    if not events:
        raise ValueError("cannot build vectors from an empty event list")
    tf: dict[str, Counter] = defaultdict(Counter)
    for event in events:
        tf[event.retweeter][event.original_tweet] += 1
    n_users = len(tf)
    df: Counter = Counter()
    for counts in tf.values():
        for tweet in counts:
            df[tweet] += 1
    idf = {tweet: math.log(n_users / d) for tweet, d in df.items()}
    vectors = []
    for user in sorted(tf):
        weights = {
            tweet: count * idf[tweet]
            for tweet, count in tf[user].items()
            if idf[tweet] > 0.0
        }
        vectors.append(UserVector(user=user, weights=weights))
    return vectors


def cosine_similarity(a: UserVector, b: UserVector) -> float:
    """Cosine of two sparse vectors; 0.0 when either has zero norm."""
    na, nb = a.norm, b.norm
    if na == 0.0 or nb == 0.0:
        return 0.0
    small, large = (a.weights, b.weights) if len(a.weights) <= len(b.weights) \
        else (b.weights, a.weights)
    dot = sum(w * large[t] for t, w in small.items() if t in large)
    return dot / (na * nb)


def _positive_pairs(vectors: list[UserVector]) -> dict[tuple[str, str], float]:
    """All user pairs with positive similarity, via an inverted index.

    Only pairs that co-retweeted at least one tweet are ever enumerated, so
    the cost scales with actual overlap rather than with all O(N^2) pairs.
    """
    norms = {v.user: v.norm for v in vectors}
    index: dict[str, list[tuple[str, float]]] = defaultdict(list)
    for v in vectors:
        for tweet, weight in v.weights.items():
            index[tweet].append((v.user, weight))
    dots: dict[tuple[str, str], float] = defaultdict(float)
    for entries in index.values():
        entries.sort()
        for i, (u, wu) in enumerate(entries):
            for v, wv in entries[i + 1:]:
                dots[(u, v)] += wu * wv
    return {
        pair: dot / (norms[pair[0]] * norms[pair[1]])
        for pair, dot in dots.items()
        if dot > 0.0
    }


def label_coordinated(
    vectors: list[UserVector], percentile: float = 1.0
) -> CoordinationLabeling:
    """Label the accounts touched by the top-percentile similarity edges.

    Pairs with zero similarity are non-edges and are excluded before the
    cut; the retained set holds the ceil(percentile% * E) highest-weight
    edges, extended to every edge tied with the cut value so the outcome is
    permutation-invariant.  Accounts not touched by a retained edge are
    non-coordinated.  With fewer than two non-zero vectors the labeling is
    empty and flagged degenerate.
    """
    if not 0 < percentile <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {percentile}")
    if len(vectors) < 2:
        raise ValueError("labeling requires at least two user vectors")
    nonzero = sum(1 for v in vectors if v.weights)
    if nonzero < 2:
        log.warning("fewer than two non-zero vectors; labeling is degenerate")
        return CoordinationLabeling(
            retained=(), coordinated=frozenset(), percentile=percentile,
            max_similarity={v.user: 0.0 for v in vectors}, degenerate=True,
        )

    sims = _positive_pairs(vectors)
    max_similarity = {v.user: 0.0 for v in vectors}
    for (u, v), sim in sims.items():
        if sim > max_similarity[u]:
            max_similarity[u] = sim
        if sim > max_similarity[v]:
            max_similarity[v] = sim

    ranked = sorted(sims.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = math.ceil(percentile / 100.0 * len(ranked))
    if keep and ranked:
        boundary = ranked[keep - 1][1]
        while keep < len(ranked) and ranked[keep][1] == boundary:
            keep += 1
    retained = tuple((u, v, sim) for (u, v), sim in ranked[:keep])
    coordinated = frozenset(u for a, b, _ in retained for u in (a, b))
    return CoordinationLabeling(
        retained=retained,
        coordinated=coordinated,
        percentile=percentile,
        max_similarity=max_similarity,
    )
