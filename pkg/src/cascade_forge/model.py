"""Domain types shared across the pipeline.

Everything here is immutable after construction and validated eagerly, so
instances can be handed to worker processes without further checks.
User and tweet identifiers are opaque non-empty strings; timestamps are
timezone-aware UTC datetimes truncated to whole seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone


def as_utc_second(ts: datetime) -> datetime:
    """Normalize a datetime to tz-aware UTC at 1-second resolution."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def _require_id(value: str, name: str) -> None:
    if not isinstance(value, str) or not value:
        raise ValueError(f"{name} must be a non-empty string, got {value!r}")


@dataclass(frozen=True)
class RetweetEvent:
    """One observed retweet: who retweeted what, when."""

    retweeter: str
    original_tweet: str
    original_author: str
    timestamp: datetime

    def __post_init__(self) -> None:
        _require_id(self.retweeter, "retweeter")
        _require_id(self.original_tweet, "original_tweet")
        _require_id(self.original_author, "original_author")
        if self.retweeter == self.original_author:
            raise ValueError(
                f"retweeter {self.retweeter!r} cannot equal the original author"
            )
        object.__setattr__(self, "timestamp", as_utc_second(self.timestamp))


@dataclass(frozen=True)
class FriendList:
    """Accounts a user follows."""

    user: str
    friends: frozenset[str]

    def __post_init__(self) -> None:
        _require_id(self.user, "user")
        object.__setattr__(self, "friends", frozenset(self.friends))
        if self.user in self.friends:
            raise ValueError(f"user {self.user!r} cannot follow themselves")


@dataclass(frozen=True)
class CascadeNode:
    """Per-user record inside a cascade.

    ``level`` is the distance from the root (0 for the root itself, 1 by
    convention for disconnected nodes).  ``action_delay_min`` is minutes
    elapsed since the original tweet.  ``out_degree`` counts children.
    """

    user: str
    retweet_time: datetime
    level: int
    action_delay_min: float
    out_degree: int
    coordinated: bool = False

    def __post_init__(self) -> None:
        _require_id(self.user, "user")
        object.__setattr__(self, "retweet_time", as_utc_second(self.retweet_time))
        if self.level < 0:
            raise ValueError(f"level must be non-negative, got {self.level}")
        if self.action_delay_min < 0:
            raise ValueError(
                f"action delay must be non-negative, got {self.action_delay_min}"
            )
        if self.out_degree < 0:
            raise ValueError(f"out_degree must be non-negative, got {self.out_degree}")


@dataclass(frozen=True)
class Cascade:
    """A reconstructed retweet cascade.

    ``nodes`` holds every user (root, tree nodes, and disconnected "sparse"
    nodes); ``edges`` are directed (parent, child) pairs forming a tree rooted
    at ``root``; ``sparse`` lists users with no path into that tree.  Both
    collections are kept in sorted order so serialization is deterministic.
    """

    root: str
    root_tweet: str
    root_time: datetime
    nodes: tuple[CascadeNode, ...]
    edges: tuple[tuple[str, str], ...]
    sparse: frozenset[str]
    labeled: bool = False

    def __post_init__(self) -> None:
        _require_id(self.root, "root")
        _require_id(self.root_tweet, "root_tweet")
        object.__setattr__(self, "root_time", as_utc_second(self.root_time))
        object.__setattr__(
            self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.user))
        )
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        object.__setattr__(self, "sparse", frozenset(self.sparse))
        self._validate()

    def _validate(self) -> None:
        by_user = {n.user: n for n in self.nodes}
        if len(by_user) != len(self.nodes):
            raise ValueError("duplicate user in cascade nodes")
        if self.root not in by_user:
            raise ValueError(f"root {self.root!r} missing from nodes")
        root_node = by_user[self.root]
        if root_node.level != 0 or root_node.action_delay_min != 0:
            raise ValueError("root node must have level 0 and zero action delay")
        if root_node.retweet_time != self.root_time:
            raise ValueError("root node time must equal the cascade root time")
        if root_node.coordinated:
            raise ValueError("root node cannot be coordinated")
        if self.root in self.sparse:
            raise ValueError("root cannot be sparse")
        if not self.sparse <= set(by_user):
            raise ValueError("sparse users missing from nodes")

        parent_of: dict[str, str] = {}
        out_counts: dict[str, int] = {}
        for parent, child in self.edges:
            if parent not in by_user or child not in by_user:
                raise ValueError(f"edge ({parent!r}, {child!r}) references unknown user")
            if child == self.root:
                raise ValueError("root cannot have a parent")
            if child in parent_of:
                raise ValueError(f"node {child!r} has more than one parent")
            if parent in self.sparse or child in self.sparse:
                raise ValueError("sparse nodes cannot carry edges")
            if by_user[child].retweet_time <= by_user[parent].retweet_time:
                raise ValueError(
                    f"edge ({parent!r}, {child!r}) violates timestamp ordering"
                )
            parent_of[child] = parent
            out_counts[parent] = out_counts.get(parent, 0) + 1

        for node in self.nodes:
            expected_out = 0 if node.user in self.sparse else out_counts.get(node.user, 0)
            if node.out_degree != expected_out:
                raise ValueError(
                    f"node {node.user!r} out_degree {node.out_degree} != {expected_out}"
                )
            if node.user in self.sparse:
                if node.level != 1:
                    raise ValueError(f"sparse node {node.user!r} must sit at level 1")
                continue
            if node.user == self.root:
                continue
            parent = parent_of.get(node.user)
            if parent is None:
                raise ValueError(f"tree node {node.user!r} has no parent")
            if node.level != by_user[parent].level + 1:
                raise ValueError(f"node {node.user!r} level inconsistent with parent")
            delay = (node.retweet_time - self.root_time).total_seconds() / 60.0
            if not math.isclose(node.action_delay_min, delay, abs_tol=1e-9):
                raise ValueError(f"node {node.user!r} action delay inconsistent")

        tree_users = set(by_user) - self.sparse
        if len(self.edges) != len(tree_users) - 1:
            raise ValueError("edge count must equal tree size minus one")

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def tree_size(self) -> int:
        return len(self.nodes) - len(self.sparse)

    def node(self, user: str) -> CascadeNode:
        for n in self.nodes:
            if n.user == user:
                return n
        raise KeyError(user)

    def coordinated_users(self) -> frozenset[str]:
        return frozenset(n.user for n in self.nodes if n.coordinated)


@dataclass(frozen=True)
class CoordinationLabeling:
    """Outcome of the similarity-network percentile filter.

    ``retained`` holds the surviving edges as (user_a, user_b, similarity)
    sorted by decreasing similarity; ``coordinated`` is exactly the endpoint
    set of those edges.  ``max_similarity`` records, for every scored user,
    the highest positive similarity they took part in (0.0 if none).
    ``degenerate`` flags inputs with fewer than two non-zero vectors.
    """

    retained: tuple[tuple[str, str, float], ...]
    coordinated: frozenset[str]
    percentile: float
    max_similarity: dict[str, float] = field(default_factory=dict)
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.percentile <= 100:
            raise ValueError(f"percentile must be in (0, 100], got {self.percentile}")
        endpoints = frozenset(u for a, b, _ in self.retained for u in (a, b))
        if endpoints != self.coordinated:
            raise ValueError("coordinated set must equal retained edge endpoints")

    def scores(self) -> dict[str, list[tuple[str, str, float]]]:
        """Retained edges grouped by participating user."""
        out: dict[str, list[tuple[str, str, float]]] = {}
        for edge in self.retained:
            out.setdefault(edge[0], []).append(edge)
            out.setdefault(edge[1], []).append(edge)
        return out


@dataclass(frozen=True)
class CascadeMetrics:
    """Full per-cascade measurement record."""

    cascade_id: str
    s: int
    s_prime: int
    s_sparse: int
    s_c: int
    s_n: int
    m: int
    m_cc: int
    m_cn: int
    m_nn: int
    h_prime: int
    incidence: float
    c_ir: float
    ctnc_ir: float
    quadrant: str = ""
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.s != self.s_c + self.s_n:
            raise ValueError(f"s={self.s} must equal s_c+s_n={self.s_c + self.s_n}")
        if self.s != self.s_prime + self.s_sparse:
            raise ValueError("s must equal s_prime + s_sparse")
        if self.m != self.m_cc + self.m_cn + self.m_nn:
            raise ValueError("m must equal m_cc + m_cn + m_nn")
        for name in ("incidence", "c_ir", "ctnc_ir"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class FitResult:
    """Parameters and model-selection trace for one curve fit.

    ``params`` are ordered (a, b) for the saturating exponential and
    lowest-degree-first coefficients for polynomials.  ``selection_trace``
    lists (candidate_order, F_statistic, p_value) for each nested comparison
    that was evaluated.
    """

    model_kind: str
    params: tuple[float, ...]
    residual_std_error: float
    degrees_of_freedom: int
    order: int | None = None
    selection_trace: tuple[tuple[int, float, float], ...] = ()
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.model_kind not in ("exponential_saturation", "polynomial"):
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.residual_std_error < 0:
            raise ValueError("residual_std_error must be non-negative")
        if self.model_kind == "polynomial":
            if self.order is None or self.order < 0:
                raise ValueError("polynomial fits must carry their order")
            if len(self.params) != self.order + 1:
                raise ValueError("polynomial params length must be order + 1")
