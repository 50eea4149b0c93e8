"""Infectivity ratios and the quadrant taxonomy.

Both ratios mimic a network dismantling process: coordinated nodes are
visited by increasing distance from the root, each one's induced subtree is
counted and removed, and the accumulated counts are normalized by the
cascade population.  The first ratio counts every removed descendant, the
second only the non-coordinated ones.
"""

from __future__ import annotations

from collections import defaultdict
from enum import Enum

from .cascade import cascade_height, cascade_size, classify_edges
from .model import Cascade, CascadeMetrics


class Quadrant(str, Enum):
    ROOT_DRIVEN = "root_driven"
    KEY_SPREADERS = "key_spreaders"
    NEAR_ROOT_FINITE_SIZE = "near_root_finite_size"
    SELF_CONTAINED = "self_contained"
    MIXED = "mixed"


def infectivity_ratios(cascade: Cascade) -> tuple[float, float]:
    """Compute the coordinated and coordinated-to-non-coordinated ratios.

    Iteratively pick the unremoved coordinated node nearest the root
    (disconnected nodes sit at distance 1; ties break on user id), count the
    nodes of its induced subtree excluding the subtree root -- all of them
    for the first ratio, only non-coordinated ones for the second -- then
    remove the subtree and repeat.  The totals are divided by s - 1 and by
    s - s_c - 1 respectively; a zero denominator yields 0.0.
    """
    if not cascade.labeled:
        raise ValueError("cascade has no coordination labels applied")
    flag = {n.user: n.coordinated for n in cascade.nodes}
    distance = {
        n.user: (1 if n.user in cascade.sparse else n.level) for n in cascade.nodes
    }
    children: dict[str, list[str]] = defaultdict(list)
    for parent, child in cascade.edges:
        children[parent].append(child)

    targets = sorted(
        (user for user, c in flag.items() if c),
        key=lambda u: (distance[u], u),
    )
    removed: set[str] = set()
    total_removed = 0
    noncoord_removed = 0
    for user in targets:
        if user in removed:
            continue
        stack = [user]
        subtree: list[str] = []
        while stack:
            node = stack.pop()
            subtree.append(node)
            stack.extend(children[node])
        removed.update(subtree)
        total_removed += len(subtree) - 1
        noncoord_removed += sum(1 for u in subtree if not flag[u])

    s = cascade.size
    s_c = sum(1 for c in flag.values() if c)
    den_c = s - 1
    den_n = s - s_c - 1
    c_ir = total_removed / den_c if den_c > 0 else 0.0
    ctnc_ir = noncoord_removed / den_n if den_n > 0 else 0.0
    return c_ir, ctnc_ir


def quadrant(
    c_ir: float, ctnc_ir: float, low: float = 0.25, high: float = 0.75
) -> Quadrant:
    """Classify a (C_IR, CtNC_IR) pair into the behavioral taxonomy."""
    if not 0.0 <= c_ir <= 1.0 or not 0.0 <= ctnc_ir <= 1.0:
        raise ValueError("infectivity ratios must lie in [0, 1]")
    if not low < high:
        raise ValueError(f"low ({low}) must be below high ({high})")
    if c_ir <= low and ctnc_ir <= low:
        return Quadrant.ROOT_DRIVEN
    if c_ir >= high and ctnc_ir >= high:
        return Quadrant.KEY_SPREADERS
    if c_ir <= low and ctnc_ir >= high:
        return Quadrant.NEAR_ROOT_FINITE_SIZE
    if c_ir >= high and ctnc_ir <= low:
        return Quadrant.SELF_CONTAINED
    return Quadrant.MIXED


def compute_metrics(cascade: Cascade, cascade_id: str | None = None) -> CascadeMetrics:
    """Assemble the full measurement record for one labeled cascade."""
    s, s_prime, s_sparse = cascade_size(cascade)
    s_c = len(cascade.coordinated_users())
    m, m_cc, m_cn, m_nn = classify_edges(cascade)
    c_ir, ctnc_ir = infectivity_ratios(cascade)
    flags = []
    if s - 1 <= 0:
        flags.append("zero_denominator_cir")
    if s - s_c - 1 <= 0:
        flags.append("zero_denominator_ctncir")
    return CascadeMetrics(
        cascade_id=cascade_id if cascade_id is not None else cascade.root_tweet,
        s=s,
        s_prime=s_prime,
        s_sparse=s_sparse,
        s_c=s_c,
        s_n=s - s_c,
        m=m,
        m_cc=m_cc,
        m_cn=m_cn,
        m_nn=m_nn,
        h_prime=cascade_height(cascade),
        incidence=s_c / s,
        c_ir=c_ir,
        ctnc_ir=ctnc_ir,
        quadrant=quadrant(c_ir, ctnc_ir).value,
        flags=tuple(flags),
    )
