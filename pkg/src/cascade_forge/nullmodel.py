"""Randomized baselines: label shuffling and bootstrap resampling.

All randomness flows through numpy's PCG64 generator seeded explicitly, so
every run is reproducible across machines.  Bootstrap replicates are drawn
in fixed-size blocks with per-block derived seeds, which keeps results
identical no matter how the blocks are scheduled.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence

import numpy as np

from .model import Cascade

_BOOTSTRAP_BLOCK = 1024


def shuffle_labels(cascades: Sequence[Cascade], seed: int) -> list[Cascade]:
    """Permute coordinated flags across the global pool of non-root nodes.

    Structure (nodes, edges, times, sparse sets) is untouched and the total
    number of coordinated flags is conserved exactly; only their placement
    moves.  Roots stay non-coordinated, as the datasets under study only
    contain cascades authored by non-coordinated accounts.
    """
    flags = []
    for cascade in cascades:
        flags.extend(n.coordinated for n in cascade.nodes if n.user != cascade.root)
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(np.asarray(flags, dtype=bool)) if flags else []

    out = []
    cursor = 0
    for cascade in cascades:
        nodes = []
        for node in cascade.nodes:
            if node.user == cascade.root:
                nodes.append(node)
                continue
            nodes.append(replace(node, coordinated=bool(shuffled[cursor])))
            cursor += 1
        out.append(replace(cascade, nodes=tuple(nodes)))
    return out


def bootstrap_means(
    values: Sequence[float], n_samples: int = 50_000, seed: int = 0
) -> np.ndarray:
    """Means of ``n_samples`` with-replacement resamples of ``values``.

    Each replicate draws len(values) observations.  Replicates are generated
    block by block from seeds spawned off the run seed, so the output for a
    given (values, n_samples, seed) triple never depends on scheduling.
    """
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise ValueError("bootstrap requires a non-empty sample")
    if n_samples < 0:
        raise ValueError("n_samples must be non-negative")
    if n_samples == 0:
        return np.empty(0, dtype=float)

    n = data.size
    blocks = []
    root = np.random.SeedSequence(seed)
    n_blocks = (n_samples + _BOOTSTRAP_BLOCK - 1) // _BOOTSTRAP_BLOCK
    for block_seed, start in zip(
        root.spawn(n_blocks), range(0, n_samples, _BOOTSTRAP_BLOCK)
    ):
        count = min(_BOOTSTRAP_BLOCK, n_samples - start)
        rng = np.random.default_rng(block_seed)
        idx = rng.integers(0, n, size=(count, n))
        blocks.append(data[idx].mean(axis=1))
    return np.concatenate(blocks)
