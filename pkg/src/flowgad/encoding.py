"""Initial node features: raw attributes plus random-walk return probabilities.

Column ``t`` of the structural block is the diagonal of the t-step random
walk operator ``(D^-1 A)^t``, i.e. the probability a walk starting at node
``i`` is back at ``i`` after ``t`` steps. Isolated nodes get zero rows.
"""

from __future__ import annotations

import numpy as np

from .data import Graph
from .errors import ContractViolation


def rw_structural_encoding(g: Graph, k_se: int) -> np.ndarray:
    """n x k_se matrix whose column t-1 is diag((D^-1 A)^t)."""
    if k_se < 1:
        raise ContractViolation(f"k_se must be positive, got {k_se}")
    deg = g.adjacency.sum(axis=1)
    inv_deg = np.where(deg > 0, 1.0 / np.where(deg > 0, deg, 1.0), 0.0)
    walk = g.adjacency * inv_deg[:, None]
    out = np.empty((g.n, k_se), dtype=np.float64)
    power = walk.copy()
    out[:, 0] = np.diagonal(power)
    for t in range(1, k_se):
        power = power @ walk
        out[:, t] = np.diagonal(power)
    return out


def build_init_features(g: Graph, k_se: int = 16,
                        include_degree: bool = False) -> np.ndarray:
    """Concatenate dataset attributes with the structural encoding.

    Graphs without attribute columns use the structural block alone, so
    their information is purely topological. ``include_degree`` adds a raw
    degree column (off by default).
    """
    blocks = []
    if g.features.shape[1] > 0:
        blocks.append(g.features)
    if include_degree:
        blocks.append(g.adjacency.sum(axis=1, keepdims=True))
    blocks.append(rw_structural_encoding(g, k_se))
    return np.concatenate(blocks, axis=1)
