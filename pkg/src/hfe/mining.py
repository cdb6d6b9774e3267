"""Pairwise distances and batch-hard quintuplet mining.

All functions are pure; mining returns indices only, so gradients never
flow through the selection itself (standard batch-hard practice).
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError
from .types import Batch, Quintuplet, Sample


def pairwise_distances(embeddings: np.ndarray) -> np.ndarray:
    """B x B matrix of non-squared Euclidean distances between rows.

    Computed from explicit row differences rather than the expanded
    dot-product formula: (x-y)^2 and (y-x)^2 are bit-identical in IEEE
    arithmetic, so the result is exactly symmetric with an exactly zero
    diagonal.
    """
    E = np.asarray(embeddings, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] < 1 or E.shape[1] < 1:
        raise ValueError(f"embeddings must be a non-empty 2-D matrix, got shape {E.shape}")
    if not np.isfinite(E).all():
        raise NumericalError("non-finite embedding entries")
    diff = E[:, None, :] - E[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def check_distance_matrix(dist: np.ndarray, atol: float = 1e-9) -> None:
    """Assert DistanceMatrix invariants (symmetry, zero diagonal, triangle)."""
    D = np.asarray(dist)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.array_equal(D, D.T):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.diag(D) != 0.0):
        raise ValueError("distance matrix diagonal must be zero")
    if (D < 0).any():
        raise ValueError("distances must be non-negative")
    # d(i,k) <= d(i,j) + d(j,k) for all j, within rounding
    if (D - (D[:, :, None] + D[None, :, :]).min(axis=1) > atol).any():
        raise ValueError("triangle inequality violated beyond tolerance")


def _masked_argmin(row: np.ndarray, mask: np.ndarray):
    if not mask.any():
        return None
    return int(np.argmin(np.where(mask, row, np.inf)))  # first min = lowest index


def _masked_argmax(row: np.ndarray, mask: np.ndarray):
    if not mask.any():
        return None
    return int(np.argmax(np.where(mask, row, -np.inf)))


def select_quintuplet(dist: np.ndarray, attr_labels: np.ndarray, id_labels: np.ndarray,
                      anchor: int, attr: int = 0) -> Quintuplet:
    """Batch-hard companion selection for one anchor in one attribute space.

    p1 = farthest among {same attribute value, same id, != anchor};
    p2/p3 = nearest/farthest among {same attribute value, different id};
    n = nearest among {different attribute value}. Ties break to the
    lowest batch index; an empty candidate set yields ``None``.
    """
    D = np.asarray(dist)
    a = np.asarray(attr_labels)
    ids = np.asarray(id_labels)
    B = D.shape[0]
    if not (0 <= anchor < B):
        raise ValueError(f"anchor {anchor} out of range for batch of {B}")
    if a.shape[0] != B or ids.shape[0] != B:
        raise ValueError("label vectors must align with the distance matrix")

    row = D[anchor]
    not_self = np.arange(B) != anchor
    same_attr = a == a[anchor]
    same_id = ids == ids[anchor]

    pos_same_id = same_attr & same_id & not_self
    pos_diff_id = same_attr & ~same_id
    neg = ~same_attr

    return Quintuplet(
        attr=attr,
        anchor=anchor,
        p1=_masked_argmax(row, pos_same_id),
        p2=_masked_argmin(row, pos_diff_id),
        p3=_masked_argmax(row, pos_diff_id),
        n=_masked_argmin(row, neg),
    )


def mine_quintuplets(embeddings_per_attr: list[np.ndarray], attrs: np.ndarray,
                     ids: np.ndarray, dists: list[np.ndarray] | None = None) -> list[Quintuplet]:
    """Mine one quintuplet per (attribute, anchor), in that order.

    Selection for attribute j uses attribute j's own embedding space;
    each sample serves as anchor once per attribute.
    """
    attrs = np.asarray(attrs)
    ids = np.asarray(ids)
    B = attrs.shape[0]
    M = attrs.shape[1]
    if len(embeddings_per_attr) != M:
        raise ValueError(f"expected {M} embedding matrices, got {len(embeddings_per_attr)}")
    if dists is None:
        dists = [pairwise_distances(E) for E in embeddings_per_attr]
    quints = []
    for j in range(M):
        E = embeddings_per_attr[j]
        if E.shape[0] != B:
            raise ValueError(f"embedding matrix {j} has {E.shape[0]} rows, batch has {B}")
        col = attrs[:, j]
        for a in range(B):
            quints.append(select_quintuplet(dists[j], col, ids, a, attr=j))
    return quints


def mine_batch(embeddings_per_attr: list[np.ndarray], batch: Batch) -> list[Quintuplet]:
    """Mine quintuplets for every anchor and attribute of a batch."""
    return mine_quintuplets(embeddings_per_attr, batch.attrs, batch.ids)


def pk_sample_indices(ids: np.ndarray, p: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Sample dataset positions for a batch of ``p`` identities x ``k`` samples.

    Identities are drawn without replacement; within an identity, positions
    are drawn without replacement when it has at least ``k`` samples and
    with replacement otherwise.
    """
    ids = np.asarray(ids)
    unique, first = np.unique(ids, return_index=True)
    unique = unique[np.argsort(first)]  # order of first appearance
    if unique.shape[0] < p:
        raise ValueError(f"dataset has {unique.shape[0]} distinct ids, need at least {p}")
    chosen = rng.choice(unique.shape[0], size=p, replace=False)
    out = []
    for u in chosen:
        positions = np.flatnonzero(ids == unique[u])
        picks = rng.choice(positions.shape[0], size=k, replace=positions.shape[0] < k)
        out.extend(int(positions[i]) for i in picks)
    return np.array(out, dtype=np.int64)


def pk_sample(dataset: list[Sample], p: int, k: int, rng: np.random.Generator) -> Batch:
    """P x K identity-balanced batch sampling over a sample list."""
    ids = np.array([s.id for s in dataset], dtype=np.int64)
    idx = pk_sample_indices(ids, p, k, rng)
    return Batch(samples=[dataset[i] for i in idx], indices=[int(i) for i in idx])
