"""Input validation helpers and dataset-contract checking."""

from __future__ import annotations

import numpy as np

from .types import Sample


def check_features(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains non-finite entries")
    return X


def check_binary_labels(Y, name: str = "y") -> np.ndarray:
    """Coerce to a 2-D int64 array with entries in {0, 1}."""
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {Y.shape}")
    Y = Y.astype(np.int64, copy=False)
    bad = ~np.isin(Y, (0, 1))
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ValueError(f"{name} must be binary; entry ({r}, {c}) is {Y[r, c]}")
    return Y


def check_ids(ids, n: int | None = None, name: str = "ids") -> np.ndarray:
    """Coerce to a 1-D int64 array of non-negative identity labels."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {ids.shape}")
    if (ids < 0).any():
        raise ValueError(f"{name} must be non-negative")
    if n is not None and ids.shape[0] != n:
        raise ValueError(f"{name} has length {ids.shape[0]}, expected {n}")
    return ids


def validate_dataset(samples: list[Sample]) -> list[str]:
    """Check dataset-level invariants; return one description per violation.

    A clean dataset yields an empty list. Violations cover inconsistent
    feature/attribute lengths, non-binary attribute values, negative ids,
    and, per (id, attribute) pair, samples of one identity carrying
    conflicting attribute labels. The result does not depend on sample
    order (up to ordering of the descriptions, which is sorted).
    """
    if not samples:
        raise ValueError("validate_dataset requires a non-empty sample list")

    violations: list[str] = []
    F = samples[0].features.shape[0]
    M = samples[0].attrs.shape[0]

    usable = []
    for k, s in enumerate(samples):
        ok = True
        if s.features.shape[0] != F:
            violations.append(f"sample {k}: feature length {s.features.shape[0]} != {F}")
            ok = False
        if s.attrs.shape[0] != M:
            violations.append(f"sample {k}: attribute length {s.attrs.shape[0]} != {M}")
            ok = False
        else:
            for j in range(M):
                if s.attrs[j] not in (0, 1):
                    violations.append(f"sample {k}: attribute {j} value {s.attrs[j]} not in {{0,1}}")
                    ok = False
        if s.id < 0:
            violations.append(f"sample {k}: negative id {s.id}")
            ok = False
        if ok:
            usable.append(s)

    reference: dict[int, np.ndarray] = {}
    conflicts: set[tuple[int, int]] = set()
    for s in usable:
        ref = reference.setdefault(s.id, s.attrs)
        for j in range(M):
            if s.attrs[j] != ref[j]:
                conflicts.add((s.id, j))
    for ident, j in sorted(conflicts):
        violations.append(f"id {ident}: attribute {j} has conflicting labels across samples")

    return violations
