"""Core value types shared by all modules.

All types are immutable after construction and safe to share across
threads. Arrays are float64 / int64 throughout; gradient checking needs
the precision headroom.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class Sample:
    """One data point: feature vector, binary attribute labels, identity."""

    features: np.ndarray  # shape (F,), float64
    attrs: np.ndarray     # shape (M,), values in {0, 1}
    id: int

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "attrs", np.asarray(self.attrs, dtype=np.int64))
        object.__setattr__(self, "id", int(self.id))


@dataclass(eq=False)
class Batch:
    """An ordered slice of a dataset plus the original positions."""

    samples: list[Sample]
    indices: list[int]

    def __post_init__(self):
        if not self.samples:
            raise ValueError("Batch must be non-empty")
        if len(self.samples) != len(self.indices):
            raise ValueError("samples and indices must align")
        f = self.samples[0].features.shape
        m = self.samples[0].attrs.shape
        for s in self.samples:
            if s.features.shape != f or s.attrs.shape != m:
                raise ValueError("all samples in a batch must share F and M")

    def __len__(self) -> int:
        return len(self.samples)

    @cached_property
    def features(self) -> np.ndarray:
        return np.stack([s.features for s in self.samples])

    @cached_property
    def attrs(self) -> np.ndarray:
        return np.stack([s.attrs for s in self.samples])

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([s.id for s in self.samples], dtype=np.int64)


@dataclass(frozen=True)
class Quintuplet:
    """Anchor plus mined companions for one attribute.

    Members are batch indices; ``None`` marks an empty candidate set.
    p1: same attribute, same identity, farthest.
    p2: same attribute, different identity, nearest.
    p3: same attribute, different identity, farthest.
    n:  different attribute value, nearest.
    """

    attr: int
    anchor: int
    p1: Optional[int] = None
    p2: Optional[int] = None
    p3: Optional[int] = None
    n: Optional[int] = None


@dataclass(frozen=True)
class ComponentCounts:
    """Number of valid terms that contributed to each loss component."""

    ce: int = 0
    inter: int = 0
    intra: int = 0
    abr: int = 0


@dataclass(frozen=True)
class LossReport:
    """Per-batch loss breakdown.

    Identities hold by construction: ``hfe == inter + intra + abr`` and
    ``total == ce + weight_w * hfe``, both computed literally from the
    stored components.
    """

    ce: float
    inter: float
    intra: float
    abr: float
    hfe: float
    weight_w: float
    total: float
    counts: ComponentCounts = field(default_factory=ComponentCounts)

    CSV_HEADER = "step,w,ce,inter,intra,abr,hfe,total,n_ce,n_inter,n_intra,n_abr"

    def csv_row(self, step: int) -> str:
        vals = [self.weight_w, self.ce, self.inter, self.intra, self.abr, self.hfe, self.total]
        cells = [str(step)] + [repr(float(v)) for v in vals]
        cells += [str(self.counts.ce), str(self.counts.inter),
                  str(self.counts.intra), str(self.counts.abr)]
        return ",".join(cells)

    def to_dict(self) -> dict:
        return {
            "ce": self.ce, "inter": self.inter, "intra": self.intra,
            "abr": self.abr, "hfe": self.hfe, "w": self.weight_w,
            "total": self.total,
            "counts": {"ce": self.counts.ce, "inter": self.counts.inter,
                       "intra": self.counts.intra, "abr": self.counts.abr},
        }


def as_arrays(samples: list[Sample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack a sample list into (features, attrs, ids) arrays."""
    if not samples:
        raise ValueError("empty sample list")
    X = np.stack([s.features for s in samples])
    Y = np.stack([s.attrs for s in samples])
    ids = np.array([s.id for s in samples], dtype=np.int64)
    return X, Y, ids
