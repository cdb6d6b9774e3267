"""Synthetic hierarchical dataset generation and CSV ingestion.

Generator geometry: attribute j owns coordinate j of the feature vector;
the two class signatures for an attribute sit at -attr_sep/2 and
+attr_sep/2 on that coordinate. Every identity gets one attribute vector
(balanced per attribute) and an identity center: the class-signature point
(attribute coordinates at their signatures, other coordinates zero) plus
an offset of norm at most ``id_sep``, so identity centers stay within
id_sep of the correct class center.

The offset is structured the way identity appearance is structured:
besides isotropic dispersion, attribute j leaves a secondary cue in the
identity signature, a dedicated coordinate pair whose SIGNS agree for one
class and disagree for the other (magnitudes and sign patterns random, so
both cue coordinates have zero class mean and the distance between class
centers stays exactly attr_sep, along the designated coordinate). This is
the vector analogue of a person's overall appearance correlating with an
attribute beyond the directly visible evidence: recovering it requires a
nonlinear read of the identity signature, and a plain nearest-centroid (or
any linear) rule on single coordinates cannot see it.

Offsets are redrawn (best effort) until distinct identities sit at least
5x ``noise`` apart: with samples inside a ball of radius ``noise`` around
their identity center, every same-identity pair (at most 2 x noise apart)
is then strictly closer than every different-identity pair (at least
3 x noise apart), which makes the identity layer of the hierarchy
realizable.

A ``hard_frac`` fraction of each attribute class then has that attribute's
coordinate overwritten with the opposite class signature (plus a fresh
offset at the id-center coordinate scale), keeping all other coordinates,
the identity cue included, intact: the occluded-evidence case.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataViolationError
from .rng import seeded_rng
from .types import Sample
from .validation import validate_dataset


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic generator."""

    num_ids: int = 20
    samples_per_id: int = 20
    num_attrs: int = 2
    feature_dim: int = 16
    attr_sep: float = 4.0
    id_sep: float = 1.0
    noise: float = 0.25
    hard_frac: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.num_ids < 1 or self.samples_per_id < 1:
            raise ValueError("num_ids and samples_per_id must be positive")
        if self.num_attrs < 1:
            raise ValueError("num_attrs must be positive")
        if self.feature_dim < 3 * self.num_attrs:
            raise ValueError("feature_dim must be >= 3 * num_attrs "
                             "(one evidence coordinate plus a cue pair per attribute)")
        if not (self.attr_sep > self.id_sep > self.noise > 0.0):
            raise ValueError("separations must satisfy attr_sep > id_sep > noise > 0")
        if not 0.0 <= self.hard_frac < 0.5:
            raise ValueError("hard_frac must lie in [0, 0.5)")


def attr_signature(spec: SynthSpec, value: int) -> float:
    """Class signature of an attribute coordinate: +/- attr_sep / 2."""
    return (0.5 if value else -0.5) * spec.attr_sep


def _balanced_labels(n: int, rng: np.random.Generator) -> np.ndarray:
    labels = np.zeros(n, dtype=np.int64)
    labels[n // 2:] = 1
    return rng.permutation(labels)


def _ball_point(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal(dim)
    direction /= max(np.linalg.norm(direction), 1e-300)
    return radius * rng.uniform() ** (1.0 / dim) * direction


CUE_MAG_RANGE = (0.6, 0.9)  # cue magnitudes as a fraction of the cue budget


def cue_coordinates(num_attrs: int, attr: int) -> tuple[int, int]:
    """The identity-signature coordinate pair carrying attribute ``attr``'s cue."""
    return num_attrs + 2 * attr, num_attrs + 2 * attr + 1


def _id_offset(spec: SynthSpec, attrs_of_id: np.ndarray, flips_of_id: np.ndarray,
               rng: np.random.Generator) -> np.ndarray:
    """Identity-signature offset: per-attribute sign-correlated cue pairs plus
    isotropic dispersion, total norm bounded by id_sep."""
    m, f = spec.num_attrs, spec.feature_dim
    offset = np.zeros(f)
    cue_budget = spec.id_sep / np.sqrt(2 * m)
    for j in range(m):
        u_ix, v_ix = cue_coordinates(m, j)
        flip = flips_of_id[j]  # +/-1 balanced per class: zero class mean per coordinate
        sign_v = 1.0 if attrs_of_id[j] == 1 else -1.0  # signs agree iff class 1
        offset[u_ix] = flip * rng.uniform(*CUE_MAG_RANGE) * cue_budget
        offset[v_ix] = flip * sign_v * rng.uniform(*CUE_MAG_RANGE) * cue_budget
    if f > 3 * m:
        offset[3 * m:] = _ball_point(rng, f - 3 * m, 0.15 * spec.id_sep)
    return offset


def _balanced_flips(id_attrs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per attribute and class, give half the identities each cue orientation."""
    n_ids, m = id_attrs.shape
    flips = np.ones((n_ids, m))
    for j in range(m):
        for value in (0, 1):
            members = np.flatnonzero(id_attrs[:, j] == value)
            signs = np.ones(members.shape[0])
            signs[members.shape[0] // 2:] = -1.0
            flips[members, j] = rng.permutation(signs)
    return flips


def generate_synthetic_with_mask(spec: SynthSpec) -> tuple[list[Sample], np.ndarray]:
    """Generate the dataset plus the (N, M) boolean mask of hard cells."""
    rng = seeded_rng(spec.seed)
    n_ids, per_id, m, f = spec.num_ids, spec.samples_per_id, spec.num_attrs, spec.feature_dim
    coord_scale = spec.id_sep / np.sqrt(f)  # per-coordinate scale of a ball offset

    id_attrs = np.stack([_balanced_labels(n_ids, rng) for _ in range(m)], axis=1)
    flips = _balanced_flips(id_attrs, rng)

    min_gap = 5.0 * spec.noise
    centers = np.zeros((n_ids, f))
    for i in range(n_ids):
        for j in range(m):
            centers[i, j] = attr_signature(spec, id_attrs[i, j])
        best = None
        for _ in range(64):  # keep identity clusters disjoint, best effort
            candidate = centers[i] + _id_offset(spec, id_attrs[i], flips[i], rng)
            gap = (np.inf if i == 0
                   else float(np.linalg.norm(centers[:i] - candidate, axis=1).min()))
            if best is None or gap > best[0]:
                best = (gap, candidate)
            if gap >= min_gap:
                break
        centers[i] = best[1]

    n = n_ids * per_id
    X = np.zeros((n, f))
    ids = np.repeat(np.arange(n_ids), per_id)
    for row in range(n):
        X[row] = centers[ids[row]] + _ball_point(rng, f, spec.noise)

    attrs = id_attrs[ids]
    hard = np.zeros((n, m), dtype=bool)
    for j in range(m):
        for value in (0, 1):
            members = np.flatnonzero(attrs[:, j] == value)
            n_hard = int(spec.hard_frac * members.shape[0])
            if n_hard == 0:
                continue
            picks = rng.choice(members.shape[0], size=n_hard, replace=False)
            for p in picks:
                row = members[p]
                X[row, j] = attr_signature(spec, 1 - value) + rng.uniform(-1.0, 1.0) * coord_scale
                hard[row, j] = True

    samples = [Sample(features=X[i], attrs=attrs[i], id=int(ids[i])) for i in range(n)]
    return samples, hard


def generate_synthetic(spec: SynthSpec) -> list[Sample]:
    """Generate a synthetic hierarchical dataset (passes validate_dataset)."""
    samples, _ = generate_synthetic_with_mask(spec)
    return samples


def csv_header(feature_dim: int, num_attrs: int) -> list[str]:
    return ([f"f{i}" for i in range(feature_dim)]
            + [f"a{j}" for j in range(num_attrs)] + ["id"])


def save_csv(samples: list[Sample], path) -> None:
    """Write samples as CSV: f0..f{F-1}, a0..a{M-1}, id. Floats use repr so
    a reload is bit-equal."""
    if not samples:
        raise ValueError("cannot write an empty dataset")
    f_dim = samples[0].features.shape[0]
    m = samples[0].attrs.shape[0]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(csv_header(f_dim, m)) + "\n")
        for s in samples:
            cells = [repr(float(v)) for v in s.features]
            cells += [str(int(v)) for v in s.attrs]
            cells.append(str(s.id))
            fh.write(",".join(cells) + "\n")


def load_csv(path) -> tuple[list[Sample], dict]:
    """Parse a dataset CSV; returns (samples, header metadata).

    The header must be exactly f0..f{F-1}, a0..a{M-1}, id. Any parse
    problem or dataset-contract violation raises DataViolationError with
    per-row descriptions; nothing is coerced silently.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataViolationError(f"{path}: empty file") from None
        f_dim = sum(1 for c in header if c.startswith("f") and c[1:].isdigit())
        m = sum(1 for c in header if c.startswith("a") and c[1:].isdigit())
        if f_dim == 0 or m == 0 or header != csv_header(f_dim, m):
            raise DataViolationError(
                f"{path}: header must be f0..f{{F-1}},a0..a{{M-1}},id, got {header!r}")
        samples = []
        problems = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != f_dim + m + 1:
                problems.append(f"row {lineno}: expected {f_dim + m + 1} cells, got {len(row)}")
                continue
            try:
                features = np.array([float(c) for c in row[:f_dim]])
            except ValueError:
                problems.append(f"row {lineno}: non-numeric feature value")
                continue
            attrs = np.zeros(m, dtype=np.int64)
            bad = False
            for j, cell in enumerate(row[f_dim:f_dim + m]):
                if cell not in ("0", "1"):
                    problems.append(f"row {lineno}: attribute a{j} value {cell!r} not in {{0,1}}")
                    bad = True
                    break
                attrs[j] = int(cell)
            if bad:
                continue
            try:
                ident = int(row[-1])
            except ValueError:
                problems.append(f"row {lineno}: non-integer id {row[-1]!r}")
                continue
            samples.append(Sample(features=features, attrs=attrs, id=ident))
    if problems:
        raise DataViolationError(f"{path}: {len(problems)} malformed row(s)", violations=problems)
    if not samples:
        raise DataViolationError(f"{path}: no data rows")
    violations = validate_dataset(samples)
    if violations:
        raise DataViolationError(f"{path}: dataset contract violated", violations=violations)
    return samples, {"feature_dim": f_dim, "num_attrs": m, "columns": header}


def split_by_id(samples: list[Sample], train_frac: float,
                rng: np.random.Generator) -> tuple[list[Sample], list[Sample]]:
    """Identity-disjoint split; proportions apply to the identity count."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie strictly between 0 and 1")
    ids = np.array([s.id for s in samples], dtype=np.int64)
    unique, first = np.unique(ids, return_index=True)
    unique = unique[np.argsort(first)]
    if unique.shape[0] < 2:
        raise ValueError("need at least 2 distinct ids to split")
    order = rng.permutation(unique.shape[0])
    n_train = int(round(train_frac * unique.shape[0]))
    n_train = min(max(n_train, 1), unique.shape[0] - 1)
    train_ids = set(int(unique[i]) for i in order[:n_train])
    train = [s for s in samples if s.id in train_ids]
    test = [s for s in samples if s.id not in train_ids]
    return train, test
