"""Loss components, the dynamic weight schedule, and analytic gradients.

Composite objective per batch:

    total = ce + w * (inter + intra + abr)

where ce is binary cross entropy summed over attributes and averaged over
the batch, and the three metric terms are hinge losses over mined
quintuplets. Each metric term is averaged over the anchors that actually
have the companions it needs; anchors with empty candidate sets are
excluded from the denominator so they do not dilute the signal.

Gradients use subgradient 0 at hinge kinks and at coincident embeddings
(d = 0). Metric-loss gradients are first expressed with respect to
individual pairwise distances and then pushed onto embeddings via
d d(a,b) / d e_a = (e_a - e_b) / d(a,b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mining import mine_quintuplets, pairwise_distances
from .types import ComponentCounts, LossReport, Quintuplet

PROB_EPS = 1e-12

# one entry per affected pairwise distance: (attr, i, k, dL/d dist[i,k])
DistGrad = tuple[int, int, int, float]


@dataclass(frozen=True)
class MarginSet:
    """Hinge margins: relative inter/intra margins plus the absolute boundary."""

    alpha1: float
    alpha2: float
    alpha3: float

    def __post_init__(self):
        if not (self.alpha1 > self.alpha2 > 0.0):
            raise ValueError("margins must satisfy alpha1 > alpha2 > 0")
        if self.alpha3 <= 0.0:
            raise ValueError("alpha3 must be positive")


@dataclass(frozen=True)
class LossFlags:
    """Ablation switches for the metric components."""

    use_inter: bool = True
    use_intra: bool = True
    use_abr: bool = True
    use_dynamic_weight: bool = True
    use_pairwise_intra: bool = False

    def __post_init__(self):
        if self.use_pairwise_intra and self.use_intra:
            raise ValueError("use_pairwise_intra and use_intra are mutually exclusive")


@dataclass
class GradientSet:
    """Gradients handed to the optimizer: one matrix per attribute branch
    (w.r.t. embeddings) plus the cross-entropy gradient w.r.t. logits."""

    d_embeddings: list[np.ndarray]
    d_logits: np.ndarray


def hinge(x: float) -> float:
    """max(x, 0)."""
    return x if x > 0.0 else 0.0


def ce_loss(probs: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Binary cross entropy summed over attributes, averaged over samples.

    Returns the loss and its gradient with respect to the pre-sigmoid
    logits, (p - y) / B. Probabilities are clamped to
    [PROB_EPS, 1 - PROB_EPS] inside the logs only.
    """
    P = np.asarray(probs, dtype=np.float64)
    Y = np.asarray(labels, dtype=np.float64)
    if P.shape != Y.shape or P.ndim != 2:
        raise ValueError(f"shape mismatch: probs {P.shape} vs labels {Y.shape}")
    B = P.shape[0]
    Pc = np.clip(P, PROB_EPS, 1.0 - PROB_EPS)
    value = -float(np.sum(Y * np.log(Pc) + (1.0 - Y) * np.log(1.0 - Pc))) / B
    d_logits = (P - Y) / B
    return value, d_logits


def _mean_hinge(terms: list[tuple[int, int, float, list[tuple[int, float]]]]):
    """Average hinge terms and scale their distance-gradient stubs.

    ``terms`` holds (attr, anchor, inside, [(other_index, sign), ...]) for
    every anchor whose candidate sets were complete. Only active terms
    (inside > 0) contribute gradient entries.
    """
    count = len(terms)
    if count == 0:
        return 0.0, 0, []
    total = 0.0
    entries: list[DistGrad] = []
    inv = 1.0 / count
    for attr, anchor, inside, stubs in terms:
        if inside > 0.0:
            total += inside
            for other, sign in stubs:
                entries.append((attr, anchor, other, sign * inv))
    return float(total) / count, count, entries


def inter_loss(quints: list[Quintuplet], dists: list[np.ndarray],
               alpha1: float) -> tuple[float, int, list[DistGrad]]:
    """Attribute-level separation: hinge(d(a,p3) - d(a,n) + alpha1)."""
    terms = []
    for q in quints:
        if q.p3 is None or q.n is None:
            continue
        D = dists[q.attr]
        inside = D[q.anchor, q.p3] - D[q.anchor, q.n] + alpha1
        terms.append((q.attr, q.anchor, inside, [(q.p3, 1.0), (q.n, -1.0)]))
    return _mean_hinge(terms)


def intra_loss(quints: list[Quintuplet], dists: list[np.ndarray],
               alpha2: float) -> tuple[float, int, list[DistGrad]]:
    """Identity-level ordering: hinge(d(a,p1) - d(a,p2) + alpha2)."""
    terms = []
    for q in quints:
        if q.p1 is None or q.p2 is None:
            continue
        D = dists[q.attr]
        inside = D[q.anchor, q.p1] - D[q.anchor, q.p2] + alpha2
        terms.append((q.attr, q.anchor, inside, [(q.p1, 1.0), (q.p2, -1.0)]))
    return _mean_hinge(terms)


def abr_loss(quints: list[Quintuplet], dists: list[np.ndarray],
             alpha3: float) -> tuple[float, int, list[DistGrad]]:
    """Absolute boundary: hinge(alpha3 - d(a,n))."""
    terms = []
    for q in quints:
        if q.n is None:
            continue
        inside = alpha3 - dists[q.attr][q.anchor, q.n]
        terms.append((q.attr, q.anchor, inside, [(q.n, -1.0)]))
    return _mean_hinge(terms)


def pairwise_intra_loss(quints: list[Quintuplet], dists: list[np.ndarray],
                        margin: float) -> tuple[float, int, list[DistGrad]]:
    """Ablation variant: same-id compactness only, hinge(d(a,p1) - margin)."""
    terms = []
    for q in quints:
        if q.p1 is None:
            continue
        inside = dists[q.attr][q.anchor, q.p1] - margin
        terms.append((q.attr, q.anchor, inside, [(q.p1, 1.0)]))
    return _mean_hinge(terms)


@dataclass(frozen=True)
class HFEParts:
    """The three metric components and their composition."""

    inter: float
    intra: float
    abr: float
    hfe: float
    n_inter: int
    n_intra: int
    n_abr: int


def hfe_loss(quints: list[Quintuplet], dists: list[np.ndarray],
             margins: MarginSet) -> tuple[HFEParts, list[DistGrad]]:
    """Full metric loss: inter + intra + abr, components reported separately."""
    v1, n1, g1 = inter_loss(quints, dists, margins.alpha1)
    v2, n2, g2 = intra_loss(quints, dists, margins.alpha2)
    v3, n3, g3 = abr_loss(quints, dists, margins.alpha3)
    return HFEParts(v1, v2, v3, v1 + v2 + v3, n1, n2, n3), g1 + g2 + g3


def dynamic_weight(iteration: int, total: int, w0: float) -> float:
    """Cosine ramp of the metric-loss weight from 0 at step 0 to w0 at step T.

        w = [cos((T - iter) / T * pi) / 2 + 1/2] * w0

    The endpoints and the midpoint are special-cased so they are exact in
    floating point (cos(pi/2) is not exactly zero in libm).
    """
    total = int(total)
    iteration = int(iteration)
    if total < 1:
        raise ValueError("total iterations must be >= 1")
    if not 0 <= iteration <= total:
        raise ValueError(f"iteration {iteration} outside [0, {total}]")
    remaining = total - iteration
    if remaining == 0:
        c = 1.0
    elif remaining == total:
        c = -1.0
    elif 2 * remaining == total:
        c = 0.0
    else:
        c = math.cos(math.pi * remaining / total)
    return (0.5 * c + 0.5) * w0


def total_loss(ce: float, hfe: float, w: float) -> float:
    """Composite objective: ce + w * hfe."""
    return ce + w * hfe


def distance_grads_to_embeddings(entries: list[DistGrad],
                                 embeddings_per_attr: list[np.ndarray],
                                 dists: list[np.ndarray]) -> list[np.ndarray]:
    """Convert distance-space gradients into embedding-space gradients.

    Coincident pairs (d = 0) contribute nothing (subgradient 0).
    """
    grads = [np.zeros_like(E) for E in embeddings_per_attr]
    for attr, i, k, coef in entries:
        d = dists[attr][i, k]
        if d == 0.0:
            continue
        direction = (embeddings_per_attr[attr][i] - embeddings_per_attr[attr][k]) / d
        grads[attr][i] += coef * direction
        grads[attr][k] -= coef * direction
    return grads


def batch_loss(embeddings_per_attr: list[np.ndarray], probs: np.ndarray,
               attrs: np.ndarray, ids: np.ndarray, margins: MarginSet,
               flags: LossFlags, weight: float) -> tuple[LossReport, GradientSet]:
    """Mine quintuplets, evaluate all enabled components, and assemble the
    batch gradient.

    When ``use_pairwise_intra`` is set, the pairwise variant takes over the
    intra column (reusing alpha2 as its margin) so the composition identity
    hfe = inter + intra + abr still holds.
    """
    probs = np.asarray(probs, dtype=np.float64)
    attrs = np.asarray(attrs)
    B, M = attrs.shape
    if probs.shape != (B, M) or len(embeddings_per_attr) != M:
        raise ValueError("embeddings/probs/attrs shapes disagree")

    dists = [pairwise_distances(E) for E in embeddings_per_attr]
    quints = mine_quintuplets(embeddings_per_attr, attrs, ids, dists=dists)
    ce, d_logits = ce_loss(probs, attrs)

    zero_grads = lambda: [np.zeros_like(E) for E in embeddings_per_attr]

    if flags.use_inter:
        v_inter, n_inter, ent = inter_loss(quints, dists, margins.alpha1)
        g_inter = distance_grads_to_embeddings(ent, embeddings_per_attr, dists)
    else:
        v_inter, n_inter, g_inter = 0.0, 0, zero_grads()

    if flags.use_pairwise_intra:
        v_intra, n_intra, ent = pairwise_intra_loss(quints, dists, margins.alpha2)
        g_intra = distance_grads_to_embeddings(ent, embeddings_per_attr, dists)
    elif flags.use_intra:
        v_intra, n_intra, ent = intra_loss(quints, dists, margins.alpha2)
        g_intra = distance_grads_to_embeddings(ent, embeddings_per_attr, dists)
    else:
        v_intra, n_intra, g_intra = 0.0, 0, zero_grads()

    if flags.use_abr:
        v_abr, n_abr, ent = abr_loss(quints, dists, margins.alpha3)
        g_abr = distance_grads_to_embeddings(ent, embeddings_per_attr, dists)
    else:
        v_abr, n_abr, g_abr = 0.0, 0, zero_grads()

    hfe = v_inter + v_intra + v_abr
    d_embeddings = [weight * (gi + gt + ga)
                    for gi, gt, ga in zip(g_inter, g_intra, g_abr)]

    report = LossReport(
        ce=ce, inter=v_inter, intra=v_intra, abr=v_abr, hfe=hfe,
        weight_w=weight, total=total_loss(ce, hfe, weight),
        counts=ComponentCounts(ce=B * M, inter=n_inter, intra=n_intra, abr=n_abr),
    )
    return report, GradientSet(d_embeddings=d_embeddings, d_logits=d_logits)
