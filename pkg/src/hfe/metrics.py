"""Evaluation protocol: class-based and instance-based metrics, embedding
diagnostics, and a deterministic 2-D projection for scatter exports."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .mining import mine_quintuplets, pairwise_distances
from .validation import check_binary_labels


@dataclass(frozen=True)
class MetricReport:
    """Class-based accuracies plus instance-based scores, all in [0, 1]."""

    class_based_per_attr: tuple[float, ...]
    class_based_avg: float
    instance_acc: float
    instance_prec: float
    instance_recall: float
    instance_f1: float

    def to_dict(self) -> dict:
        return {
            "class_based_per_attr": list(self.class_based_per_attr),
            "class_based_avg": self.class_based_avg,
            "instance_acc": self.instance_acc,
            "instance_prec": self.instance_prec,
            "instance_recall": self.instance_recall,
            "instance_f1": self.instance_f1,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        lines = ["metric                value", "-" * 28]
        for j, acc in enumerate(self.class_based_per_attr):
            lines.append(f"attr {j:<3d} accuracy     {acc:.4f}")
        lines.append(f"class-based avg       {self.class_based_avg:.4f}")
        lines.append(f"instance accuracy     {self.instance_acc:.4f}")
        lines.append(f"instance precision    {self.instance_prec:.4f}")
        lines.append(f"instance recall       {self.instance_recall:.4f}")
        lines.append(f"instance F1           {self.instance_f1:.4f}")
        return "\n".join(lines)


def class_based_metrics(preds, labels) -> tuple[np.ndarray, float]:
    """Per-attribute accuracy and its unweighted mean over attributes."""
    P = check_binary_labels(preds, "preds")
    Y = check_binary_labels(labels, "labels")
    if P.shape != Y.shape:
        raise ValueError(f"shape mismatch: preds {P.shape} vs labels {Y.shape}")
    per_attr = (P == Y).mean(axis=0)
    return per_attr, float(per_attr.mean())


def instance_based_metrics(preds, labels) -> tuple[float, float, float, float]:
    """Per-sample scores over positive attribute sets, averaged over samples.

    accuracy_i = |TP| / |pred OR true| (Jaccard), precision_i = |TP| / |pred|,
    recall_i = |TP| / |true|. An empty denominator scores 1 when both sets
    are empty and 0 otherwise. F1 is the harmonic mean of the averaged
    precision and recall.
    """
    P = check_binary_labels(preds, "preds")
    Y = check_binary_labels(labels, "labels")
    if P.shape != Y.shape:
        raise ValueError(f"shape mismatch: preds {P.shape} vs labels {Y.shape}")
    tp = np.sum((P == 1) & (Y == 1), axis=1).astype(np.float64)
    n_pred = P.sum(axis=1).astype(np.float64)
    n_true = Y.sum(axis=1).astype(np.float64)
    union = n_pred + n_true - tp

    both_empty = (n_pred == 0) & (n_true == 0)
    acc = np.where(union > 0, tp / np.maximum(union, 1), 0.0)
    prec = np.where(n_pred > 0, tp / np.maximum(n_pred, 1), 0.0)
    rec = np.where(n_true > 0, tp / np.maximum(n_true, 1), 0.0)
    acc[both_empty] = 1.0
    prec[both_empty] = 1.0
    rec[both_empty] = 1.0

    p_mean = float(prec.mean())
    r_mean = float(rec.mean())
    f1 = 2.0 * p_mean * r_mean / (p_mean + r_mean) if p_mean + r_mean > 0 else 0.0
    return float(acc.mean()), p_mean, r_mean, f1


def metric_report(preds, labels) -> MetricReport:
    per_attr, avg = class_based_metrics(preds, labels)
    acc, prec, rec, f1 = instance_based_metrics(preds, labels)
    return MetricReport(tuple(float(a) for a in per_attr), avg, acc, prec, rec, f1)


@dataclass(frozen=True)
class EmbeddingDiagnostics:
    """Mean pairwise distances by relation, plus the fraction of anchors
    whose mined quintuplet satisfies the strict ordering chain
    d(a,p1) < d(a,p2) < d(a,p3) < d(a,n)."""

    mean_intra_id_dist: float
    mean_intra_class_dist: float
    mean_inter_class_dist: float
    quintuplet_order_rate: float

    def to_dict(self) -> dict:
        return {
            "mean_intra_id_dist": self.mean_intra_id_dist,
            "mean_intra_class_dist": self.mean_intra_class_dist,
            "mean_inter_class_dist": self.mean_inter_class_dist,
            "quintuplet_order_rate": self.quintuplet_order_rate,
        }


def embedding_diagnostics(embeddings_per_attr: list[np.ndarray], attrs,
                          ids) -> list[EmbeddingDiagnostics]:
    """Per-attribute structural diagnostics of an embedding space."""
    attrs = np.asarray(attrs)
    ids = np.asarray(ids)
    b = attrs.shape[0]
    dists = [pairwise_distances(E) for E in embeddings_per_attr]
    quints = mine_quintuplets(embeddings_per_attr, attrs, ids, dists=dists)

    iu, ik = np.triu_indices(b, k=1)
    same_id = ids[iu] == ids[ik]
    out = []
    for j, D in enumerate(dists):
        vals = D[iu, ik]
        same_class = attrs[iu, j] == attrs[ik, j]
        pair_mean = lambda mask: float(vals[mask].mean()) if mask.any() else 0.0
        ordered = 0
        for q in quints[j * b:(j + 1) * b]:
            if None in (q.p1, q.p2, q.p3, q.n):
                continue
            a = q.anchor
            if D[a, q.p1] < D[a, q.p2] < D[a, q.p3] < D[a, q.n]:
                ordered += 1
        out.append(EmbeddingDiagnostics(
            mean_intra_id_dist=pair_mean(same_id),
            mean_intra_class_dist=pair_mean(same_class & ~same_id),
            mean_inter_class_dist=pair_mean(~same_class),
            quintuplet_order_rate=ordered / b,
        ))
    return out


def project_2d(embeddings: np.ndarray) -> np.ndarray:
    """Deterministic PCA onto the top-2 principal components.

    Mean-centered eigendecomposition of the covariance; each eigenvector is
    oriented so its largest-magnitude coordinate is positive, which pins the
    otherwise arbitrary sign.
    """
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("project_2d needs at least 2 rows")
    Xc = X - X.mean(axis=0)
    d = X.shape[1]
    cov = (Xc.T @ Xc) / (X.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    comps = []
    for rank in range(min(2, d)):
        v = eigvecs[:, d - 1 - rank].copy()
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        comps.append(v)
    coords = Xc @ np.stack(comps, axis=1)
    if coords.shape[1] < 2:
        coords = np.hstack([coords, np.zeros((X.shape[0], 1))])
    return coords


def write_projection_csv(path, coords: np.ndarray, attr_values, ids) -> None:
    """Scatter export: one x,y,attr,id row per sample."""
    attr_values = np.asarray(attr_values)
    ids = np.asarray(ids)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("x,y,attr,id\n")
        for i in range(coords.shape[0]):
            f.write(f"{float(coords[i, 0])!r},{float(coords[i, 1])!r},"
                    f"{int(attr_values[i])},{int(ids[i])}\n")
