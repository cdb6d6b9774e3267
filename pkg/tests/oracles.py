"""Independent brute-force oracles used by the tests.

Everything here is computed with plain Python loops and math.* so it shares
no code path with the package implementation it checks.
"""

from __future__ import annotations

import math

import numpy as np


def naive_distance_matrix(rows) -> list[list[float]]:
    """Per-pair Euclidean distances with an explicit scalar loop."""
    b = len(rows)
    out = [[0.0] * b for _ in range(b)]
    for i in range(b):
        for k in range(b):
            acc = 0.0
            for x, y in zip(rows[i], rows[k]):
                acc += (float(x) - float(y)) ** 2
            out[i][k] = math.sqrt(acc)
    return out


def exhaustive_quintuplet(dist, attr_labels, id_labels, anchor):
    """Linear scan over all candidates, ties to the lowest index.

    Returns (p1, p2, p3, n) with None for empty candidate sets.
    """
    b = len(attr_labels)
    p1 = p2 = p3 = n = None
    d_p1 = d_p3 = -math.inf
    d_p2 = d_n = math.inf
    for i in range(b):
        d = float(dist[anchor][i])
        same_attr = attr_labels[i] == attr_labels[anchor]
        same_id = id_labels[i] == id_labels[anchor]
        if same_attr and same_id and i != anchor and d > d_p1:
            p1, d_p1 = i, d
        if same_attr and not same_id:
            if d < d_p2:
                p2, d_p2 = i, d
            if d > d_p3:
                p3, d_p3 = i, d
        if not same_attr and d < d_n:
            n, d_n = i, d
    return p1, p2, p3, n


def scalar_ce(probs, labels, eps=1e-12) -> float:
    """Cross entropy with explicit scalar loops: sum over attributes,
    mean over samples, probabilities clamped inside the logs."""
    b = len(probs)
    total = 0.0
    for i in range(b):
        for p, y in zip(probs[i], labels[i]):
            pc = min(max(float(p), eps), 1.0 - eps)
            total += float(y) * math.log(pc) + (1.0 - float(y)) * math.log(1.0 - pc)
    return -total / b


def scalar_metric_losses(quints, dists, alpha1, alpha2, alpha3):
    """Recompute inter / intra / abr means with scalar accumulation."""
    sums = {"inter": 0.0, "intra": 0.0, "abr": 0.0}
    counts = {"inter": 0, "intra": 0, "abr": 0}
    for q in quints:
        d = dists[q.attr]
        if q.p3 is not None and q.n is not None:
            counts["inter"] += 1
            sums["inter"] += max(float(d[q.anchor][q.p3]) - float(d[q.anchor][q.n]) + alpha1, 0.0)
        if q.p1 is not None and q.p2 is not None:
            counts["intra"] += 1
            sums["intra"] += max(float(d[q.anchor][q.p1]) - float(d[q.anchor][q.p2]) + alpha2, 0.0)
        if q.n is not None:
            counts["abr"] += 1
            sums["abr"] += max(alpha3 - float(d[q.anchor][q.n]), 0.0)
    return {k: (sums[k] / counts[k] if counts[k] else 0.0) for k in sums}, counts


def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of an array."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f(x)
        flat[i] = orig - h
        down = f(x)
        flat[i] = orig
        g[i] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """L2 relative error, 0 when both vanish."""
    na = float(np.linalg.norm(analytic))
    nn = float(np.linalg.norm(numeric))
    if na == 0.0 and nn == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / max(na, nn)


def jacobi_eigh(matrix, sweeps: int = 100, tol: float = 1e-14):
    """Cyclic Jacobi eigensolver for small symmetric matrices.

    Returns (eigenvalues, eigenvectors as columns), unordered.
    """
    a = [[float(v) for v in row] for row in np.asarray(matrix)]
    n = len(a)
    v = [[1.0 if i == k else 0.0 for k in range(n)] for i in range(n)]
    for _ in range(sweeps):
        off = math.sqrt(sum(a[i][k] ** 2 for i in range(n) for k in range(n) if i != k))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p][q]) < tol:
                    continue
                theta = 0.5 * math.atan2(2.0 * a[p][q], a[q][q] - a[p][p])
                c, s = math.cos(theta), math.sin(theta)
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
    return np.array([a[i][i] for i in range(n)]), np.array(v)
