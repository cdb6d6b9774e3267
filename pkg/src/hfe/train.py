"""Training loop wiring sampling, forward, mining, losses, and the optimizer."""

from __future__ import annotations

import math

import numpy as np

from .config import HFEConfig
from .errors import NumericalError
from .losses import LossFlags, MarginSet, batch_loss, dynamic_weight
from .mining import pk_sample_indices
from .model import TrainState, backward_and_step, forward_cached
from .types import LossReport

LOG_HEADER = LossReport.CSV_HEADER


def margin_set(config: HFEConfig) -> MarginSet:
    return MarginSet(config.alpha1, config.alpha2, config.alpha3)


def train_step(state: TrainState, X: np.ndarray, Y: np.ndarray, ids: np.ndarray,
               flags: LossFlags) -> LossReport:
    """One optimizer step: P x K batch, forward, mine, losses, Adam update.

    The schedule weight is evaluated at the current (0-based) step count,
    so the very first step is pure cross entropy; past total_iters the
    weight saturates at w0.
    """
    cfg = state.config
    idx = pk_sample_indices(ids, cfg.ids_per_batch, cfg.samples_per_id, state.rng)
    xb, yb, idb = X[idx], Y[idx], ids[idx]
    embeddings, probs, cache = forward_cached(state.model, xb)
    if flags.use_dynamic_weight:
        w = dynamic_weight(min(state.step, cfg.total_iters), cfg.total_iters, cfg.w0)
    else:
        w = cfg.w0
    report, grads = batch_loss(embeddings, probs, yb, idb, margin_set(cfg), flags, w)
    if not math.isfinite(report.total):
        raise NumericalError(f"non-finite loss at step {state.step}")
    backward_and_step(state, cache, grads, cfg.learning_rate)
    return report


def train_loop(state: TrainState, X: np.ndarray, Y: np.ndarray, ids: np.ndarray,
               flags: LossFlags, steps: int | None = None) -> list[LossReport]:
    """Run ``steps`` optimizer steps (default: config.total_iters)."""
    if steps is None:
        steps = state.config.total_iters
    return [train_step(state, X, Y, ids, flags) for _ in range(steps)]


def write_train_log(path, reports: list[LossReport], log_every: int = 1,
                    start_step: int = 0) -> None:
    """CSV training log, one line per logged step. Floats use repr so the
    file is byte-stable and round-trips exactly."""
    log_every = max(1, int(log_every))
    lines = [LOG_HEADER]
    for i, report in enumerate(reports):
        step = start_step + i
        if step % log_every == 0 or i == len(reports) - 1:
            lines.append(report.csv_row(step))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
