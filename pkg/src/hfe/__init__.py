"""Hierarchical feature embedding for multi-attribute recognition.

Library pieces: quintuplet batch-hard mining over per-attribute embedding
spaces, the composite metric loss (inter-class margin + intra-identity
ordering + absolute boundary) with analytic gradients, a cosine schedule
for the metric weight, a small multi-branch network trained with Adam,
synthetic hierarchical data, and the class-based / instance-based
evaluation protocol. ``HFEClassifier`` exposes the whole pipeline behind
the scikit-learn estimator API; the ``hfe`` CLI wires it into reproducible
experiments.
"""

from .config import HFEConfig
from .data import SynthSpec, generate_synthetic, load_csv, save_csv, split_by_id
from .errors import (CheckpointError, DataViolationError, HFEError,
                     NumericalError, UsageError)
from .estimator import HFEClassifier
from .losses import (GradientSet, LossFlags, MarginSet, abr_loss, batch_loss,
                     ce_loss, dynamic_weight, hfe_loss, hinge, inter_loss,
                     intra_loss, pairwise_intra_loss, total_loss)
from .metrics import (EmbeddingDiagnostics, MetricReport, class_based_metrics,
                      embedding_diagnostics, instance_based_metrics,
                      metric_report, project_2d)
from .mining import (mine_batch, mine_quintuplets, pairwise_distances,
                     pk_sample, select_quintuplet)
from .model import (Model, TrainState, backward_and_step, forward, init_model,
                    load_checkpoint, new_train_state, save_checkpoint)
from .rng import seeded_rng, spawn_rng
from .train import train_loop, train_step
from .types import Batch, ComponentCounts, LossReport, Quintuplet, Sample, as_arrays
from .validation import validate_dataset

__version__ = "0.1.0"

__all__ = [
    "Batch", "CheckpointError", "ComponentCounts", "DataViolationError",
    "EmbeddingDiagnostics", "GradientSet", "HFEClassifier", "HFEConfig",
    "HFEError", "LossFlags", "LossReport", "MarginSet", "MetricReport",
    "Model", "NumericalError", "Quintuplet", "Sample", "SynthSpec",
    "TrainState", "UsageError", "abr_loss", "as_arrays", "backward_and_step",
    "batch_loss", "ce_loss", "class_based_metrics", "dynamic_weight",
    "embedding_diagnostics", "forward", "generate_synthetic", "hfe_loss",
    "hinge", "init_model", "instance_based_metrics", "inter_loss",
    "intra_loss", "load_checkpoint", "load_csv", "metric_report",
    "mine_batch", "mine_quintuplets", "new_train_state",
    "pairwise_distances", "pairwise_intra_loss", "pk_sample", "project_2d",
    "save_checkpoint", "save_csv", "seeded_rng", "select_quintuplet",
    "spawn_rng", "split_by_id", "total_loss", "train_loop", "train_step",
    "validate_dataset",
]
