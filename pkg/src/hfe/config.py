"""Training configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict


@dataclass(frozen=True)
class HFEConfig:
    """Hyperparameters for one training run.

    Margin defaults (0.3 / 0.1 / 5 / 1 for alpha1, alpha2, alpha3, w0) are
    the published reference settings for this loss family.
    """

    num_attrs: int
    feature_dim: int
    alpha1: float = 0.3
    alpha2: float = 0.1
    alpha3: float = 5.0
    w0: float = 1.0
    total_iters: int = 1000
    embed_dim: int = 8
    hidden_dims: tuple[int, ...] = (32,)
    ids_per_batch: int = 4
    samples_per_id: int = 4
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.num_attrs < 1:
            raise ValueError("num_attrs must be a positive integer")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be a positive integer")
        if not (self.alpha1 > self.alpha2 > 0.0):
            raise ValueError("margins must satisfy alpha1 > alpha2 > 0")
        if self.alpha3 <= 0.0:
            raise ValueError("alpha3 must be positive")
        if self.w0 < 0.0:
            raise ValueError("w0 must be non-negative")
        if self.total_iters < 1:
            raise ValueError("total_iters must be >= 1")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be a positive integer")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden_dims entries must be positive integers")
        if self.ids_per_batch < 1 or self.samples_per_id < 1:
            raise ValueError("ids_per_batch and samples_per_id must be positive")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HFEConfig":
        d = dict(d)
        d["hidden_dims"] = tuple(d.get("hidden_dims", ()))
        return cls(**d)
