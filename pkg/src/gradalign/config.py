"""Hyperparameters for one alignment run."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .errors import ContractError

VARIANTS = ("grad-align", "grad-align-ea", "ablation-1", "ablation-2", "ablation-3")
MODELS = ("gin", "gcn")
AGGREGATORS = ("sum", "mean", "max")


@dataclass
class AlignConfig:
    """All knobs of the aligner.

    ``alpha=None`` means "auto": it resolves to ``n_t / n_s`` once the two
    graphs are known (the larger graph is always treated as the source).
    """

    k: int = 2
    hidden_dim: int = 150
    learning_rate: float = 0.005
    epochs: int = 100
    model: str = "gin"
    aggregator: str = "sum"
    alpha: float | None = None
    beta: float = 1.0
    iter: int = 15
    t: float = 0.1
    tau: float = 0.7
    variant: str = "grad-align"
    normalize_embeddings: bool = True
    zero_fallback: bool = True
    rng_seed: int = 0
    # training details
    tol: float = 1e-4
    patience: int = 10
    squared_loss: bool = False
    # edge augmentation
    refresh_epochs: int = 20
    full_retrain: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.k < 1:
            raise ContractError("k must be >= 1")
        if self.hidden_dim < 1:
            raise ContractError("hidden_dim must be >= 1")
        if self.alpha is not None and not self.alpha > 0:
            raise ContractError("alpha must be > 0")
        if not self.beta > 0:
            raise ContractError("beta must be > 0")
        if self.iter < 1:
            raise ContractError("iter must be >= 1")
        if not 0.0 <= self.t <= 1.0:
            raise ContractError("t must lie in [0, 1]")
        if self.epochs < 0 or self.refresh_epochs < 0:
            raise ContractError("epoch counts must be >= 0")
        if self.model not in MODELS:
            raise ContractError(f"model must be one of {MODELS}")
        if self.aggregator not in AGGREGATORS:
            raise ContractError(f"aggregator must be one of {AGGREGATORS}")
        if self.variant not in VARIANTS:
            raise ContractError(f"variant must be one of {VARIANTS}")
        if math.isnan(self.tau):
            raise ContractError("tau must not be NaN")

    def resolved_alpha(self, n_s, n_t):
        if self.alpha is not None:
            return float(self.alpha)
        big, small = max(n_s, n_t), min(n_s, n_t)
        return small / big

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def field_types(cls):
        hints = {"int": int, "float": float, "bool": bool, "str": str}
        out = {}
        for f in dataclasses.fields(cls):
            name = str(f.type).split("|")[0].strip()
            out[f.name] = hints.get(name, str)
        return out
