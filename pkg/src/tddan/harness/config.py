"""Experiment configuration stored as a single JSON document.

Top-level sections are ``dataset``, ``model``, ``training`` and ``eval``; any
key left out takes the desk-scale default below.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from ..errors import InvalidConfiguration
from ..nets.config import LossWeights, ModelConfig, TcnConfig, default_weights

DESK_TCN = TcnConfig(B=16, H=32, P=3, X=4, R=2)


@dataclass(frozen=True)
class DatasetConfig:
    num_scenes: int = 200
    # speaker count -> proportion of scenes
    speaker_counts: dict = field(default_factory=lambda: {2: 1.0})
    sample_rate: int = 8000
    duration_s: float = 2.0
    master_seed: int = 0

    def __post_init__(self):
        counts = {int(k): float(v) for k, v in dict(self.speaker_counts).items()}
        object.__setattr__(self, "speaker_counts", counts)
        if self.num_scenes < 1:
            raise InvalidConfiguration("dataset.num_scenes must be >= 1")
        if not counts or any(not 1 <= k <= 4 for k in counts):
            raise InvalidConfiguration("dataset.speaker_counts keys must be in 1..4")
        if any(v < 0 for v in counts.values()) or sum(counts.values()) <= 0:
            raise InvalidConfiguration("dataset.speaker_counts proportions must be non-negative and not all zero")
        if self.sample_rate <= 0 or self.duration_s <= 0:
            raise InvalidConfiguration("dataset.sample_rate and duration_s must be positive")


@dataclass(frozen=True)
class TrainingConfig:
    lr: float = 1e-3
    max_epochs: int = 50
    patience_epochs: int = 3
    segment_s: float = 4.0
    batch_size: int = 16
    seed: int = 0
    # None selects the preset for the model kind/encoder
    loss_weights: LossWeights | None = None
    max_steps: int | None = None

    def __post_init__(self):
        if self.patience_epochs < 1:
            raise InvalidConfiguration("training.patience_epochs must be >= 1")
        if self.segment_s <= 0:
            raise InvalidConfiguration("training.segment_s must be positive")
        if self.lr <= 0 or self.max_epochs < 1 or self.batch_size < 1:
            raise InvalidConfiguration("training.lr, max_epochs and batch_size must be positive")


@dataclass(frozen=True)
class EvalConfig:
    attractor_mode: str = "oracle"
    metrics: tuple = ("si_sdr", "sdr")
    sdr_filter_len: int = 512
    kmeans_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if self.attractor_mode not in ("oracle", "kmeans"):
            raise InvalidConfiguration("eval.attractor_mode must be 'oracle' or 'kmeans'")
        if self.sdr_filter_len < 1:
            raise InvalidConfiguration("eval.sdr_filter_len must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=lambda: ModelConfig(tcn=DESK_TCN))
    training: TrainingConfig = field(default_factory=TrainingConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    @property
    def loss_weights(self):
        return self.training.loss_weights or default_weights(self.model.kind, self.model.encoder)

    def to_dict(self):
        d = asdict(self)
        d["dataset"]["speaker_counts"] = {str(k): v for k, v in self.dataset.speaker_counts.items()}
        d["eval"]["metrics"] = list(self.eval.metrics)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidConfiguration(f"unknown config sections: {sorted(unknown)}")
        try:
            model = dict(d.get("model", {}))
            model.setdefault("tcn", asdict(DESK_TCN))
            training = dict(d.get("training", {}))
            if training.get("loss_weights") is not None:
                training["loss_weights"] = LossWeights(**training["loss_weights"])
            return cls(
                dataset=DatasetConfig(**d.get("dataset", {})),
                model=ModelConfig.from_dict(model),
                training=TrainingConfig(**training),
                eval=EvalConfig(**d.get("eval", {})),
            )
        except TypeError as exc:
            raise InvalidConfiguration(str(exc)) from exc


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidConfiguration(f"{path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def dump_config(cfg):
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
