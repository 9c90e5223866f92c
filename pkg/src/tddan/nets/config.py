"""Model and loss hyperparameters."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

from ..errors import InvalidConfiguration

MODEL_KINDS = ("dan", "tasnet", "tddan")
ENCODER_KINDS = ("lps", "stft", "free")


@dataclass(frozen=True)
class TcnConfig:
    B: int = 128
    H: int = 512
    P: int = 3
    X: int = 8
    R: int = 4

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise InvalidConfiguration(f"TcnConfig.{f.name} must be >= 1")
        if self.P % 2 == 0:
            raise InvalidConfiguration("depthwise kernel P must be odd to keep the frame count")

    def with_repeats(self, r):
        return TcnConfig(self.B, self.H, self.P, self.X, r)


@dataclass(frozen=True)
class LossWeights:
    alpha_r: float = 1.0
    alpha_c: float = 1.0
    alpha_d: float = 0.0
    l_d: float = math.sqrt(5.0)

    def __post_init__(self):
        if min(self.alpha_r, self.alpha_c, self.alpha_d) < 0:
            raise InvalidConfiguration("loss weights must be non-negative")
        if self.l_d <= 0:
            raise InvalidConfiguration("l_d must be positive")


DAN_WEIGHTS = LossWeights(1.0, 0.05, 0.0)
TDDAN_WEIGHTS = LossWeights(1.0, 1.0, 0.0)
TDDAN_FREE_WEIGHTS = LossWeights(1.0, 1.0, 1.0)


def default_weights(kind, encoder):
    if kind == "dan":
        return DAN_WEIGHTS
    if kind == "tddan" and encoder == "free":
        return TDDAN_FREE_WEIGHTS
    return TDDAN_WEIGHTS


@dataclass(frozen=True)
class Framing:
    # LPS front end: 64 ms Hann window, 32 ms hop at 8 kHz
    lps_window: int = 512
    lps_hop: int = 256
    # time-domain SES encoders: window is twice the hop
    ses_hop: int = 16
    ses_free_channels: int = 64
    # free SDS / Conv-TasNet encoder
    sds_kernel: int = 16
    sds_hop: int = 8
    sds_channels: int = 128
    top_percent: float = 15.0

    @property
    def ses_window(self):
        return 2 * self.ses_hop


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "tddan"
    encoder: str = "stft"
    tcn: TcnConfig = field(default_factory=TcnConfig)
    D: int = 20
    E: int = 20
    ses_repeats: int = 1
    num_speakers: int = 2
    sample_rate: int = 8000
    framing: Framing = field(default_factory=Framing)
    recon_domain: str = "magnitude"
    kmeans_normalize: bool = False
    input_norm: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidConfiguration(f"model kind must be one of {MODEL_KINDS}")
        if self.encoder not in ENCODER_KINDS:
            raise InvalidConfiguration(f"encoder must be one of {ENCODER_KINDS}")
        if self.kind == "dan" and self.encoder != "lps":
            raise InvalidConfiguration("DAN uses the LPS encoder")
        if self.kind == "tddan" and not 1 <= self.ses_repeats < self.tcn.R:
            raise InvalidConfiguration("TD-DAN needs 1 <= ses_repeats < R so both streams get repeats")
        if self.recon_domain not in ("magnitude", "signed"):
            raise InvalidConfiguration("recon_domain must be 'magnitude' or 'signed'")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["tcn"] = TcnConfig(**d.get("tcn", {}))
        d["framing"] = Framing(**d.get("framing", {}))
        return cls(**d)
