"""Oracle masks and speech-presence gating."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgument
from .transforms import Rep, encode, magnitude

MASK_KINDS = ("IBM", "IRM", "WFM", "MRM", "TD")


@dataclass(frozen=True)
class MaskTensor:
    data: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in MASK_KINDS:
            raise InvalidArgument(f"unknown mask kind {self.kind!r}")

    @property
    def num_speakers(self):
        return self.data.shape[0]


@dataclass(frozen=True)
class PresenceMask:
    data: np.ndarray

    @property
    def count(self):
        return int(self.data.sum())


def _safe_ratio(num, den):
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


def ibm_tf(early_mags):
    """Speaker k owns a bin iff its magnitude beats the sum of all others (ties: nobody)."""
    mags = np.asarray(early_mags, dtype=np.float64)
    if mags.ndim < 2 or mags.shape[0] < 1:
        raise InvalidArgument("expected K x T x F magnitudes")
    others = mags.sum(axis=0, keepdims=True) - mags
    return MaskTensor((mags > others).astype(np.float64), "IBM")


def ibm_rep(encoder, early_waveforms):
    """IBM on a learned/fixed representation; ``encoder`` is a kernel or a callable."""
    mags = []
    for d in early_waveforms:
        rep = encode(d, encoder) if not callable(encoder) else encoder(d)
        mags.append(magnitude(rep) if isinstance(rep, Rep) else np.abs(rep))
    return ibm_tf(np.stack(mags))


def irm(reverberant_mags, noise_mag):
    """Separation-only ratio mask |y_k| / (sum_q |y_q| + |n|)."""
    y = np.asarray(reverberant_mags, dtype=np.float64)
    den = y.sum(axis=0, keepdims=True) + np.asarray(noise_mag, dtype=np.float64)
    return MaskTensor(_safe_ratio(y, den), "IRM")


def irm_derevb(early_specs, mixture_spec):
    """|d_k| / (|y - d_k| + |d_k|), with the difference taken on complex spectra."""
    d = np.asarray(early_specs)
    resid = np.abs(np.asarray(mixture_spec)[None] - d)
    dm = np.abs(d)
    return MaskTensor(_safe_ratio(dm, resid + dm), "IRM")


def wfm(reverberant_mags, noise_mag):
    y2 = np.square(np.asarray(reverberant_mags, dtype=np.float64))
    den = y2.sum(axis=0, keepdims=True) + np.square(np.asarray(noise_mag, dtype=np.float64))
    return MaskTensor(np.sqrt(_safe_ratio(y2, den)), "WFM")


def wfm_derevb(early_specs, mixture_spec):
    d = np.asarray(early_specs)
    resid2 = np.abs(np.asarray(mixture_spec)[None] - d) ** 2
    d2 = np.abs(d) ** 2
    return MaskTensor(np.sqrt(_safe_ratio(d2, resid2 + d2)), "WFM")


def speech_presence(power, top_percent=15.0):
    """Binary mask on the ceil(T*C*p/100) highest-power bins.

    Ties are resolved in row-major (t, c) order so the selection is deterministic.
    """
    if not 0 < top_percent <= 100:
        raise InvalidArgument("top_percent must be in (0, 100]")
    power = np.asarray(power, dtype=np.float64)
    count = math.ceil(Fraction(power.size) * Fraction(str(top_percent)) / 100)
    order = np.argsort(-power.ravel(), kind="stable")
    flat = np.zeros(power.size)
    flat[order[:count]] = 1.0
    return PresenceMask(flat.reshape(power.shape))


def high_mask_fraction(mask, threshold=0.95):
    return float(np.mean(np.asarray(mask.data if isinstance(mask, MaskTensor) else mask) > threshold))
