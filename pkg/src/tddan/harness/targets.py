"""Oracle-mask systems and learning-target comparisons.

Oracle masks are applied to the mixture STFT and resynthesized with the
mixture phase.  They act as upper-bound "systems" in evaluation and feed the
target-comparison and mask-histogram reports.
"""

from __future__ import annotations

import numpy as np

from .. import masks, metrics
from ..transforms import ComplexSpectrogram, istft, sqrt_hann, stft

ORACLE_WINDOW = 512
ORACLE_HOP = 256
ORACLE_SYSTEMS = ("mixture", "irm", "irm-derevb", "wfm", "wfm-derevb")


def _spec(x, n=ORACLE_WINDOW, hop=ORACLE_HOP):
    return stft(x, n, hop, sqrt_hann(n))


def oracle_mask(system, mixture, early, reverberant, noise):
    """(K, T, F) oracle mask for ``system`` computed from the scene's components."""
    mix = _spec(mixture)
    if system == "irm":
        return masks.irm([np.abs(_spec(y).data) for y in reverberant], np.abs(_spec(noise).data))
    if system == "wfm":
        return masks.wfm([np.abs(_spec(y).data) for y in reverberant], np.abs(_spec(noise).data))
    if system == "irm-derevb":
        return masks.irm_derevb([_spec(d).data for d in early], mix.data)
    if system == "wfm-derevb":
        return masks.wfm_derevb([_spec(d).data for d in early], mix.data)
    raise ValueError(f"unknown oracle system {system!r}")


def oracle_estimates(system, mixture, early, reverberant, noise):
    """Per-speaker waveform estimates of an oracle-mask system (``mixture`` passes the input through)."""
    if system == "mixture":
        return [np.array(mixture, dtype=np.float64) for _ in early]
    mix = _spec(mixture)
    m = oracle_mask(system, mixture, early, reverberant, noise).data
    return [istft(ComplexSpectrogram(mix.data * mk, mix.window_size, mix.hop, mix.window, mix.length))
            for mk in m]


def mean_si_sdr(estimates, references):
    return float(np.mean([metrics.si_sdr(e, r) for e, r in zip(estimates, references)]))


def high_mask_fractions(early, reverberant, noise, threshold=0.95):
    """Fractions of bins above ``threshold`` for two masks of one scene.

    Returns ``(reverberant, early_only)``: the dereverberation IRM on the real
    mixture, and the separation IRM on a mixture made of early reflections alone.
    """
    mixture = np.sum(reverberant, axis=0) + noise
    derevb = masks.irm_derevb([_spec(d).data for d in early], _spec(mixture).data)
    early_only = masks.irm([np.abs(_spec(d).data) for d in early], 0.0)
    return masks.high_mask_fraction(derevb, threshold), masks.high_mask_fraction(early_only, threshold)


TARGET_FIELDS = ("target", "scenes", "si_sdr_db", "sdr_db")


def compare_targets(scenes, filter_len=512):
    """Mean SI-SDR/SDR of candidate learning targets against the clean source.

    ``scenes`` yields objects with ``source``, ``early``, ``reverberant`` lists
    and a ``mixture``.  Rows: ``source`` (identity), ``early``, ``reverberant``,
    ``mixture``.
    """
    scores = {name: ([], []) for name in ("source", "early", "reverberant", "mixture")}
    count = 0
    for s in scenes:
        count += 1
        for k, clean in enumerate(s.source):
            candidates = {"source": clean, "early": s.early[k], "reverberant": s.reverberant[k],
                          "mixture": s.mixture}
            for name, x in candidates.items():
                scores[name][0].append(metrics.si_sdr(x, clean))
                scores[name][1].append(metrics.sdr_projective(x, clean, filter_len))
    return [{"target": name, "scenes": count, "si_sdr_db": float(np.mean(si)), "sdr_db": float(np.mean(sdr))}
            for name, (si, sdr) in scores.items()]
