"""Signal-level metrics: SI-SDR, projected SDR and permutation alignment."""

from __future__ import annotations

import itertools
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg, signal

from .errors import InvalidArgument, NumericalFailure

SI_SDR_EPS = 1e-12
SDR_LOADING = 1e-10
FLOOR_DB = -300.0
CEIL_DB = 300.0


def _db(num, den):
    if num <= 0:
        return FLOOR_DB
    if den <= 0:
        return CEIL_DB
    return float(np.clip(10.0 * math.log10(num / den), FLOOR_DB, CEIL_DB))


def si_sdr(estimate, reference, eps=SI_SDR_EPS):
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape:
        raise InvalidArgument(f"length mismatch {est.shape} vs {ref.shape}")
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise InvalidArgument("reference is all zeros")
    target = (float(est @ ref) / ref_energy) * ref
    residual = est - target
    return _db(float(target @ target), float(residual @ residual) + eps)


def shift_matrix(reference, filter_len):
    """Columns are the reference delayed by 0..filter_len-1 samples (zero-filled)."""
    ref = np.asarray(reference, dtype=np.float64)
    padded = np.concatenate([np.zeros(filter_len - 1), ref])
    return sliding_window_view(padded, filter_len)[:, ::-1]


def shift_gram(reference, filter_len):
    """``A.T @ A`` for ``A = shift_matrix(reference, filter_len)`` without forming ``A``.

    Row 0 is the autocorrelation; each further row drops the sample that the
    extra delay pushes past the end: ``G[i, j] = G[i-1, j-1] - r[N-i] r[N-j]``.
    """
    ref = np.asarray(reference, dtype=np.float64)
    n, L = ref.size, filter_len
    acf = signal.correlate(ref, ref, mode="full", method="auto")[n - 1:n - 1 + L]
    tail = ref[::-1][:L]  # tail[t] = r[N-1-t]
    gram = np.empty((L, L))
    gram[0] = acf
    for i in range(1, L):
        gram[i, 1:] = gram[i - 1, :-1] - tail[i - 1] * tail[:L - 1]
        gram[i, 0] = gram[0, i]
    return gram


def sdr_projective(estimate, reference, filter_len=512, loading=SDR_LOADING):
    """SDR after least-squares projection onto delayed copies of the reference.

    The normal equations get ``loading`` times their mean diagonal added before
    the Cholesky solve.
    """
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if filter_len < 1:
        raise InvalidArgument("filter_len must be >= 1")
    if est.shape != ref.shape:
        raise InvalidArgument("length mismatch")
    if ref.size <= filter_len:
        raise InvalidArgument("reference must be longer than the filter")
    n = ref.size
    gram = shift_gram(ref, filter_len)
    # rhs[i] = sum_n ref[n - i] est[n]
    rhs = signal.correlate(est, ref, mode="full", method="auto")[n - 1:n - 1 + filter_len]
    lam = loading * max(float(np.trace(gram)) / filter_len, np.finfo(float).tiny)
    gram[np.diag_indices_from(gram)] += lam
    try:
        factor = linalg.cho_factor(gram, check_finite=True)
        h = linalg.cho_solve(factor, rhs)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"projection solve failed: {exc}") from exc
    if not np.all(np.isfinite(h)):
        raise NumericalFailure("projection produced non-finite filter")
    proj = signal.fftconvolve(ref, h)[:n]
    err = est - proj
    return _db(float(proj @ proj), float(err @ err))


def score_matrix(estimates, references, metric=si_sdr):
    return np.array([[metric(e, r) for r in references] for e in estimates])


def align_scores(scores):
    """Best assignment for a K x K matrix ``scores[estimate, reference]``.

    Returns ``(perm, values)`` where ``perm[k]`` is the estimate matched to
    reference ``k``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    k = scores.shape[0]
    if k > 4:
        raise InvalidArgument("exhaustive alignment supports at most 4 speakers")
    cols = np.arange(k)
    best = max(itertools.permutations(range(k)), key=lambda p: scores[list(p), cols].mean())
    return tuple(best), scores[list(best), cols]


def eval_align(estimates, references, metric=si_sdr):
    perm, values = align_scores(score_matrix(estimates, references, metric))
    return perm, [float(v) for v in values]
