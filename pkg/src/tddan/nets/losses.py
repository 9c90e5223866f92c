"""Differentiable signal losses."""

from __future__ import annotations

import itertools

import numpy as np

from ..autodiff import Tensor, add, log10, mul, square, sub, sum_
from ..errors import InvalidArgument
from ..metrics import SI_SDR_EPS


def si_sdr_tensor(estimate, reference, eps=SI_SDR_EPS):
    """SI-SDR in dB of a waveform tensor against a fixed reference."""
    ref = np.asarray(reference, dtype=np.float64)
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise InvalidArgument("reference is all zeros")
    r = Tensor(ref)
    alpha = sum_(mul(estimate, r)) * (1.0 / ref_energy)
    target = mul(alpha, r)
    resid = sub(estimate, target)
    ratio = sum_(square(target)) / add(sum_(square(resid)), eps)
    return log10(ratio) * 10.0


def upit_loss(estimates, targets):
    """Negative mean SI-SDR under the best speaker permutation.

    Returns ``(loss, perm)`` with ``perm[k]`` the estimate paired with target k.
    """
    k = len(targets)
    if len(estimates) != k:
        raise InvalidArgument("estimate/target count mismatch")
    if k > 4:
        raise InvalidArgument("uPIT is limited to 4 speakers")
    table = [[si_sdr_tensor(e, t) for t in targets] for e in estimates]
    values = np.array([[float(x.values) for x in row] for row in table])
    cols = np.arange(k)
    perm = max(itertools.permutations(range(k)), key=lambda p: values[list(p), cols].mean())
    total = table[perm[0]][0]
    for j in range(1, k):
        total = add(total, table[perm[j]][j])
    return total * (-1.0 / k), tuple(perm)


def recon_loss(mixture_mag, masks, target_mags):
    """Mean over (K, T, C) of (|y| m_k - |d_k|)^2."""
    est = mul(masks, mixture_mag)
    err = square(sub(est, target_mags))
    return sum_(err) * (1.0 / err.size)
