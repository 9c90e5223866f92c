"""Attractor estimation and embedding-side masks and clustering losses.

Embeddings are tensors of shape (T, C, D): one D-dim vector per bin of a
(T, C) representation.  IBMs are (K, T, C) and presence masks (T, C).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, einsum, relu, reshape, sigmoid, square, sub, sum_
from ..errors import EmptySpeaker, InvalidArgument
from ..masks import MaskTensor, PresenceMask
from .kmeans import kmeans


@dataclass(frozen=True)
class AttractorSet:
    data: Tensor
    source: str

    @property
    def num_speakers(self):
        return self.data.shape[0]


def _plain(x):
    if isinstance(x, (MaskTensor, PresenceMask)):
        return np.asarray(x.data, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def selection_weights(ibm, v):
    """(K, N) binary weights m_k * v over flattened bins."""
    m = _plain(ibm)
    sel = m * _plain(v)[None]
    return sel.reshape(m.shape[0], -1)


def oracle_attractors(emb, ibm, v):
    """Mean embedding over the bins each speaker dominates and that pass the presence gate."""
    t, c, d = emb.shape
    w = selection_weights(ibm, v)
    if w.shape[1] != t * c:
        raise InvalidArgument("mask and embedding shapes disagree")
    counts = w.sum(1)
    for k, n in enumerate(counts):
        if n < 1:
            raise EmptySpeaker(k)
    flat = reshape(emb, (t * c, d))
    return AttractorSet(einsum("kn,nd->kd", Tensor(w / counts[:, None]), flat), "oracle")


def kmeans_attractors(emb, v, k, seed=0, normalize=False):
    values = emb.values if isinstance(emb, Tensor) else np.asarray(emb)
    d = values.shape[-1]
    keep = _plain(v).reshape(-1) > 0
    points = values.reshape(-1, d)[keep]
    if points.shape[0] < k:
        raise InvalidArgument(f"only {points.shape[0]} selected bins for {k} speakers")
    if normalize:
        points = points / np.maximum(np.linalg.norm(points, axis=1, keepdims=True), 1e-12)
    centers, _, _ = kmeans(points, k, seed)
    return AttractorSet(Tensor(centers), "kmeans")


def _attractor_tensor(attractors):
    return attractors.data if isinstance(attractors, AttractorSet) else attractors


def ses_masks(emb, attractors):
    """Sigmoid of attractor/embedding dot products, shape (K, T, C)."""
    return sigmoid(einsum("kd,tcd->ktc", _attractor_tensor(attractors), emb))


def concentration_loss(emb, attractors, ibm, v):
    """Mean squared distance between each selected embedding and its speaker's attractor."""
    a = _attractor_tensor(attractors)
    t, c, d = emb.shape
    w = selection_weights(ibm, v)
    total = w.sum()
    if total == 0:
        return Tensor(0.0)
    flat = reshape(emb, (1, t * c, d))
    diff = sub(reshape(a, (a.shape[0], 1, d)), flat)
    per_bin = sum_(square(diff), axis=2)
    return sum_(per_bin * Tensor(w)) * (1.0 / total)


def discrimination_loss(attractors, l_d):
    """Hinge max(0, l_d^2 - sum over ordered pairs k != q of |a_k - a_q|^2)."""
    a = _attractor_tensor(attractors)
    k, d = a.shape
    if k < 2:
        return Tensor(0.0)
    diff = sub(reshape(a, (k, 1, d)), reshape(a, (1, k, d)))
    spread = sum_(square(diff))
    return relu(sub(Tensor(l_d * l_d), spread))


def sds_masks(emb, attractors, transform):
    """ReLU((W a_k)^T e_{c,t}) for SDS embeddings ``emb`` of shape (C, E, T); returns (K, C, T)."""
    a = _attractor_tensor(attractors)
    wa = einsum("kd,ed->ke", a, transform)
    return relu(einsum("ke,cet->kct", wa, emb))
