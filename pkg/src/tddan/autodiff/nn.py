"""Convolution and normalization ops on (channels, time) tensors."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument
from .tensor import _make, as_tensor

GLN_EPS = 1e-12


def conv_output_length(t, kernel, stride=1, dilation=1, padding=0):
    return (t + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1


def _gather_taps(xp, kernel, stride, dilation, t_out):
    span = stride * (t_out - 1) + 1
    return np.stack([xp[:, j * dilation:j * dilation + span:stride] for j in range(kernel)], axis=1)


def _scatter_taps(cols, length, stride, dilation):
    c, kernel, t_out = cols.shape
    out = np.zeros((c, length))
    span = stride * (t_out - 1) + 1
    for j in range(kernel):
        out[:, j * dilation:j * dilation + span:stride] += cols[:, j, :]
    return out


def conv1d(x, weight, bias=None, stride=1, dilation=1, groups=1, padding=0):
    """Cross-correlation of ``x`` (C_in, T) with ``weight`` (C_out, C_in/groups, P)."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 2 or weight.ndim != 3:
        raise InvalidArgument("conv1d expects x (C_in, T) and weight (C_out, C_in/groups, P)")
    c_in, t = x.shape
    c_out, cg, kernel = weight.shape
    if dilation < 1 or stride < 1 or groups < 1:
        raise InvalidArgument("stride, dilation and groups must be >= 1")
    if c_in % groups or c_out % groups or cg != c_in // groups:
        raise InvalidArgument(
            f"channel mismatch: input {c_in}, weight {weight.shape}, groups {groups}")
    t_out = conv_output_length(t, kernel, stride, dilation, padding)
    if t_out < 1:
        raise InvalidArgument("input too short for this kernel")

    xp = np.pad(x.values, ((0, 0), (padding, padding))) if padding else x.values
    cols = _gather_taps(xp, kernel, stride, dilation, t_out)
    cols_g = cols.reshape(groups, cg * kernel, t_out)
    w_g = weight.values.reshape(groups, c_out // groups, cg * kernel)
    out = (w_g @ cols_g).reshape(c_out, t_out)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.values[:, None]
        parents.append(bias)

    def fn(g):
        g_g = g.reshape(groups, c_out // groups, t_out)
        gw = (g_g @ np.swapaxes(cols_g, 1, 2)).reshape(weight.shape) if weight.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (np.swapaxes(w_g, 1, 2) @ g_g).reshape(c_in, kernel, t_out)
            gx = _scatter_taps(gcols, xp.shape[1], stride, dilation)
            if padding:
                gx = gx[:, padding:padding + t]
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=1))
        return tuple(grads)

    return _make(out, parents, fn)


def conv_transpose1d(x, weight, bias=None, stride=1):
    """Transposed convolution: ``x`` (C_in, T), ``weight`` (C_in, C_out, P) -> (C_out, (T-1)*stride + P)."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 2 or weight.ndim != 3 or weight.shape[0] != x.shape[0]:
        raise InvalidArgument("conv_transpose1d expects x (C_in, T) and weight (C_in, C_out, P)")
    c_in, t = x.shape
    _, c_out, kernel = weight.shape
    w2 = weight.values.reshape(c_in, c_out * kernel)
    cols = (w2.T @ x.values).reshape(c_out, kernel, t)
    length = (t - 1) * stride + kernel
    out = _scatter_taps(cols, length, stride, 1)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.values[:, None]
        parents.append(bias)

    def fn(g):
        gcols = _gather_taps(g, kernel, stride, 1, t).reshape(c_out * kernel, t)
        gx = w2 @ gcols if x.requires_grad else None
        gw = (x.values @ gcols.T).reshape(weight.shape) if weight.requires_grad else None
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=1))
        return tuple(grads)

    return _make(out, parents, fn)


def global_layer_norm(x, gamma, beta, eps=GLN_EPS):
    """Normalize over all (C, T) entries, then per-channel scale and shift."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim != 2 or gamma.shape != (x.shape[0],) or beta.shape != (x.shape[0],):
        raise InvalidArgument("global_layer_norm expects x (C, T) and per-channel gamma/beta")
    centered = x.values - x.values.mean()
    inv_std = 1.0 / np.sqrt(np.mean(centered * centered) + eps)
    xhat = centered * inv_std
    out = gamma.values[:, None] * xhat + beta.values[:, None]

    def fn(g):
        gxhat = g * gamma.values[:, None]
        gx = inv_std * (gxhat - gxhat.mean() - xhat * np.mean(gxhat * xhat))
        return gx, (g * xhat).sum(axis=1), g.sum(axis=1)

    return _make(out, (x, gamma, beta), fn)
