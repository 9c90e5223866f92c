"""Central finite-difference gradient checks."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, backward


def numeric_grad(f, x, h=1e-6, coords=None):
    flat = x.values.reshape(-1)
    coords = range(flat.size) if coords is None else coords
    out = {}
    for i in coords:
        orig = flat[i]
        flat[i] = orig + h
        up = float(f(x).values)
        flat[i] = orig - h
        down = float(f(x).values)
        flat[i] = orig
        out[i] = (up - down) / (2.0 * h)
    return out


def analytic_grad(f, x):
    x.grad = None
    loss = f(x)
    backward(loss)
    g = np.zeros_like(x.values) if x.grad is None else x.grad
    return g.reshape(-1).copy()


def finite_diff_check(f, x, h=1e-6, coords=None):
    """Max over coordinates of |analytic - numeric| / (|numeric| + 1e-8).

    ``f`` maps the tensor ``x`` (which must require grad) to a scalar tensor and
    must be pure.  ``coords`` restricts the check to selected flat indices.
    """
    if not isinstance(x, Tensor) or not x.requires_grad:
        raise ValueError("x must be a Tensor with requires_grad=True")
    analytic = analytic_grad(f, x)
    numeric = numeric_grad(f, x, h, coords)
    return max(abs(analytic[i] - n) / (abs(n) + 1e-8) for i, n in numeric.items())


def nudge_from_kinks(values, margin=1e-3):
    """Push entries within ``margin`` of zero out to +-margin (ReLU kink convention)."""
    v = np.array(values, dtype=np.float64)
    close = np.abs(v) < margin
    v[close] = np.where(v[close] >= 0, margin, -margin)
    return v
