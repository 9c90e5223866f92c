"""Temporal convolutional network: stacked dilated depthwise-separable blocks."""

from __future__ import annotations

import numpy as np

from ..autodiff import Parameter, add, conv1d, global_layer_norm, prelu, uniform_init
from .module import Module

PRELU_INIT = 0.25


class GlobalLayerNorm(Module):
    def __init__(self, channels):
        self.gamma = Parameter(np.ones(channels))
        self.beta = Parameter(np.zeros(channels))

    def __call__(self, x):
        return global_layer_norm(x, self.gamma, self.beta)


class PointwiseConv(Module):
    def __init__(self, rng, c_in, c_out):
        self.weight = uniform_init(rng, (c_out, c_in, 1), c_in)
        self.bias = uniform_init(rng, (c_out,), c_in)

    def __call__(self, x):
        return conv1d(x, self.weight, self.bias)


class TcnBlock(Module):
    """1x1 conv B->H, PReLU, norm, depthwise dilated conv, PReLU, norm, 1x1 conv H->B, residual."""

    def __init__(self, rng, b, h, p, dilation, norm=True):
        self.dilation = dilation
        self.pad = (p - 1) * dilation // 2
        self.conv_in = PointwiseConv(rng, b, h)
        self.alpha1 = Parameter([PRELU_INIT])
        self.depthwise = uniform_init(rng, (h, 1, p), p)
        self.depthwise_bias = uniform_init(rng, (h,), p)
        self.alpha2 = Parameter([PRELU_INIT])
        self.conv_out = PointwiseConv(rng, h, b)
        self.norm1 = GlobalLayerNorm(h) if norm else None
        self.norm2 = GlobalLayerNorm(h) if norm else None

    def __call__(self, x):
        y = prelu(self.conv_in(x), self.alpha1)
        if self.norm1 is not None:
            y = self.norm1(y)
        y = conv1d(y, self.depthwise, self.depthwise_bias, dilation=self.dilation,
                   groups=y.shape[0], padding=self.pad)
        y = prelu(y, self.alpha2)
        if self.norm2 is not None:
            y = self.norm2(y)
        return add(x, self.conv_out(y))


class TCN(Module):
    """Maps (C_in, T) features to (out_channels, T).

    ``norm=False`` drops every global normalization, which keeps the network
    local in time (used to probe the receptive field).
    """

    def __init__(self, in_channels, cfg, out_channels, rng, norm=True, input_norm=True):
        self.cfg = cfg
        self.input_norm = GlobalLayerNorm(in_channels) if (norm and input_norm) else None
        self.bottleneck = PointwiseConv(rng, in_channels, cfg.B)
        self.blocks = [
            TcnBlock(rng, cfg.B, cfg.H, cfg.P, 2 ** i, norm)
            for _ in range(cfg.R)
            for i in range(cfg.X)
        ]
        self.out_alpha = Parameter([PRELU_INIT])
        self.head = PointwiseConv(rng, cfg.B, out_channels)

    @property
    def receptive_field(self):
        return 1 + self.cfg.R * sum((self.cfg.P - 1) * 2 ** i for i in range(self.cfg.X))

    def __call__(self, x):
        if self.input_norm is not None:
            x = self.input_norm(x)
        x = self.bottleneck(x)
        for block in self.blocks:
            x = block(x)
        return self.head(prelu(x, self.out_alpha))


def tcn_forward(features, cfg, out_channels, rng=None, tcn=None):
    """Functional entry point; builds a fresh seeded TCN unless one is given."""
    if tcn is None:
        tcn = TCN(features.shape[0], cfg, out_channels, rng or np.random.default_rng(0))
    return tcn(features)
