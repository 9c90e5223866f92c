"""Tiny parameter container in the spirit of ``torch.nn.Module``."""

from __future__ import annotations

import numpy as np

from ..autodiff import Parameter


class Module:
    def named_parameters(self, prefix=""):
        for key, val in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(val, Parameter):
                yield name, val
            elif isinstance(val, Module):
                yield from val.named_parameters(name + ".")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")
                    elif isinstance(item, Parameter):
                        yield f"{name}.{i}", item

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def state_dict(self):
        return [(n, p.values.copy()) for n, p in self.named_parameters()]

    def load_state_dict(self, arrays):
        arrays = dict(arrays)
        for name, p in self.named_parameters():
            if name not in arrays:
                raise KeyError(f"missing parameter {name!r}")
            a = np.asarray(arrays[name], dtype=np.float64)
            if a.shape != p.shape:
                raise ValueError(f"shape mismatch for {name}: {a.shape} vs {p.shape}")
            p.values = a.copy()
            p.m = np.zeros_like(a)
            p.v = np.zeros_like(a)
            p.step = 0

    def num_parameters(self):
        return sum(p.size for p in self.parameters())
