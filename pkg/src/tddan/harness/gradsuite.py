"""Finite-difference gradient suite run by ``tddan grad-check``.

Every op is checked on fixed random inputs through a random projection
``sum(op(x) * R)`` so that no gradient coordinate is trivially zero.  The
end-to-end checks perturb randomly chosen parameter coordinates of tiny models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from .. import scene as sc
from ..autodiff import Tensor, finite_diff_check
from ..nets import ModelConfig, TcnConfig, build_model
from ..nets.config import Framing

OP_TOLERANCE = 1e-5
END_TO_END_TOLERANCE = 1e-4


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self):
        return self.error <= self.tolerance


def _projected(fn, out_shape, seed):
    rng = np.random.default_rng(seed)
    r = Tensor(rng.uniform(0.5, 1.5, out_shape) * rng.choice([-1.0, 1.0], out_shape))
    return lambda x: ad.sum_(ad.mul(fn(x), r))


def op_cases(seed=0):
    """``(name, x0, fn)`` triples covering every differentiable op."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((3, 4))
    pos = rng.uniform(0.5, 2.0, (3, 4))
    w = rng.standard_normal((4, 5))
    kinked = ad.nudge_from_kinks(a)
    x47 = rng.standard_normal((4, 7))
    wc = rng.standard_normal((6, 2, 3))
    x35 = rng.standard_normal((3, 5))
    wt = rng.standard_normal((3, 2, 4))
    gamma, beta = rng.standard_normal(3), rng.standard_normal(3)
    T = Tensor
    return [
        ("add", a, lambda x: ad.add(x, T(b))),
        ("sub", a, lambda x: ad.sub(T(b), x)),
        ("mul", a, lambda x: ad.mul(x, T(b))),
        ("div", pos, lambda x: ad.div(T(a), x)),
        ("neg", a, ad.neg),
        ("square", a, ad.square),
        ("sqrt", pos, ad.sqrt),
        ("exp", a, ad.exp),
        ("log", pos, ad.log),
        ("log10", pos, ad.log10),
        ("abs", kinked, ad.abs_),
        ("relu", kinked, ad.relu),
        ("sigmoid", a, ad.sigmoid),
        ("prelu", kinked, lambda x: ad.prelu(x, T(0.25))),
        ("prelu_alpha", np.array([0.3]), lambda p: ad.prelu(T(kinked), p)),
        ("sum", a, lambda x: ad.sum_(x, axis=0)),
        ("mean", a, lambda x: ad.mean(x, axis=1)),
        ("mse", a, lambda x: ad.reshape(ad.mse(x, T(b)), (1,))),
        ("matmul", a, lambda x: ad.matmul(x, T(w))),
        ("einsum", w, lambda x: ad.einsum("ij,jk->ik", T(a), x)),
        ("dense", a, lambda x: ad.dense(x, T(w.T), T(np.ones(5)))),
        ("reshape", a, lambda x: ad.reshape(x, (6, 2))),
        ("transpose", a, ad.transpose),
        ("getitem", a, lambda x: ad.getitem(x, (slice(0, 2), [1, 1, 3]))),
        ("concat", a, lambda x: ad.concat([x, ad.exp(x)], axis=0)),
        ("stack", a, lambda x: ad.stack([x, ad.square(x)], axis=2)),
        ("pad_last", a, lambda x: ad.pad_last(x, 1, 3)),
        ("conv1d_input", x47, lambda x: ad.conv1d(x, T(wc), dilation=2, groups=2, padding=1)),
        ("conv1d_weight", wc, lambda k: ad.conv1d(T(x47), k, stride=2, groups=2)),
        ("conv_transpose1d_input", x35, lambda x: ad.conv_transpose1d(x, T(wt), stride=2)),
        ("conv_transpose1d_weight", wt, lambda k: ad.conv_transpose1d(T(x35), k, stride=2)),
        ("global_layer_norm", a, lambda x: ad.global_layer_norm(x, T(gamma), T(beta))),
        ("global_layer_norm_gamma", gamma, lambda g: ad.global_layer_norm(T(a), g, T(beta))),
    ]


def run_op_checks(seed=0, tolerance=OP_TOLERANCE):
    results = []
    for i, (name, x0, fn) in enumerate(op_cases(seed)):
        x = Tensor(np.array(x0, dtype=np.float64), requires_grad=True)
        out_shape = fn(Tensor(x.values)).shape
        err = finite_diff_check(_projected(fn, out_shape, 1000 + i), x)
        results.append(CheckResult(name, float(err), tolerance))
    return results


def tiny_model_config(kind="tddan", encoder="stft"):
    return ModelConfig(kind=kind, encoder=encoder, tcn=TcnConfig(4, 6, 3, 2, 2), D=3, E=3,
                       framing=Framing(ses_hop=4, ses_free_channels=6, sds_kernel=8, sds_hop=4,
                                       sds_channels=6))


def end_to_end_check(model, mixture, early, n_coords=20, seed=0, weights=None):
    """Largest relative error over ``n_coords`` random parameter coordinates of the model loss."""
    named = list(model.named_parameters())
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_coords):
        _, p = named[rng.integers(len(named))]
        coord = int(rng.integers(p.size))
        err = finite_diff_check(lambda _: model.loss(mixture, early, weights)[0], p, coords=[coord])
        worst = max(worst, float(err))
    return worst


def run_end_to_end_checks(seed=0, n_coords=20, tolerance=END_TO_END_TOLERANCE):
    scene = sc.build_scene(sc.sample_scene_params(seed, 0), 2, 0.05, 8000)
    results = []
    for encoder in ("stft", "free"):
        model = build_model(tiny_model_config("tddan", encoder))
        err = end_to_end_check(model, scene.mixture, scene.early, n_coords, seed)
        results.append(CheckResult(f"tddan-{encoder} loss", err, tolerance))
    return results


def run_suite(seed=0):
    return run_op_checks(seed) + run_end_to_end_checks(seed)
