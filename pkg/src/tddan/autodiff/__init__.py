from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import finite_diff_check, nudge_from_kinks
from .nn import conv1d, conv_transpose1d, global_layer_norm
from .optim import Adam, Parameter, adam_step, uniform_init, zero_grad
from .tensor import (
    Tensor, abs_, add, as_tensor, backward, concat, dense, div, einsum, exp, getitem, log,
    log10, matmul, mean, mse, mul, neg, pad_last, prelu, relu, reshape, sigmoid, sqrt,
    square, stack, sub, sum_, transpose,
)

__all__ = [
    "Adam", "Parameter", "Tensor", "abs_", "adam_step", "add", "as_tensor", "backward",
    "concat", "conv1d", "conv_transpose1d", "dense", "div", "einsum", "exp",
    "finite_diff_check", "getitem", "global_layer_norm", "load_checkpoint", "log", "log10",
    "matmul", "mean", "mse", "mul", "neg", "nudge_from_kinks", "pad_last", "prelu", "relu",
    "reshape", "save_checkpoint", "sigmoid", "sqrt", "square", "stack", "sub", "sum_",
    "transpose", "uniform_init", "zero_grad",
]
