from .tensor import Tensor, Tape, backward, from_op, grad_enabled, no_grad
from .ops import (
    add,
    concat_channels,
    conv2d,
    dense,
    hadamard,
    l1_loss,
    relu,
    scale,
    sin,
    slice_channels,
)
from .adam import AdamState, adam_step
from .gradcheck import grad_check
from .rng import named_stream

__all__ = [
    "Tensor", "Tape", "backward", "from_op", "grad_enabled", "no_grad",
    "add", "concat_channels", "conv2d", "dense", "hadamard", "l1_loss",
    "relu", "scale", "sin", "slice_channels",
    "AdamState", "adam_step", "grad_check", "named_stream",
]
