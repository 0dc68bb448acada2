"""
Minimal numpy autodiff: tensors, operations, Adam and checkpoints.
"""

from .checkpoint import FORMAT_VERSION, MAGIC, load_checkpoint, save_checkpoint
from .optim import Adam, AdamState, adam_step
from .tensor import (
    Tensor,
    abs_,
    add,
    as_tensor,
    backward,
    concat,
    embedding,
    linear,
    matmul,
    mean,
    mul,
    no_grad,
    neg,
    relu,
    reshape,
    softmax_rows,
    square,
    sub,
    sum_,
    topological_order,
    transpose_last,
)

__all__ = [
    "Tensor",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "no_grad",
    "neg",
    "square",
    "abs_",
    "relu",
    "sum_",
    "mean",
    "reshape",
    "transpose_last",
    "concat",
    "matmul",
    "linear",
    "softmax_rows",
    "embedding",
    "topological_order",
    "backward",
    "Adam",
    "AdamState",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
    "MAGIC",
    "FORMAT_VERSION",
]
