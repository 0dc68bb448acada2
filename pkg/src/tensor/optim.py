"""
Adam optimizer over named parameter tensors.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from src.tensor.tensor import Tensor
from src.utils.errors import OptimizerStateError


@dataclass
class AdamState:
    """First and second moment estimates plus the step counter."""

    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor], state: AdamState) -> None:
    """
    Apply one bias-corrected Adam update and clear the gradients.

    Every parameter must carry a gradient; none is updated otherwise.
    A learning rate of 0 leaves the values untouched while the moments
    still advance.

    Raises:
        OptimizerStateError: If a parameter has no gradient or its gradient
            shape does not match
    """
    for name, param in params.items():
        if param.grad is None:
            raise OptimizerStateError(f"parameter '{name}' has no gradient")
        if param.grad.shape != param.shape:
            raise OptimizerStateError(
                f"gradient of '{name}' has shape {param.grad.shape}, expected {param.shape}"
            )

    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t

    for name, param in params.items():
        g = param.grad
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or v is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v

        if state.learning_rate != 0.0:
            m_hat = m / correction1
            v_hat = v / correction2
            param.data -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
        param.grad = None


class Adam:
    """Stateful wrapper binding a parameter set to its AdamState."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 0.0005,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = dict(params)
        self.state = AdamState(learning_rate=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self) -> None:
        adam_step(self.params, self.state)

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()
