"""Adam with bias correction over named parameter blocks."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """First/second moment estimates per parameter block and the step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **kwargs: float) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            **kwargs,
        )


def adam_step(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    learning_rate: float,
) -> None:
    """
    One bias-corrected Adam update, applied to ``params`` in place.

    Blocks missing from ``grads`` are left untouched; moments of a block
    are created on its first update.
    """
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for name, grad in grads.items():
        if name not in params:
            continue
        param = params[name]
        m = state.m.setdefault(name, np.zeros_like(param))
        v = state.v.setdefault(name, np.zeros_like(param))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad**2
        m_hat = m / correction1
        v_hat = v / correction2
        param -= learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
