"""
Adam with bias correction over a dict of named float64 parameter arrays
"""
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    t: int = 0


def adam_step(params: Params, grads: Params, state: AdamState, config) -> Params:
    """
    One Adam update. `config` supplies lr, beta1, beta2 and eps.

    Returns the updated parameters as new arrays; `state` is advanced in place.
    """
    state.t += 1
    bc1 = 1.0 - config.beta1 ** state.t
    bc2 = 1.0 - config.beta2 ** state.t

    updated = {}
    for name, value in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        state.m[name] = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        state.v[name] = config.beta2 * state.v[name] + (1.0 - config.beta2) * (g * g)
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        updated[name] = value - config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return updated

