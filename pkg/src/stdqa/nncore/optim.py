"""Nesterov-accelerated adaptive moment estimation (Nadam)."""

from __future__ import annotations

import numpy as np

from .params import Parameter


class NadamState:
    """Per-parameter first/second moments plus the completed-step counter."""

    def __init__(self, params: list[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.value) for p in params}
        self.v = {p.name: np.zeros_like(p.value) for p in params}


def nadam_step(params: list[Parameter], state: NadamState) -> None:
    """Update every parameter in place from its accumulated gradient.

    Uses the Nesterov look-ahead form: the first-moment bias correction is
    taken one step ahead while the raw gradient keeps the current step's
    correction.
    """
    n = state.t + 1
    b1, b2 = state.beta1, state.beta2
    m_corr = 1.0 - b1 ** (n + 1)
    m_corr_now = 1.0 - b1 ** n
    v_corr = 1.0 - b2 ** n
    for p in params:
        g = p.grad
        m = state.m[p.name]
        v = state.v[p.name]
        if m.shape != g.shape:
            raise ValueError(f"moment/gradient shape mismatch for {p.name}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / m_corr
        v_hat = v / v_corr
        p.value -= state.lr * (b1 * m_hat + (1.0 - b1) * g / m_corr_now) / (
            np.sqrt(v_hat) + state.eps
        )
    state.t = n
