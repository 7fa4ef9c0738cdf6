"""Binary cross entropy on a probability already in [0, 1]."""

import numpy as np

CLAMP_EPS = 1e-7


def _clamp(p: float) -> float:
    return min(max(p, CLAMP_EPS), 1.0 - CLAMP_EPS)


def bce_loss(p: float, y: int) -> float:
    """-(y ln p + (1-y) ln(1-p)) with p clamped to [1e-7, 1 - 1e-7]."""
    pc = _clamp(p)
    return -(y * np.log(pc) + (1 - y) * np.log(1.0 - pc))


def bce_grad(p: float, y: int) -> float:
    """dLoss/dp; zero where the clamp is active (the loss is flat there)."""
    if p < CLAMP_EPS or p > 1.0 - CLAMP_EPS:
        return 0.0
    return -y / p + (1 - y) / (1.0 - p)
