"""Trainable parameters: float64 value plus same-shaped gradient buffer."""

from __future__ import annotations

import numpy as np


class Parameter:
    """A named trainable tensor with an accumulated gradient.

    Values are always float64 and C-contiguous; the gradient buffer has the
    same shape and is zeroed at the start of each training step.
    """

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def uniform_init(rng: np.random.Generator, shape, scale: float = 0.08) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)
