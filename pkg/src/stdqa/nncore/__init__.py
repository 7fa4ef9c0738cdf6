"""Minimal float64 numeric core: parameters, LSTM layers, loss, optimizer.

Gradients are hand-written per layer and validated against central finite
differences (see ``gradcheck``). Hot loops live in ``kernels`` and run under
numba unless ``STDQA_NO_NUMBA=1``.
"""

from .params import Parameter, uniform_init
from .layers import (
    LstmWeights,
    bilstm_backward,
    bilstm_encode,
    embed_backward,
    embed_lookup,
    lstm_step,
)
from .loss import bce_grad, bce_loss
from .optim import NadamState, nadam_step
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Parameter",
    "uniform_init",
    "LstmWeights",
    "embed_lookup",
    "embed_backward",
    "lstm_step",
    "bilstm_encode",
    "bilstm_backward",
    "bce_loss",
    "bce_grad",
    "NadamState",
    "nadam_step",
    "grad_check",
    "save_checkpoint",
    "load_checkpoint",
]
