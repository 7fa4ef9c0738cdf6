"""Differentiable layers: embedding lookup, LSTM cell, masked BiLSTM."""

from __future__ import annotations

import numpy as np

from . import kernels
from .params import Parameter, uniform_init
from ..textcore import PAD_ID


class ShapeError(ValueError):
    pass


class EmptySequenceError(ValueError):
    pass


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class LstmWeights:
    """One direction's LSTM parameters, stored stacked in gate order i,f,o,g.

    ``wx`` is (4H, D), ``wh`` is (4H, H), ``b`` is (4H,). The per-gate
    matrices W_i..W_g / U_i..U_g / b_i..b_g are row-block views into them.
    """

    def __init__(self, wx: Parameter, wh: Parameter, b: Parameter):
        if wx.shape[0] != wh.shape[0] or wx.shape[0] != b.shape[0]:
            raise ShapeError("stacked gate dimension mismatch")
        if wx.shape[0] % 4 != 0 or wh.shape[1] * 4 != wh.shape[0]:
            raise ShapeError("stacked weights must hold four H-row gate blocks")
        self.wx = wx
        self.wh = wh
        self.b = b

    @classmethod
    def init(cls, name: str, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "LstmWeights":
        wx = Parameter(f"{name}.wx", uniform_init(rng, (4 * hidden_dim, input_dim)))
        wh = Parameter(f"{name}.wh", uniform_init(rng, (4 * hidden_dim, hidden_dim)))
        bias = np.zeros(4 * hidden_dim)
        bias[hidden_dim : 2 * hidden_dim] = 1.0  # forget-gate bias, stabilizes early training
        b = Parameter(f"{name}.b", bias)
        return cls(wx, wh, b)

    @property
    def hidden_dim(self) -> int:
        return self.wh.shape[1]

    @property
    def input_dim(self) -> int:
        return self.wx.shape[1]

    def _block(self, arr, gate: int):
        H = self.hidden_dim
        return arr[gate * H : (gate + 1) * H]

    # Per-gate views; mutating them mutates the stacked parameter.
    @property
    def W_i(self):
        return self._block(self.wx.value, 0)

    @property
    def W_f(self):
        return self._block(self.wx.value, 1)

    @property
    def W_o(self):
        return self._block(self.wx.value, 2)

    @property
    def W_g(self):
        return self._block(self.wx.value, 3)

    @property
    def U_i(self):
        return self._block(self.wh.value, 0)

    @property
    def U_f(self):
        return self._block(self.wh.value, 1)

    @property
    def U_o(self):
        return self._block(self.wh.value, 2)

    @property
    def U_g(self):
        return self._block(self.wh.value, 3)

    @property
    def b_i(self):
        return self._block(self.b.value, 0)

    @property
    def b_f(self):
        return self._block(self.b.value, 1)

    @property
    def b_o(self):
        return self._block(self.b.value, 2)

    @property
    def b_g(self):
        return self._block(self.b.value, 3)

    def parameters(self) -> list[Parameter]:
        return [self.wx, self.wh, self.b]


def embed_lookup(ids, E: np.ndarray) -> np.ndarray:
    """Rows of E selected by ids; the PAD row is kept at the zero vector."""
    idx = np.asarray(ids, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= E.shape[0]):
        raise IndexError("vocabulary id out of range")
    return E[idx]


def embed_backward(ids, dX: np.ndarray, grad: np.ndarray) -> None:
    """Accumulate row gradients; PAD's row stays zero by construction."""
    for k, idx in enumerate(ids):
        if idx != PAD_ID:
            grad[idx] += dX[k]


def lstm_step(x, h_prev, c_prev, w: LstmWeights):
    """Single LSTM cell update; returns (h, c)."""
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    H = w.hidden_dim
    if x.shape != (w.input_dim,) or h_prev.shape != (H,) or c_prev.shape != (H,):
        raise ShapeError("lstm_step input dimensions inconsistent with weights")
    a = w.wx.value @ x + w.wh.value @ h_prev + w.b.value
    i = _sigmoid(a[:H])
    f = _sigmoid(a[H : 2 * H])
    o = _sigmoid(a[2 * H : 3 * H])
    g = np.tanh(a[3 * H :])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


class BilstmCache:
    """Forward-pass intermediates needed to run the backward scan."""

    __slots__ = ("X", "true_len", "fwd_cache", "bwd_cache", "fwd", "bwd")

    def __init__(self, X, true_len, fwd_cache, bwd_cache, fwd, bwd):
        self.X = X
        self.true_len = true_len
        self.fwd_cache = fwd_cache
        self.bwd_cache = bwd_cache
        self.fwd = fwd
        self.bwd = bwd


def bilstm_encode(X: np.ndarray, true_len: int, fwd: LstmWeights, bwd: LstmWeights,
                  return_cache: bool = False):
    """Concatenate a left-to-right and a right-to-left LSTM pass.

    Row t of the result is [forward h_t, backward h_t]; rows at and beyond
    true_len are zero.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    L = X.shape[0]
    if true_len < 1:
        raise EmptySequenceError("true_len must be >= 1")
    if true_len > L:
        raise ShapeError("true_len exceeds sequence length")
    if X.shape[1] != fwd.input_dim or fwd.hidden_dim != bwd.hidden_dim:
        raise ShapeError("bilstm weight dimensions inconsistent")
    H = fwd.hidden_dim
    Xt = X[:true_len]
    Hf, Cf, Gf = kernels.lstm_forward(Xt, fwd.wx.value, fwd.wh.value, fwd.b.value)
    Xr = np.ascontiguousarray(Xt[::-1])
    Hb, Cb, Gb = kernels.lstm_forward(Xr, bwd.wx.value, bwd.wh.value, bwd.b.value)
    states = np.zeros((L, 2 * H))
    states[:true_len, :H] = Hf
    states[:true_len, H:] = Hb[::-1]
    if not return_cache:
        return states
    cache = BilstmCache(Xt, true_len, (Hf, Cf, Gf), (Xr, Hb, Cb, Gb), fwd, bwd)
    return states, cache


def bilstm_backward(cache: BilstmCache, dStates: np.ndarray) -> np.ndarray:
    """Backprop dStates (L, 2H) through both scans.

    Accumulates weight gradients in place and returns dX for the unpadded
    prefix (true_len, D).
    """
    fwd, bwd = cache.fwd, cache.bwd
    H = fwd.hidden_dim
    n = cache.true_len
    dF = np.ascontiguousarray(dStates[:n, :H])
    dB = np.ascontiguousarray(dStates[:n, H:][::-1])
    Hf, Cf, Gf = cache.fwd_cache
    Xr, Hb, Cb, Gb = cache.bwd_cache
    dXf, dwx_f, dwh_f, db_f = kernels.lstm_backward(
        cache.X, fwd.wx.value, fwd.wh.value, Gf, Cf, Hf, dF
    )
    dXr, dwx_b, dwh_b, db_b = kernels.lstm_backward(
        Xr, bwd.wx.value, bwd.wh.value, Gb, Cb, Hb, dB
    )
    fwd.wx.grad += dwx_f
    fwd.wh.grad += dwh_f
    fwd.b.grad += db_f
    bwd.wx.grad += dwx_b
    bwd.wh.grad += dwh_b
    bwd.b.grad += db_b
    return dXf + dXr[::-1]
