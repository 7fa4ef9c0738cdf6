"""Hot numeric kernels: LSTM scans, CRF recursions, Viterbi.

Everything here takes plain float64 arrays and is vectorized per timestep,
so the same source compiles under numba's nopython mode and also runs at a
usable speed as pure numpy when ``STDQA_NO_NUMBA=1``. Gate order in stacked
LSTM weights is input, forget, output, candidate (i, f, o, g).
"""

import numpy as np

from ..accel import NUMBA_ENABLED, njit

NEG_INF = -np.inf


@njit(cache=True)
def lstm_forward(X, wx, wh, b):
    """Scan an LSTM over X (L, D) starting from zero state.

    wx: (4H, D) input weights, wh: (4H, H) recurrent weights, b: (4H,).
    Returns (H_seq, C_seq, G) where G holds the post-activation gates
    (L, 4H) needed by the backward pass.
    """
    L = X.shape[0]
    H = wh.shape[1]
    H_seq = np.zeros((L, H))
    C_seq = np.zeros((L, H))
    G = np.zeros((L, 4 * H))
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(L):
        a = wx @ X[t] + wh @ h + b
        i = 1.0 / (1.0 + np.exp(-a[:H]))
        f = 1.0 / (1.0 + np.exp(-a[H : 2 * H]))
        o = 1.0 / (1.0 + np.exp(-a[2 * H : 3 * H]))
        g = np.tanh(a[3 * H :])
        c = f * c + i * g
        h = o * np.tanh(c)
        G[t, :H] = i
        G[t, H : 2 * H] = f
        G[t, 2 * H : 3 * H] = o
        G[t, 3 * H :] = g
        H_seq[t] = h
        C_seq[t] = c
    return H_seq, C_seq, G


@njit(cache=True)
def lstm_backward(X, wx, wh, G, C_seq, H_seq, dH):
    """Backprop through time for `lstm_forward`.

    dH (L, H) is the loss gradient w.r.t. every hidden output. Returns
    (dX, dwx, dwh, db).
    """
    L = X.shape[0]
    D = X.shape[1]
    H = wh.shape[1]
    dX = np.zeros((L, D))
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * H)
    dh_carry = np.zeros(H)
    dc_carry = np.zeros(H)
    da = np.zeros(4 * H)
    for t in range(L - 1, -1, -1):
        i = G[t, :H]
        f = G[t, H : 2 * H]
        o = G[t, 2 * H : 3 * H]
        g = G[t, 3 * H :]
        c_prev = C_seq[t - 1] if t > 0 else np.zeros(H)
        tc = np.tanh(C_seq[t])
        dh = dH[t] + dh_carry
        do = dh * tc
        dc = dc_carry + dh * o * (1.0 - tc * tc)
        da[:H] = (dc * g) * i * (1.0 - i)
        da[H : 2 * H] = (dc * c_prev) * f * (1.0 - f)
        da[2 * H : 3 * H] = do * o * (1.0 - o)
        da[3 * H :] = (dc * i) * (1.0 - g * g)
        dc_carry = dc * f
        db += da
        dwx += np.outer(da, X[t])
        if t > 0:
            dwh += np.outer(da, H_seq[t - 1])
        dX[t] = da @ wx
        dh_carry = da @ wh
    return dX, dwx, dwh, db


@njit(cache=True)
def _logsumexp(v):
    m = v.max()
    if m == NEG_INF:
        return NEG_INF
    return m + np.log(np.sum(np.exp(v - m)))


@njit(cache=True)
def crf_alpha(emissions, trans, start):
    """Forward log-space recursion; alpha[t, j] scores prefixes ending in j."""
    L, T = emissions.shape
    alpha = np.zeros((L, T))
    alpha[0] = start + emissions[0]
    for t in range(1, L):
        for j in range(T):
            alpha[t, j] = _logsumexp(alpha[t - 1] + trans[:, j]) + emissions[t, j]
    return alpha


@njit(cache=True)
def crf_beta(emissions, trans, end):
    """Backward log-space recursion; beta[t, i] scores suffixes from tag i."""
    L, T = emissions.shape
    beta = np.zeros((L, T))
    beta[L - 1] = end
    for t in range(L - 2, -1, -1):
        rest = emissions[t + 1] + beta[t + 1]
        for i in range(T):
            beta[t, i] = _logsumexp(trans[i] + rest)
    return beta


@njit(cache=True)
def crf_log_partition_kernel(emissions, trans, start, end):
    L = emissions.shape[0]
    alpha = crf_alpha(emissions, trans, start)
    return _logsumexp(alpha[L - 1] + end)


@njit(cache=True)
def crf_marginals(emissions, trans, start, end):
    """Posterior tag and transition marginals via forward-backward.

    Returns (log_partition, unary (L, T), pairwise (L-1, T, T)).
    """
    L, T = emissions.shape
    alpha = crf_alpha(emissions, trans, start)
    beta = crf_beta(emissions, trans, end)
    log_z = _logsumexp(alpha[L - 1] + end)
    unary = np.exp(alpha + beta - log_z)
    pairwise = np.zeros((L - 1, T, T))
    for t in range(1, L):
        outgoing = alpha[t - 1].copy().reshape(T, 1)
        incoming = (emissions[t] + beta[t] - log_z).reshape(1, T)
        pairwise[t - 1] = np.exp(outgoing + trans + incoming)
    return log_z, unary, pairwise


@njit(cache=True)
def viterbi_kernel(emissions, trans, start, end, allowed_start, allowed_trans):
    """Max-product decoding; ties resolve to the lowest tag index.

    allowed_start (T,) and allowed_trans (T, T) are uint8 masks; forbidden
    entries score -inf. Returns (path, score); score is -inf when every
    path is forbidden.
    """
    L, T = emissions.shape
    delta = np.where(allowed_start == 1, start + emissions[0], NEG_INF)
    back = np.zeros((L, T), dtype=np.int64)
    for t in range(1, L):
        new_delta = np.full(T, NEG_INF)
        for j in range(T):
            cand = np.where(allowed_trans[:, j] == 1, delta + trans[:, j], NEG_INF)
            best = cand.max()
            if best > NEG_INF:
                new_delta[j] = best + emissions[t, j]
                back[t, j] = np.argmax(cand)
        delta = new_delta
    final = delta + end
    best = final.max()
    arg = int(np.argmax(final))
    path = np.zeros(L, dtype=np.int64)
    path[L - 1] = arg
    for t in range(L - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best


def warmup():
    """Trigger compilation of every kernel on tiny inputs."""
    X = np.zeros((2, 3))
    wx = np.zeros((8, 3))
    wh = np.zeros((8, 2))
    b = np.zeros(8)
    H_seq, C_seq, G = lstm_forward(X, wx, wh, b)
    lstm_backward(X, wx, wh, G, C_seq, H_seq, np.zeros((2, 2)))
    em = np.zeros((2, 3))
    tr = np.zeros((3, 3))
    sv = np.zeros(3)
    crf_log_partition_kernel(em, tr, sv, sv)
    crf_marginals(em, tr, sv, sv)
    ones = np.ones(3, dtype=np.uint8)
    viterbi_kernel(em, tr, sv, sv, ones, np.ones((3, 3), dtype=np.uint8))


__all__ = [
    "NUMBA_ENABLED",
    "lstm_forward",
    "lstm_backward",
    "crf_alpha",
    "crf_beta",
    "crf_log_partition_kernel",
    "crf_marginals",
    "viterbi_kernel",
    "warmup",
]
