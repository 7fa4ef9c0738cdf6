"""Sentence-pair similarity: shared BiLSTM encoding, interactive cross
attention, pooled concatenated representations, cosine score.

Both sentences go through the same embedding and BiLSTM parameters
(siamese), which makes the score symmetric and makes identical inputs score
exactly 1. With ``interactive_attention`` off the model degrades to the
plain-BiLSTM ablation: mean-pooled states and cosine in that 2H space.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .nncore.layers import (
    EmptySequenceError,
    LstmWeights,
    bilstm_backward,
    bilstm_encode,
    embed_backward,
    embed_lookup,
)
from .nncore.loss import bce_grad, bce_loss
from .nncore.optim import NadamState, nadam_step
from .nncore.params import Parameter, uniform_init
from .textcore import PAD_ID, TokenizedSentence, Tokenizer

logger = logging.getLogger(__name__)


class DegenerateInputError(ValueError):
    """A sentence has no usable (unmasked, nonempty) positions."""


@dataclass(frozen=True)
class SimModelConfig:
    vocab_size: int
    embed_dim: int = 64
    hidden_dim: int = 64
    max_len: int = 64
    interactive_attention: bool = True
    pooling: str = "mean"  # "mean" (default, tested) or "max"
    seed: int = 0

    def __post_init__(self):
        if self.vocab_size < 2 or self.embed_dim < 1 or self.hidden_dim < 1 or self.max_len < 1:
            raise ValueError("invalid model dimensions")
        if self.pooling not in ("mean", "max"):
            raise ValueError(f"unknown pooling: {self.pooling!r}")

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "max_len": self.max_len,
            "interactive_attention": self.interactive_attention,
            "pooling": self.pooling,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimModelConfig":
        return cls(**d)


@dataclass
class PairExample:
    q1: TokenizedSentence
    q2: TokenizedSentence
    label: int


@dataclass
class AttentionMatrix:
    """Raw dot-product scores with the normalized row/column weights."""

    scores: np.ndarray  # (la, lb)
    row_weights: np.ndarray  # (la, lb), rows sum to 1 at unmasked rows
    col_weights: np.ndarray  # (la, lb), columns sum to 1 at unmasked cols
    mask_a: np.ndarray
    mask_b: np.ndarray


class SimModel:
    """Embedding table plus one shared forward/backward LSTM pair."""

    def __init__(self, embedding: Parameter, fwd: LstmWeights, bwd: LstmWeights,
                 config: SimModelConfig, tokenizer: Tokenizer | None = None):
        self.embedding = embedding
        self.fwd = fwd
        self.bwd = bwd
        self.config = config
        self.tokenizer = tokenizer

    @classmethod
    def init(cls, config: SimModelConfig, tokenizer: Tokenizer | None = None) -> "SimModel":
        rng = np.random.default_rng(config.seed)
        E = uniform_init(rng, (config.vocab_size, config.embed_dim))
        E[PAD_ID] = 0.0
        embedding = Parameter("sim.embedding", E)
        fwd = LstmWeights.init("sim.fwd", config.embed_dim, config.hidden_dim, rng)
        bwd = LstmWeights.init("sim.bwd", config.embed_dim, config.hidden_dim, rng)
        return cls(embedding, fwd, bwd, config, tokenizer)

    def parameters(self) -> list[Parameter]:
        return [self.embedding] + self.fwd.parameters() + self.bwd.parameters()

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


def _masked_softmax_rows(e: np.ndarray, mask_b: np.ndarray) -> np.ndarray:
    """Row-wise softmax over unmasked columns, max-subtracted for stability."""
    scores = np.where(mask_b[None, :], e, -np.inf)
    m = scores.max(axis=1, keepdims=True)
    w = np.exp(scores - m)
    w[:, ~mask_b] = 0.0
    return w / w.sum(axis=1, keepdims=True)


def cross_attention(A: np.ndarray, B: np.ndarray,
                    mask_a: np.ndarray | None = None,
                    mask_b: np.ndarray | None = None):
    """Attend each sentence over the other via dot-product scores.

    Returns (A_tilde, B_tilde, AttentionMatrix): A_tilde[i] is the softmax
    over row i of the scores applied to B's rows, B_tilde[j] likewise over
    column j applied to A's rows. Masked positions get weight zero; rows at
    masked query positions are zeroed.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    la, lb = A.shape[0], B.shape[0]
    mask_a = np.ones(la, dtype=bool) if mask_a is None else np.asarray(mask_a, dtype=bool)
    mask_b = np.ones(lb, dtype=bool) if mask_b is None else np.asarray(mask_b, dtype=bool)
    if not mask_a.any() or not mask_b.any():
        raise DegenerateInputError("every position of one sentence is masked")
    e = A @ B.T
    row_w = _masked_softmax_rows(e, mask_b)
    col_w = _masked_softmax_rows(e.T, mask_a).T
    row_w[~mask_a, :] = 0.0
    col_w[:, ~mask_b] = 0.0
    A_tilde = row_w @ B
    B_tilde = col_w.T @ A
    return A_tilde, B_tilde, AttentionMatrix(e, row_w, col_w, mask_a, mask_b)


def cross_attention_backward(A, B, attn: AttentionMatrix, dA_tilde, dB_tilde):
    """Gradients of (A_tilde, B_tilde) w.r.t. A and B."""
    row_w, col_w = attn.row_weights, attn.col_weights
    dB = row_w.T @ dA_tilde
    dA = col_w @ dB_tilde
    # softmax jacobian, rows then columns
    g_rows = dA_tilde @ B.T  # (la, lb)
    de = row_w * (g_rows - (row_w * g_rows).sum(axis=1, keepdims=True))
    g_cols = (dB_tilde @ A.T).T  # (la, lb)
    de += col_w * (g_cols - (col_w * g_cols).sum(axis=0, keepdims=True))
    dA += de @ B
    dB += de.T @ A
    return dA, dB


def _pool(rows: np.ndarray, mask: np.ndarray, pooling: str):
    """Masked column-wise reduction; returns (vector, cache-for-backward)."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise DegenerateInputError("no unmasked rows to pool")
    sub = rows[idx]
    if pooling == "mean":
        return sub.mean(axis=0), ("mean", idx)
    arg = sub.argmax(axis=0)
    return sub[arg, np.arange(rows.shape[1])], ("max", idx[arg])


def _pool_backward(dv: np.ndarray, cache, out: np.ndarray) -> None:
    kind, idx = cache
    if kind == "mean":
        out[idx] += dv / idx.size
    else:
        out[idx, np.arange(out.shape[1])] += dv


def sentence_repr(states: np.ndarray, attended: np.ndarray,
                  mask: np.ndarray | None = None, pooling: str = "mean") -> np.ndarray:
    """Pool the encoded and the attended rows and concatenate (length 4H)."""
    states = np.asarray(states, dtype=np.float64)
    attended = np.asarray(attended, dtype=np.float64)
    if states.shape[0] != attended.shape[0]:
        raise ValueError("states and attended must share the time dimension")
    mask = np.ones(states.shape[0], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    v_states, _ = _pool(states, mask, pooling)
    v_att, _ = _pool(attended, mask, pooling)
    return np.concatenate([v_states, v_att])


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Plain cosine in [-1, 1]; raises on zero norm."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroDivisionError("zero-norm representation")
    return float(u @ v) / (nu * nv)


@dataclass
class SimilarityResult:
    score: float
    cosine: float | None
    zero_norm: bool = False


class _PairCache:
    __slots__ = (
        "ids_a", "ids_b", "Xa", "Xb", "ca", "cb", "Sa", "Sb",
        "attn", "At", "Bt", "pool_caches", "va", "vb", "na", "nb",
        "d", "score", "zero_norm",
    )


def _content_ids(sentence: TokenizedSentence, max_len: int) -> list[int]:
    ids = list(sentence.ids[:max_len])
    return [i for i in ids if i != PAD_ID]


def _forward_pair(model: SimModel, qa: TokenizedSentence, qb: TokenizedSentence) -> _PairCache:
    cfg = model.config
    cache = _PairCache()
    cache.ids_a = _content_ids(qa, cfg.max_len)
    cache.ids_b = _content_ids(qb, cfg.max_len)
    if not cache.ids_a or not cache.ids_b:
        raise DegenerateInputError("empty sentence after encoding")
    E = model.embedding.value
    cache.Xa = embed_lookup(cache.ids_a, E)
    cache.Xb = embed_lookup(cache.ids_b, E)
    cache.Sa, cache.ca = bilstm_encode(cache.Xa, len(cache.ids_a), model.fwd, model.bwd, return_cache=True)
    cache.Sb, cache.cb = bilstm_encode(cache.Xb, len(cache.ids_b), model.fwd, model.bwd, return_cache=True)
    pool = cfg.pooling
    full_a = np.ones(len(cache.ids_a), dtype=bool)
    full_b = np.ones(len(cache.ids_b), dtype=bool)
    if cfg.interactive_attention:
        cache.At, cache.Bt, cache.attn = cross_attention(cache.Sa, cache.Sb)
        va_s, pc_as = _pool(cache.Sa, full_a, pool)
        va_t, pc_at = _pool(cache.At, full_a, pool)
        vb_s, pc_bs = _pool(cache.Sb, full_b, pool)
        vb_t, pc_bt = _pool(cache.Bt, full_b, pool)
        cache.va = np.concatenate([va_s, va_t])
        cache.vb = np.concatenate([vb_s, vb_t])
        cache.pool_caches = (pc_as, pc_at, pc_bs, pc_bt)
    else:
        cache.attn = cache.At = cache.Bt = None
        va_s, pc_as = _pool(cache.Sa, full_a, pool)
        vb_s, pc_bs = _pool(cache.Sb, full_b, pool)
        cache.va = va_s
        cache.vb = vb_s
        cache.pool_caches = (pc_as, None, pc_bs, None)
    cache.na = float(np.linalg.norm(cache.va))
    cache.nb = float(np.linalg.norm(cache.vb))
    if cache.na == 0.0 or cache.nb == 0.0:
        cache.zero_norm = True
        cache.d = None
        cache.score = 0.5
    else:
        cache.zero_norm = False
        cache.d = float(cache.va @ cache.vb) / (cache.na * cache.nb)
        cache.score = (1.0 + cache.d) / 2.0
    return cache


def _backward_pair(model: SimModel, cache: _PairCache, dscore: float) -> None:
    """Accumulate parameter gradients of dscore * d(score)/d(theta)."""
    if cache.zero_norm:
        return
    dd = dscore * 0.5
    va, vb, na, nb, d = cache.va, cache.vb, cache.na, cache.nb, cache.d
    dva = dd * (vb / (na * nb) - d * va / (na * na))
    dvb = dd * (va / (na * nb) - d * vb / (nb * nb))
    H2 = cache.Sa.shape[1]
    dSa = np.zeros_like(cache.Sa)
    dSb = np.zeros_like(cache.Sb)
    pc_as, pc_at, pc_bs, pc_bt = cache.pool_caches
    if model.config.interactive_attention:
        dAt = np.zeros_like(cache.At)
        dBt = np.zeros_like(cache.Bt)
        _pool_backward(dva[:H2], pc_as, dSa)
        _pool_backward(dva[H2:], pc_at, dAt)
        _pool_backward(dvb[:H2], pc_bs, dSb)
        _pool_backward(dvb[H2:], pc_bt, dBt)
        dSa_att, dSb_att = cross_attention_backward(cache.Sa, cache.Sb, cache.attn, dAt, dBt)
        dSa += dSa_att
        dSb += dSb_att
    else:
        _pool_backward(dva, pc_as, dSa)
        _pool_backward(dvb, pc_bs, dSb)
    dXa = bilstm_backward(cache.ca, dSa)
    dXb = bilstm_backward(cache.cb, dSb)
    embed_backward(cache.ids_a, dXa, model.embedding.grad)
    embed_backward(cache.ids_b, dXb, model.embedding.grad)


def similarity_detail(qa: TokenizedSentence, qb: TokenizedSentence, model: SimModel) -> SimilarityResult:
    cache = _forward_pair(model, qa, qb)
    if cache.zero_norm:
        logger.warning("zero-norm sentence representation; reporting score 0.5")
        return SimilarityResult(score=0.5, cosine=None, zero_norm=True)
    reported = min(1.0, max(0.0, cache.score))
    return SimilarityResult(score=reported, cosine=cache.d, zero_norm=False)


def similarity(qa: TokenizedSentence, qb: TokenizedSentence, model: SimModel) -> float:
    """Similarity score in [0, 1]: (1 + cosine) / 2 over the pair pipeline."""
    return similarity_detail(qa, qb, model).score


def pair_loss(model: SimModel, example: PairExample, accumulate_grads: bool = True) -> tuple[float, float]:
    """BCE of the pair's score against its label; returns (loss, score).

    With ``accumulate_grads`` the full analytic gradient is added to every
    parameter's ``grad`` buffer.
    """
    cache = _forward_pair(model, example.q1, example.q2)
    loss = bce_loss(cache.score, example.label)
    if accumulate_grads and not cache.zero_norm:
        _backward_pair(model, cache, bce_grad(cache.score, example.label))
    return loss, cache.score


def train_sim(dataset: list[PairExample], config: SimModelConfig, epochs: int,
              batch_size: int = 32, lr: float = 1e-3,
              tokenizer: Tokenizer | None = None) -> tuple[SimModel, list[dict]]:
    """Train with Nadam on BCE; deterministic under ``config.seed``.

    The dataset is split 9:1 into train/validation up front. History holds
    one entry per epoch with train/validation loss and accuracy (validation
    fields are None when the split leaves no validation examples).
    """
    if not dataset:
        raise ValueError("dataset is empty")
    labels = {ex.label for ex in dataset}
    if not labels <= {0, 1}:
        raise ValueError("labels must be 0 or 1")
    if len(labels) == 1:
        logger.warning("training dataset contains a single class (%s)", labels)
    rng = np.random.default_rng(config.seed)
    model = SimModel.init(config, tokenizer)
    state = NadamState(model.parameters(), lr=lr)
    perm = rng.permutation(len(dataset))
    val_n = len(dataset) // 10
    val_set = [dataset[i] for i in perm[:val_n]]
    train_set = [dataset[i] for i in perm[val_n:]]
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_set))
        total_loss = 0.0
        correct = 0
        for lo in range(0, len(order), batch_size):
            batch = [train_set[i] for i in order[lo : lo + batch_size]]
            model.zero_grad()
            for ex in batch:
                loss, score = pair_loss(model, ex)
                total_loss += loss
                correct += int((score >= 0.5) == bool(ex.label))
            for p in model.parameters():
                p.grad /= len(batch)
            nadam_step(model.parameters(), state)
        entry = {
            "epoch": epoch,
            "train_loss": total_loss / len(train_set),
            "train_accuracy": correct / len(train_set),
        }
        if val_set:
            v_loss = 0.0
            v_correct = 0
            for ex in val_set:
                loss, score = pair_loss(model, ex, accumulate_grads=False)
                v_loss += loss
                v_correct += int((score >= 0.5) == bool(ex.label))
            entry["val_loss"] = v_loss / len(val_set)
            entry["val_accuracy"] = v_correct / len(val_set)
        else:
            entry["val_loss"] = None
            entry["val_accuracy"] = None
        history.append(entry)
    return model, history


def eval_accuracy(model: SimModel, pairs: list[PairExample], threshold: float = 0.5) -> float:
    """Fraction of pairs whose thresholded score matches the label."""
    if not pairs:
        raise ValueError("no pairs to evaluate")
    correct = 0
    for ex in pairs:
        score = similarity(ex.q1, ex.q2, model)
        correct += int((score >= threshold) == bool(ex.label))
    return correct / len(pairs)


def load_pair_file(path, tokenizer: Tokenizer) -> list[PairExample]:
    """JSON Lines of {"q1": str, "q2": str, "label": 0|1}."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            pairs.append(PairExample(tokenizer(obj["q1"]), tokenizer(obj["q2"]), int(obj["label"])))
    return pairs


def save_sim_checkpoint(path, model: SimModel) -> None:
    from .nncore.checkpoint import save_checkpoint

    config = {"kind": "sim", "model": model.config.to_dict()}
    if model.tokenizer is not None:
        config["tokenizer"] = model.tokenizer.to_dict()
    save_checkpoint(path, config, [(p.name, p.value) for p in model.parameters()])


def load_sim_checkpoint(path) -> SimModel:
    from .nncore.checkpoint import load_checkpoint
    from .nncore.layers import LstmWeights

    config, tensors = load_checkpoint(path)
    if config.get("kind") != "sim":
        raise ValueError("not a similarity-model checkpoint")
    model_cfg = SimModelConfig.from_dict(config["model"])
    tokenizer = Tokenizer.from_dict(config["tokenizer"]) if "tokenizer" in config else None
    params = {name: Parameter(name, value) for name, value in tensors.items()}
    model = SimModel(
        params["sim.embedding"],
        LstmWeights(params["sim.fwd.wx"], params["sim.fwd.wh"], params["sim.fwd.b"]),
        LstmWeights(params["sim.bwd.wx"], params["sim.bwd.wh"], params["sim.bwd.b"]),
        model_cfg,
        tokenizer,
    )
    return model
