"""BiLSTM-CRF sequence tagging over BIO labels, plus entity-span extraction.

Emissions come from a linear projection of BiLSTM states; the linear-chain
CRF contributes transition, start and end scores. Training maximizes the
gold-path likelihood (gold score minus log partition); decoding is Viterbi,
optionally constrained so I-X can only follow B-X or I-X of the same type.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .nncore import kernels
from .nncore.layers import LstmWeights, bilstm_backward, bilstm_encode, embed_backward, embed_lookup
from .nncore.optim import NadamState, nadam_step
from .nncore.params import Parameter, uniform_init
from .textcore import PAD_ID, Tokenizer, build_vocab

logger = logging.getLogger(__name__)

ENTITY_TYPES = ("PRO", "CON", "CAT", "MAT", "STA", "PAR")


class InfeasiblePathError(ValueError):
    """Every tag path was masked out."""


@dataclass(frozen=True)
class TagSet:
    """BIO tags with a dense index; "O" plus B-/I- per entity type."""

    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        if self.tags.count("O") != 1:
            raise ValueError("tag set must contain O exactly once")
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("duplicate tags")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tags)})

    @classmethod
    def from_entity_types(cls, types=ENTITY_TYPES) -> "TagSet":
        tags = ["O"]
        for t in types:
            tags.extend((f"B-{t}", f"I-{t}"))
        return cls(tuple(tags))

    @classmethod
    def default(cls) -> "TagSet":
        return cls.from_entity_types()

    @property
    def size(self) -> int:
        return len(self.tags)

    def index(self, tag: str) -> int:
        return self._index[tag]

    def tag_of(self, idx: int) -> str:
        return self.tags[idx]

    def encode(self, tags) -> np.ndarray:
        return np.array([self.index(t) for t in tags], dtype=np.int64)

    def bio_masks(self) -> tuple[np.ndarray, np.ndarray]:
        """(allowed_start, allowed_transition) under the BIO constraint."""
        T = self.size
        allowed_start = np.ones(T, dtype=np.uint8)
        allowed = np.ones((T, T), dtype=np.uint8)
        for j, tag_j in enumerate(self.tags):
            if not tag_j.startswith("I-"):
                continue
            etype = tag_j[2:]
            allowed_start[j] = 0
            for i, tag_i in enumerate(self.tags):
                if tag_i not in (f"B-{etype}", f"I-{etype}"):
                    allowed[i, j] = 0
        return allowed_start, allowed


class CrfParams:
    """Transition (T, T), start (T,) and end (T,) scores."""

    def __init__(self, trans: Parameter, start: Parameter, end: Parameter):
        T = trans.shape[0]
        if trans.shape != (T, T) or start.shape != (T,) or end.shape != (T,):
            raise ValueError("inconsistent CRF parameter shapes")
        self.trans = trans
        self.start = start
        self.end = end

    @classmethod
    def from_arrays(cls, trans, start, end, prefix: str = "crf") -> "CrfParams":
        return cls(
            Parameter(f"{prefix}.trans", np.asarray(trans, dtype=np.float64)),
            Parameter(f"{prefix}.start", np.asarray(start, dtype=np.float64)),
            Parameter(f"{prefix}.end", np.asarray(end, dtype=np.float64)),
        )

    @classmethod
    def init(cls, num_tags: int, rng: np.random.Generator, prefix: str = "crf") -> "CrfParams":
        return cls(
            Parameter(f"{prefix}.trans", uniform_init(rng, (num_tags, num_tags))),
            Parameter(f"{prefix}.start", uniform_init(rng, (num_tags,))),
            Parameter(f"{prefix}.end", uniform_init(rng, (num_tags,))),
        )

    @property
    def num_tags(self) -> int:
        return self.trans.shape[0]

    def parameters(self) -> list[Parameter]:
        return [self.trans, self.start, self.end]


def crf_gold_score(emissions: np.ndarray, tags, crf: CrfParams) -> float:
    """Path score: start + per-step emissions + transitions + end."""
    emissions = np.asarray(emissions, dtype=np.float64)
    tags = np.asarray(tags, dtype=np.int64)
    L, T = emissions.shape
    if tags.min() < 0 or tags.max() >= T:
        raise IndexError("tag index out of range")
    score = crf.start.value[tags[0]] + crf.end.value[tags[-1]]
    score += emissions[np.arange(L), tags].sum()
    score += crf.trans.value[tags[:-1], tags[1:]].sum()
    return float(score)


def crf_log_partition(emissions: np.ndarray, crf: CrfParams) -> float:
    """log sum over all tag paths of exp(path score), via the forward pass."""
    emissions = np.ascontiguousarray(emissions, dtype=np.float64)
    return float(
        kernels.crf_log_partition_kernel(
            emissions, crf.trans.value, crf.start.value, crf.end.value
        )
    )


def viterbi_decode(emissions: np.ndarray, crf: CrfParams, bio_mask: bool = False,
                   tagset: TagSet | None = None) -> tuple[list[int], float]:
    """Highest-scoring tag path; ties resolve to the lowest tag index.

    With ``bio_mask`` set, starts at I-X and transitions into I-X from
    anything but B-X/I-X score -inf (``tagset`` is required to build the
    masks).
    """
    emissions = np.ascontiguousarray(emissions, dtype=np.float64)
    T = emissions.shape[1]
    if bio_mask:
        if tagset is None:
            raise ValueError("bio_mask requires a tagset")
        allowed_start, allowed_trans = tagset.bio_masks()
    else:
        allowed_start = np.ones(T, dtype=np.uint8)
        allowed_trans = np.ones((T, T), dtype=np.uint8)
    path, score = kernels.viterbi_kernel(
        emissions, crf.trans.value, crf.start.value, crf.end.value,
        allowed_start, allowed_trans,
    )
    if score == -np.inf:
        raise InfeasiblePathError("all tag paths are masked")
    return [int(t) for t in path], float(score)


@dataclass(frozen=True)
class TaggedSentence:
    """Tokens (character-level in the stock pipeline) with one BIO tag each."""

    tokens: tuple
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags must have equal length")

    @property
    def text(self) -> str:
        return "".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int  # exclusive
    entity_type: str
    surface: str


def extract_entities(tagged: TaggedSentence) -> list[EntitySpan]:
    """Maximal B-X (I-X)* runs as spans; a dangling I-X opens a span (it is
    repaired to B-X), O closes any open span."""
    spans = []
    open_start = None
    open_type = None

    def close(end):
        nonlocal open_start, open_type
        if open_start is not None:
            spans.append(EntitySpan(
                start=open_start,
                end=end,
                entity_type=open_type,
                surface="".join(tagged.tokens[open_start:end]),
            ))
        open_start = None
        open_type = None

    for i, tag in enumerate(tagged.tags):
        if tag == "O":
            close(i)
        elif tag.startswith("B-"):
            close(i)
            open_start, open_type = i, tag[2:]
        elif tag.startswith("I-"):
            etype = tag[2:]
            if open_type != etype:
                close(i)  # dangling I-X: repaired to B-X
                open_start, open_type = i, etype
        else:
            raise ValueError(f"invalid tag {tag!r}")
    close(len(tagged.tags))
    return spans


def spans_to_tags(spans: list[EntitySpan], length: int) -> list[str]:
    """Render spans back to a BIO sequence (inverse of extraction)."""
    tags = ["O"] * length
    for span in spans:
        if not (0 <= span.start < span.end <= length):
            raise ValueError("span out of bounds")
        tags[span.start] = f"B-{span.entity_type}"
        for i in range(span.start + 1, span.end):
            tags[i] = f"I-{span.entity_type}"
    return tags


@dataclass(frozen=True)
class NerConfig:
    embed_dim: int = 32
    hidden_dim: int = 32
    lr: float = 1e-3
    batch_size: int = 32
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NerConfig":
        return cls(**d)


class NerModel:
    """Embedding, shared-direction BiLSTM, emission projection, CRF scores."""

    def __init__(self, embedding: Parameter, fwd: LstmWeights, bwd: LstmWeights,
                 emit_w: Parameter, emit_b: Parameter, crf: CrfParams,
                 tagset: TagSet, config: NerConfig, tokenizer: Tokenizer | None = None):
        self.embedding = embedding
        self.fwd = fwd
        self.bwd = bwd
        self.emit_w = emit_w
        self.emit_b = emit_b
        self.crf = crf
        self.tagset = tagset
        self.config = config
        self.tokenizer = tokenizer

    @classmethod
    def init(cls, config: NerConfig, vocab_size: int, tagset: TagSet,
             tokenizer: Tokenizer | None = None) -> "NerModel":
        rng = np.random.default_rng(config.seed)
        E = uniform_init(rng, (vocab_size, config.embed_dim))
        E[PAD_ID] = 0.0
        embedding = Parameter("ner.embedding", E)
        fwd = LstmWeights.init("ner.fwd", config.embed_dim, config.hidden_dim, rng)
        bwd = LstmWeights.init("ner.bwd", config.embed_dim, config.hidden_dim, rng)
        emit_w = Parameter("ner.emit_w", uniform_init(rng, (tagset.size, 2 * config.hidden_dim)))
        emit_b = Parameter("ner.emit_b", np.zeros(tagset.size))
        crf = CrfParams.init(tagset.size, rng, prefix="ner.crf")
        return cls(embedding, fwd, bwd, emit_w, emit_b, crf, tagset, config, tokenizer)

    def parameters(self) -> list[Parameter]:
        return (
            [self.embedding]
            + self.fwd.parameters()
            + self.bwd.parameters()
            + [self.emit_w, self.emit_b]
            + self.crf.parameters()
        )

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def emissions(self, ids, return_cache: bool = False):
        X = embed_lookup(ids, self.embedding.value)
        states, cache = bilstm_encode(X, len(ids), self.fwd, self.bwd, return_cache=True)
        em = states @ self.emit_w.value.T + self.emit_b.value
        if return_cache:
            return em, (states, cache)
        return em


def sentence_nll(model: NerModel, ids, tag_indices, accumulate_grads: bool = True) -> float:
    """Negative log-likelihood of the gold path; >= 0 by construction."""
    tag_indices = np.asarray(tag_indices, dtype=np.int64)
    em, (states, bcache) = model.emissions(ids, return_cache=True)
    em = np.ascontiguousarray(em)
    gold = crf_gold_score(em, tag_indices, model.crf)
    if accumulate_grads:
        log_z, unary, pairwise = kernels.crf_marginals(
            em, model.crf.trans.value, model.crf.start.value, model.crf.end.value
        )
        L = em.shape[0]
        dem = unary.copy()
        dem[np.arange(L), tag_indices] -= 1.0
        dtrans = pairwise.sum(axis=0)
        dtrans[tag_indices[:-1], tag_indices[1:]] -= 1.0
        dstart = unary[0].copy()
        dstart[tag_indices[0]] -= 1.0
        dend = unary[-1].copy()
        dend[tag_indices[-1]] -= 1.0
        model.crf.trans.grad += dtrans
        model.crf.start.grad += dstart
        model.crf.end.grad += dend
        model.emit_w.grad += dem.T @ states
        model.emit_b.grad += dem.sum(axis=0)
        dstates = dem @ model.emit_w.value
        dX = bilstm_backward(bcache, dstates)
        embed_backward(ids, dX, model.embedding.grad)
    else:
        log_z = crf_log_partition(em, model.crf)
    return float(log_z - gold)


def train_ner(dataset: list[TaggedSentence], config: NerConfig, epochs: int,
              tokenizer: Tokenizer | None = None,
              tagset: TagSet | None = None) -> tuple[NerModel, list[dict]]:
    """Minimize the summed NLL with Nadam; deterministic under seed.

    When no tokenizer is given a character vocabulary is built from the
    dataset itself.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    tagset = tagset or TagSet.default()
    if tokenizer is None:
        vocab = build_vocab([list(s.tokens) for s in dataset], min_count=1)
        tokenizer = Tokenizer(vocab=vocab)
    model = NerModel.init(config, tokenizer.vocab.size, tagset, tokenizer)
    state = NadamState(model.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)
    encoded = [
        ([tokenizer.vocab.id_of(tok) for tok in s.tokens], tagset.encode(s.tags))
        for s in dataset
    ]
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(encoded))
        total = 0.0
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo : lo + config.batch_size]
            model.zero_grad()
            for i in batch:
                ids, tag_idx = encoded[i]
                total += sentence_nll(model, ids, tag_idx)
            for p in model.parameters():
                p.grad /= len(batch)
            nadam_step(model.parameters(), state)
        history.append({"epoch": epoch, "loss": total / len(encoded)})
    return model, history


def tag_text(model: NerModel, text: str) -> TaggedSentence:
    """Segment, encode and Viterbi-decode one sentence (BIO-constrained)."""
    if model.tokenizer is None:
        raise ValueError("model has no tokenizer attached")
    ts = model.tokenizer(text)
    if len(ts) == 0:
        return TaggedSentence((), ())
    em = model.emissions(list(ts.ids))
    path, _ = viterbi_decode(em, model.crf, bio_mask=True, tagset=model.tagset)
    return TaggedSentence(ts.tokens, tuple(model.tagset.tag_of(i) for i in path))


def tag_accuracy(model: NerModel, dataset: list[TaggedSentence]) -> float:
    """Token-level accuracy of constrained decoding against gold tags."""
    correct = 0
    total = 0
    for sent in dataset:
        predicted = tag_text(model, sent.text)
        for got, want in zip(predicted.tags, sent.tags):
            correct += int(got == want)
            total += 1
    return correct / total if total else 0.0


def load_ner_file(path) -> list[TaggedSentence]:
    """JSON Lines of {"text": [tokens], "tags": [BIO strings]}."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            sentences.append(TaggedSentence(tuple(obj["text"]), tuple(obj["tags"])))
    return sentences


def save_ner_checkpoint(path, model: NerModel) -> None:
    from .nncore.checkpoint import save_checkpoint

    config = {
        "kind": "ner",
        "model": model.config.to_dict(),
        "tags": list(model.tagset.tags),
    }
    if model.tokenizer is not None:
        config["tokenizer"] = model.tokenizer.to_dict()
    save_checkpoint(path, config, [(p.name, p.value) for p in model.parameters()])


def load_ner_checkpoint(path) -> NerModel:
    from .nncore.checkpoint import load_checkpoint

    config, tensors = load_checkpoint(path)
    if config.get("kind") != "ner":
        raise ValueError("not a tagger checkpoint")
    tagset = TagSet(tuple(config["tags"]))
    tokenizer = Tokenizer.from_dict(config["tokenizer"]) if "tokenizer" in config else None
    params = {name: Parameter(name, value) for name, value in tensors.items()}
    return NerModel(
        params["ner.embedding"],
        LstmWeights(params["ner.fwd.wx"], params["ner.fwd.wh"], params["ner.fwd.b"]),
        LstmWeights(params["ner.bwd.wx"], params["ner.bwd.wh"], params["ner.bwd.b"]),
        params["ner.emit_w"],
        params["ner.emit_b"],
        CrfParams(params["ner.crf.trans"], params["ner.crf.start"], params["ner.crf.end"]),
        tagset,
        NerConfig.from_dict(config["model"]),
        tokenizer,
    )
