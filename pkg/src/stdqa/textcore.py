"""Tokenization, vocabulary construction and integer encoding.

Two segmentation modes are built in: greedy maximum matching against a
user-supplied lexicon, and character-level (every non-whitespace character
becomes a token). Both keep punctuation as single-character tokens.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


@dataclass(frozen=True)
class SegmenterConfig:
    """``mode`` is "char" or "maxmatch"; maxmatch requires a lexicon."""

    mode: str = "char"
    lexicon: frozenset = frozenset()

    def __post_init__(self):
        if self.mode not in ("char", "maxmatch"):
            raise ValueError(f"unknown segmenter mode: {self.mode!r}")
        if self.mode == "maxmatch" and not self.lexicon:
            raise ValueError("maxmatch segmentation requires a lexicon")
        object.__setattr__(self, "lexicon", frozenset(self.lexicon))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "lexicon": sorted(self.lexicon)}

    @classmethod
    def from_dict(cls, d: dict) -> "SegmenterConfig":
        return cls(mode=d["mode"], lexicon=frozenset(d.get("lexicon", ())))


def segment(text: str, config: SegmenterConfig | None = None) -> list[str]:
    """Split ``text`` into tokens; empty text yields an empty list.

    Whitespace never produces tokens. In maxmatch mode the longest lexicon
    word matching at the current position wins, falling back to a
    single-character token.
    """
    if config is None:
        config = SegmenterConfig()
    if config.mode == "char":
        return [ch for ch in text if not ch.isspace()]

    max_word = max((len(w) for w in config.lexicon), default=1)
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        match = text[i]
        for j in range(min(n, i + max_word), i + 1, -1):
            if text[i:j] in config.lexicon:
                match = text[i:j]
                break
        tokens.append(match)
        i += len(match)
    return tokens


class Vocabulary:
    """Token-to-id map with reserved PAD=0 and UNK=1.

    Content ids are dense in [2, size); unknown lookups map to UNK.
    """

    def __init__(self, tokens: list[str], min_count: int = 1):
        self.min_count = min_count
        self._tokens = [PAD_TOKEN, UNK_TOKEN] + list(tokens)
        self._index = {tok: i for i, tok in enumerate(self._tokens)}
        if len(self._index) != len(self._tokens):
            raise ValueError("duplicate token in vocabulary")

    @property
    def size(self) -> int:
        return len(self._tokens)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    @property
    def content_tokens(self) -> list[str]:
        return self._tokens[2:]

    def save(self, path) -> None:
        payload = {"tokens": self.content_tokens, "min_count": self.min_count}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(payload["tokens"], min_count=payload.get("min_count", 1))

    def to_dict(self) -> dict:
        return {"tokens": self.content_tokens, "min_count": self.min_count}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(d["tokens"], min_count=d.get("min_count", 1))


def build_vocab(corpus: list[list[str]], min_count: int = 1) -> Vocabulary:
    """Count tokens over ``corpus`` and keep those seen >= ``min_count`` times.

    Insertion order is descending count, ties broken lexicographically, so
    the id assignment is deterministic across runs.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for tokens in corpus:
        counts.update(tokens)
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    return Vocabulary(kept, min_count=min_count)


def encode(tokens: list[str], vocab: Vocabulary, max_len: int) -> tuple[list[int], int]:
    """Map tokens to ids, right-padded with PAD or truncated to ``max_len``.

    Returns (ids, true_len) where true_len excludes padding.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = [vocab.id_of(tok) for tok in tokens[:max_len]]
    true_len = len(ids)
    ids.extend([PAD_ID] * (max_len - true_len))
    return ids, true_len


def decode(ids: list[int], vocab: Vocabulary, true_len: int | None = None) -> list[str]:
    """Inverse of encode over the unpadded prefix; unknowns come back as UNK."""
    if true_len is None:
        true_len = len(ids)
    return [vocab.token_of(i) for i in ids[:true_len]]


@dataclass(frozen=True)
class TokenizedSentence:
    """A segmented sentence with vocabulary ids, one id per token."""

    tokens: tuple
    ids: tuple

    def __post_init__(self):
        if len(self.tokens) != len(self.ids):
            raise ValueError("tokens and ids must have equal length")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "ids", tuple(self.ids))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return "".join(self.tokens)


@dataclass(frozen=True)
class Tokenizer:
    """Bundles a segmenter and a vocabulary; the unit every model consumes."""

    vocab: Vocabulary
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)

    def __call__(self, text: str) -> TokenizedSentence:
        tokens = segment(text, self.segmenter)
        ids = [self.vocab.id_of(tok) for tok in tokens]
        return TokenizedSentence(tuple(tokens), tuple(ids))

    def to_dict(self) -> dict:
        return {"vocab": self.vocab.to_dict(), "segmenter": self.segmenter.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Tokenizer":
        return cls(
            vocab=Vocabulary.from_dict(d["vocab"]),
            segmenter=SegmenterConfig.from_dict(d["segmenter"]),
        )


def load_lexicon(path) -> frozenset:
    """Lexicon file: UTF-8, one word per line; blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())
