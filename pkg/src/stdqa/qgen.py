"""Template question generation: replace a tagged entity with its
type-specific interrogative (or front it) and keep the entity as the answer.

Placement follows the type mapping: most interrogatives replace the entity
in place; condition and parameter questions put the interrogative first and
drop the entity. A terminal "。" becomes "?" and a "?" is appended when the
sentence had no terminal punctuation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .nertagger import EntitySpan, NerModel, TaggedSentence, extract_entities, tag_text

logger = logging.getLogger(__name__)

PLACEMENT_REPLACE = "replace"
PLACEMENT_FRONT = "front"


class UnmappedEntityTypeError(KeyError):
    pass


@dataclass(frozen=True)
class Interrogative:
    surface: str
    placement: str

    def __post_init__(self):
        if self.placement not in (PLACEMENT_REPLACE, PLACEMENT_FRONT):
            raise ValueError(f"unknown placement {self.placement!r}")


# The category surface ships as 什么产品类别 (the fully-specified worked form);
# the shorter 什么类别 is a drop-in alternative via an override file.
DEFAULT_INTERROGATIVES = {
    "PRO": Interrogative("什么属性", PLACEMENT_REPLACE),
    "CON": Interrogative("什么工况", PLACEMENT_FRONT),
    "CAT": Interrogative("什么产品类别", PLACEMENT_REPLACE),
    "MAT": Interrogative("什么材料", PLACEMENT_REPLACE),
    "STA": Interrogative("什么阶段", PLACEMENT_REPLACE),
    "PAR": Interrogative("什么参数", PLACEMENT_FRONT),
}


@dataclass(frozen=True)
class InterrogativeMap:
    entries: dict = field(default_factory=lambda: dict(DEFAULT_INTERROGATIVES))

    @classmethod
    def default(cls) -> "InterrogativeMap":
        return cls()

    @classmethod
    def load(cls, path) -> "InterrogativeMap":
        """JSON object keyed by type abbreviation; merges over the defaults.

        Values: {"surface": str, "placement": "replace"|"front"}.
        """
        with open(path, encoding="utf-8") as fh:
            overrides = json.load(fh)
        entries = dict(DEFAULT_INTERROGATIVES)
        for etype, entry in overrides.items():
            entries[etype] = Interrogative(entry["surface"], entry.get("placement", PLACEMENT_REPLACE))
        return cls(entries)


def interrogative_for(entity_type: str, imap: InterrogativeMap) -> Interrogative:
    try:
        return imap.entries[entity_type]
    except KeyError:
        raise UnmappedEntityTypeError(entity_type) from None


@dataclass(frozen=True)
class GeneratedPair:
    question: str
    answer: str
    source_sentence: str
    entity_type: str
    span: tuple  # (start, end) token indices in the source sentence
    origin: str = "generated"
    doc: str = ""
    section: str = ""

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer": self.answer,
            "source_sentence": self.source_sentence,
            "entity_type": self.entity_type,
            "span": list(self.span),
            "origin": self.origin,
            "source": {"doc": self.doc, "section": self.section},
        }


def _terminal_question_mark(tokens: list[str]) -> list[str]:
    if tokens and tokens[-1] == "。":
        return tokens[:-1] + ["?"]
    if tokens and tokens[-1] in ("?", "？"):
        return tokens[:-1] + ["?"]
    return tokens + ["?"]


def select_candidates(corpus: list[TaggedSentence]) -> list[tuple[TaggedSentence, list[EntitySpan]]]:
    """Keep exactly the sentences carrying at least one entity span."""
    kept = []
    for sentence in corpus:
        spans = extract_entities(sentence)
        if spans:
            kept.append((sentence, spans))
    return kept


def generate_pairs(sentence: TaggedSentence, spans: list[EntitySpan],
                   imap: InterrogativeMap | None = None,
                   doc: str = "", section: str = "") -> list[GeneratedPair]:
    """One question-answer pair per span; the removed entity is the answer."""
    imap = imap or InterrogativeMap.default()
    tokens = list(sentence.tokens)
    pairs = []
    for span in spans:
        if not (0 <= span.start < span.end <= len(tokens)):
            raise ValueError(f"span {span} out of bounds for sentence of length {len(tokens)}")
        inter = interrogative_for(span.entity_type, imap)
        if inter.placement == PLACEMENT_REPLACE:
            q_tokens = tokens[: span.start] + [inter.surface] + tokens[span.end :]
        else:
            q_tokens = [inter.surface] + tokens[: span.start] + tokens[span.end :]
        q_tokens = _terminal_question_mark(q_tokens)
        answer = "".join(tokens[span.start : span.end])
        pairs.append(GeneratedPair(
            question="".join(q_tokens),
            answer=answer,
            source_sentence=sentence.text,
            entity_type=span.entity_type,
            span=(span.start, span.end),
            doc=doc,
            section=section,
        ))
    return pairs


def generate_corpus(corpus: list[str], model: NerModel,
                    imap: InterrogativeMap | None = None,
                    doc: str = "", section: str = "") -> list[GeneratedPair]:
    """Tag every sentence, keep the entity-bearing ones, generate pairs.

    Sentences the tagger fails on are skipped with a logged warning.
    """
    imap = imap or InterrogativeMap.default()
    tagged = []
    for sentence in corpus:
        try:
            tagged.append(tag_text(model, sentence))
        except Exception as exc:  # noqa: BLE001 - per-sentence isolation
            logger.warning("skipping sentence %r: %s", sentence, exc)
    pairs = []
    for sentence, spans in select_candidates(tagged):
        pairs.extend(generate_pairs(sentence, spans, imap, doc=doc, section=section))
    return pairs


def write_pairs_jsonl(path, pairs: list[GeneratedPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
