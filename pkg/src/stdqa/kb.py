"""Knowledge library: question-answer records with source locations,
query history, feedback, and two-stage similarity retrieval.

Records live in an append-log plus snapshot directory (``records.log`` /
``snapshot.json``); history and feedback are JSON Lines append logs. A
store can also be opened read-only from a bare JSON file of records, in
which case history and feedback stay in memory.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .simnet import SimModel, similarity
from .textcore import Tokenizer

logger = logging.getLogger(__name__)


class KbError(Exception):
    pass


class KbParseError(KbError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class KbValidationError(KbError):
    pass


class KbConflictError(KbError):
    pass


class KbNotFoundError(KbError):
    pass


@dataclass(frozen=True)
class KbRecord:
    id: str
    group_id: str
    question: str
    answer: str
    doc: str = ""
    section: str = ""
    origin: str = "manual"
    created_at: str = ""

    @property
    def source(self) -> dict:
        return {"doc": self.doc, "section": self.section}

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "group_id": self.group_id,
            "question": self.question,
            "answer": self.answer,
            "source": {"doc": self.doc, "section": self.section},
            "origin": self.origin,
            "created_at": self.created_at,
        }


@dataclass(frozen=True)
class QueryResult:
    record: KbRecord
    score: float


@dataclass(frozen=True)
class HistoryEntry:
    id: str
    question: str
    timestamp: str
    top_record_id: str | None
    top_score: float | None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "timestamp": self.timestamp,
            "top_record_id": self.top_record_id,
            "top_score": self.top_score,
        }


@dataclass(frozen=True)
class FeedbackEntry:
    id: str
    history_id: str
    verdict: str
    comment: str
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "history_id": self.history_id,
            "verdict": self.verdict,
            "comment": self.comment,
            "timestamp": self.timestamp,
        }


VERDICTS = ("helpful", "unhelpful")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _content_id(question: str, answer: str, doc: str, section: str, origin: str) -> str:
    digest = hashlib.sha256(
        json.dumps([question, answer, doc, section, origin], ensure_ascii=False).encode("utf-8")
    ).hexdigest()
    return f"r-{digest[:12]}"


def _record_from_dict(obj: dict, line: int | None = None) -> KbRecord:
    if not isinstance(obj, dict):
        raise KbValidationError(f"record must be an object (line {line})")
    question = obj.get("question")
    if not isinstance(question, str) or not question.strip():
        raise KbValidationError(f"record missing nonempty 'question' (line {line})")
    answer = obj.get("answer")
    if not isinstance(answer, str):
        raise KbValidationError(f"record missing 'answer' (line {line})")
    source = obj.get("source") or {}
    doc = source.get("doc", "")
    section = source.get("section", "")
    origin = obj.get("origin", "generated" if "source_sentence" in obj else "manual")
    rec_id = obj.get("id") or _content_id(question, answer, doc, section, origin)
    group_id = obj.get("group_id") or rec_id
    created_at = obj.get("created_at") or _now()
    return KbRecord(
        id=rec_id, group_id=group_id, question=question, answer=answer,
        doc=doc, section=section, origin=origin, created_at=created_at,
    )


def _parse_records_blob(text: str) -> list[KbRecord]:
    """Accept a JSON array or JSON Lines; raise KbParseError with a line."""
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise KbParseError(str(exc), line=exc.lineno) from exc
        return [_record_from_dict(obj) for obj in data]
    records = []
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise KbParseError(str(exc), line=line_no) from exc
        records.append(_record_from_dict(obj, line=line_no))
    return records


class KbStore:
    """Single-writer record store with append-only history and feedback."""

    SNAPSHOT = "snapshot.json"
    RECORDS_LOG = "records.log"
    HISTORY_LOG = "history.jsonl"
    FEEDBACK_LOG = "feedback.jsonl"
    ENTITIES_LOG = "entities.jsonl"

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None
        self._records: dict[str, KbRecord] = {}
        self._history: list[HistoryEntry] = []
        self._feedback: list[FeedbackEntry] = []
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            self._load()

    @classmethod
    def from_file(cls, path: str | Path) -> "KbStore":
        """In-memory store seeded from a JSON/JSONL record file."""
        store = cls(root=None)
        store.import_json(path)
        return store

    def _load(self) -> None:
        snap = self.root / self.SNAPSHOT
        if snap.exists():
            for obj in json.loads(snap.read_text(encoding="utf-8")):
                rec = _record_from_dict(obj)
                self._records[rec.id] = rec
        log = self.root / self.RECORDS_LOG
        if log.exists():
            for line in log.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    rec = _record_from_dict(json.loads(line))
                    self._records[rec.id] = rec
        hist = self.root / self.HISTORY_LOG
        if hist.exists():
            for line in hist.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._history.append(HistoryEntry(**json.loads(line)))
        fb = self.root / self.FEEDBACK_LOG
        if fb.exists():
            for line in fb.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._feedback.append(FeedbackEntry(**json.loads(line)))

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[KbRecord]:
        return list(self._records.values())

    def get(self, record_id: str) -> KbRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise KbNotFoundError(f"no record {record_id!r}") from None

    def _validate_batch(self, records: list[KbRecord]) -> None:
        seen = set()
        group_answer: dict[str, tuple[str, str, str]] = {
            rec.group_id: (rec.answer, rec.doc, rec.section) for rec in self._records.values()
        }
        for rec in records:
            if rec.id in self._records or rec.id in seen:
                raise KbConflictError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
            key = (rec.answer, rec.doc, rec.section)
            if rec.group_id in group_answer and group_answer[rec.group_id] != key:
                raise KbValidationError(
                    f"group {rec.group_id!r} members disagree on answer/source"
                )
            group_answer.setdefault(rec.group_id, key)

    def add_records(self, records: list[KbRecord]) -> int:
        """All-or-nothing append of validated records."""
        self._validate_batch(records)
        if self.root is not None:
            with open(self.root / self.RECORDS_LOG, "a", encoding="utf-8") as fh:
                for rec in records:
                    fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True))
                    fh.write("\n")
        for rec in records:
            self._records[rec.id] = rec
        return len(records)

    def import_json(self, path: str | Path) -> int:
        """Import a JSON array or JSON Lines file of records atomically."""
        text = Path(path).read_text(encoding="utf-8")
        return self.import_text(text)

    def import_text(self, text: str) -> int:
        records = _parse_records_blob(text)
        return self.add_records(records)

    def export_json(self, path: str | Path) -> None:
        data = [rec.to_dict() for rec in self._records.values()]
        Path(path).write_text(
            json.dumps(data, ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )

    def compact(self) -> None:
        """Fold the append log into the snapshot."""
        if self.root is None:
            return
        snap = [rec.to_dict() for rec in self._records.values()]
        (self.root / self.SNAPSHOT).write_text(
            json.dumps(snap, ensure_ascii=False, sort_keys=True), encoding="utf-8"
        )
        log = self.root / self.RECORDS_LOG
        if log.exists():
            log.unlink()

    # -- history / feedback ------------------------------------------------

    def log_query(self, question: str, result: QueryResult | None) -> HistoryEntry:
        entry = HistoryEntry(
            id=f"h-{len(self._history) + 1}",
            question=question,
            timestamp=_now(),
            top_record_id=result.record.id if result else None,
            top_score=result.score if result else None,
        )
        self._history.append(entry)
        self._append_log(self.HISTORY_LOG, entry.to_dict())
        return entry

    def record_feedback(self, entry_id: str, verdict: str, comment: str = "") -> FeedbackEntry:
        if verdict not in VERDICTS:
            raise KbValidationError(f"verdict must be one of {VERDICTS}")
        if not any(h.id == entry_id for h in self._history):
            raise KbNotFoundError(f"no history entry {entry_id!r}")
        entry = FeedbackEntry(
            id=f"f-{len(self._feedback) + 1}",
            history_id=entry_id,
            verdict=verdict,
            comment=comment,
            timestamp=_now(),
        )
        self._feedback.append(entry)
        self._append_log(self.FEEDBACK_LOG, entry.to_dict())
        return entry

    def history(self) -> list[HistoryEntry]:
        return list(self._history)

    def feedback(self) -> list[FeedbackEntry]:
        return list(self._feedback)

    def save_entities(self, sentence: str, spans) -> None:
        """Optional sidecar of extracted entity spans keyed by sentence."""
        self._append_log(self.ENTITIES_LOG, {
            "sentence": sentence,
            "entities": [
                {"start": s.start, "end": s.end, "type": s.entity_type, "surface": s.surface}
                for s in spans
            ],
        })

    def _append_log(self, name: str, obj: dict) -> None:
        if self.root is None:
            return
        with open(self.root / name, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True))
            fh.write("\n")

    def stats(self) -> dict:
        return {
            "records": len(self._records),
            "groups": len({rec.group_id for rec in self._records.values()}),
            "history": len(self._history),
            "feedback": len(self._feedback),
        }


def token_overlap(tokens_a, tokens_b) -> float:
    """Shared unique tokens over the union; 0 when both are empty."""
    sa, sb = set(tokens_a), set(tokens_b)
    union = sa | sb
    if not union:
        return 0.0
    return len(sa & sb) / len(union)


def retrieve(question: str, store: KbStore, model: SimModel,
             tokenizer: Tokenizer | None = None, top_k: int = 5,
             prefilter_m: int = 0, min_score: float = 0.0) -> list[QueryResult]:
    """Rank stored questions against ``question``.

    Stage 1 orders records by token overlap and keeps ``prefilter_m``
    survivors (0 scores everything); stage 2 ranks survivors with the
    similarity model. Ties break on record id.
    """
    if top_k < 0:
        raise ValueError("top_k must be >= 0")
    tokenizer = tokenizer or model.tokenizer
    if tokenizer is None:
        raise ValueError("no tokenizer available for retrieval")
    records = sorted(store.records(), key=lambda r: r.id)
    if top_k == 0 or not records:
        return []
    query_ts = tokenizer(question)
    candidates = records
    if prefilter_m > 0:
        overlaps = [
            (token_overlap(query_ts.tokens, tokenizer(rec.question).tokens), rec)
            for rec in records
        ]
        overlaps.sort(key=lambda pair: (-pair[0], pair[1].id))
        candidates = [rec for _, rec in overlaps[:prefilter_m]]
    scored = [
        QueryResult(record=rec, score=similarity(query_ts, tokenizer(rec.question), model))
        for rec in candidates
    ]
    scored.sort(key=lambda qr: (-qr.score, qr.record.id))
    return [qr for qr in scored if qr.score >= min_score][:top_k]
