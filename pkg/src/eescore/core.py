"""Shared data model: spans, documents, events, candidates, labels.

All types are immutable after construction; they can be shared freely
across threads. Invariant checking is data, not control flow: invalid
structures can be built, and `validate_document` reports what is wrong.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

# Reserved label meaning "no event / no role". Compared byte-exactly,
# like every other label.
NIL_LABEL = "NA"

ENTITY_KINDS = ("entity", "value", "time", "pronoun")

TASK_TRIGGER = "trigger"
TASK_ARGUMENT = "argument"
TASKS = (TASK_TRIGGER, TASK_ARGUMENT)


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token-index interval [start, end), 0-based."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start

    def as_pair(self) -> list[int]:
        return [self.start, self.end]


def span_equal(a: Span, b: Span) -> bool:
    return a.start == b.start and a.end == b.end


def span_contains(outer: Span, inner: Span) -> bool:
    return outer.start <= inner.start and inner.end <= outer.end


def span_overlaps(a: Span, b: Span) -> bool:
    return max(a.start, b.start) < min(a.end, b.end)


@dataclass(frozen=True)
class EntityMention:
    """A candidate-bearing mention: entity, value, time expression or pronoun."""

    id: str
    span: Span
    head_span: Span
    kind: str  # one of ENTITY_KINDS


@dataclass(frozen=True)
class Argument:
    entity_id: str
    role: str


@dataclass(frozen=True)
class EventAnnotation:
    id: str
    event_type: str
    trigger: Span
    arguments: tuple[Argument, ...]


@dataclass(frozen=True)
class Anchor:
    """Identifies the event an argument prediction record answers for."""

    trigger: Span
    event_type: str


@dataclass(frozen=True)
class Document:
    id: str
    tokens: tuple[str, ...]
    sentences: tuple[Span, ...]
    entities: tuple[EntityMention, ...]
    events: tuple[EventAnnotation, ...]

    @cached_property
    def entities_by_id(self) -> dict[str, EntityMention]:
        return {m.id: m for m in self.entities}


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @cached_property
    def _by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id

    def get(self, doc_id: str) -> Document:
        return self._by_id[doc_id]


@dataclass(frozen=True)
class Candidate:
    id: str
    span: Span


@dataclass(frozen=True)
class CandidateSet:
    """The pre-enumerated output space a classification model chooses from.

    Candidates are kept in canonical order: (span.start, span.end), ties
    broken by id. For the argument task the set is anchored to one
    (document, trigger, event_type).
    """

    task: str  # TASK_TRIGGER | TASK_ARGUMENT
    doc_id: str
    candidates: tuple[Candidate, ...]
    anchor: Anchor | None = None  # set iff task == TASK_ARGUMENT

    @staticmethod
    def make(task: str, doc_id: str, candidates, anchor: Anchor | None = None) -> "CandidateSet":
        ordered = tuple(sorted(candidates, key=lambda c: (c.span.start, c.span.end, c.id)))
        ids = [c.id for c in ordered]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate candidate ids in candidate set for doc {doc_id}")
        return CandidateSet(task=task, doc_id=doc_id, candidates=ordered, anchor=anchor)

    @cached_property
    def ids(self) -> dict[str, Candidate]:
        return {c.id: c for c in self.candidates}

    @cached_property
    def by_span(self) -> dict[tuple[int, int], str]:
        """Maps (start, end) to the first candidate id in canonical order."""
        table: dict[tuple[int, int], str] = {}
        for c in self.candidates:
            table.setdefault((c.span.start, c.span.end), c.id)
        return table


@dataclass(frozen=True)
class LabelSchema:
    event_types: frozenset[str]
    roles: frozenset[str]
    nil_label: str = NIL_LABEL

    def __post_init__(self):
        if self.nil_label in self.event_types or self.nil_label in self.roles:
            raise ValueError(f"nil label {self.nil_label!r} must not appear in the label sets")

    @staticmethod
    def from_corpus(corpus: Corpus) -> "LabelSchema":
        types = {e.event_type for d in corpus for e in d.events}
        roles = {a.role for d in corpus for e in d.events for a in e.arguments}
        return LabelSchema(event_types=frozenset(types), roles=frozenset(roles))


def _check_span(span: Span, n_tokens: int, where: str, out: list[str]) -> bool:
    """Appends violations for one span; returns True when the span is usable."""
    ok = True
    if span.start >= span.end:
        out.append(f"Span: start < end violated at {where}")
        ok = False
    if span.start < 0:
        out.append(f"Span: start >= 0 violated at {where}")
        ok = False
    if span.end > n_tokens:
        out.append(f"Span: end <= token count violated at {where}")
        ok = False
    return ok


def validate_document(doc: Document) -> list[str]:
    """Returns all invariant violations, in a stable order; [] iff valid."""
    out: list[str] = []
    n = len(doc.tokens)

    # sentences: valid spans partitioning [0, n)
    cursor = 0
    partition_ok = True
    for i, s in enumerate(doc.sentences):
        if not _check_span(s, n, f"sentences[{i}]", out):
            partition_ok = False
            continue
        if s.start != cursor:
            partition_ok = False
        cursor = s.end
    if cursor != n:
        partition_ok = False
    if not partition_ok:
        out.append("sentences do not partition [0, token count): must be contiguous, ordered, covering")

    seen_entity_ids: set[str] = set()
    for i, m in enumerate(doc.entities):
        if m.kind not in ENTITY_KINDS:
            out.append(f"unknown entity kind {m.kind!r} at entities[{i}]")
        span_ok = _check_span(m.span, n, f"entities[{i}].span", out)
        head_ok = _check_span(m.head_span, n, f"entities[{i}].head_span", out)
        if span_ok and head_ok and not span_contains(m.span, m.head_span):
            out.append(f"head_span not contained in span at entities[{i}]")
        if m.id in seen_entity_ids:
            out.append(f"duplicate entity id {m.id} at entities[{i}]")
        seen_entity_ids.add(m.id)

    seen_event_ids: set[str] = set()
    for i, ev in enumerate(doc.events):
        if ev.id in seen_event_ids:
            out.append(f"duplicate event id {ev.id} at events[{i}]")
        seen_event_ids.add(ev.id)
        if _check_span(ev.trigger, n, f"events[{i}].trigger", out):
            within = any(span_contains(s, ev.trigger) for s in doc.sentences)
            if doc.sentences and not within:
                out.append(f"trigger span crosses sentence boundary at events[{i}].trigger")
        seen_args: set[tuple[str, str]] = set()
        for j, arg in enumerate(ev.arguments):
            if arg.entity_id not in doc.entities_by_id:
                out.append(f"unresolved entity_id {arg.entity_id} at events[{i}].arguments[{j}]")
            key = (arg.entity_id, arg.role)
            if key in seen_args:
                out.append(f"duplicate (entity_id, role) {key} at events[{i}].arguments[{j}]")
            seen_args.add(key)

    return out


def validate_corpus(corpus: Corpus) -> list[str]:
    """Per-document violations, each prefixed with the document id."""
    out: list[str] = []
    for doc in corpus:
        out.extend(f"{doc.id}: {v}" for v in validate_document(doc))
    return out
