"""Projection of heterogeneous model outputs onto candidate-set space.

Predictions from all four paradigms are standardized onto the candidate
sets of the classification paradigm under strict boundary matching:
a projected span either equals a candidate span exactly or is discarded.
Duplicate predictions for one candidate are resolved deterministically
(highest confidence, then first appearance), and position-free generated
mentions are placed by generation order against occurrence order. Every
discard carries a machine-readable reason so the whole projection is
auditable.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

from .core import (
    TASK_ARGUMENT,
    TASK_TRIGGER,
    Anchor,
    Candidate,
    CandidateSet,
    Corpus,
    Document,
    Span,
)
from .errors import ValidationError
from .ingest import (
    PARADIGM_CLS,
    CgItem,
    ClsAssignment,
    ParadigmPredictions,
    PredictionRecord,
)
from .jsonio import dump_jsonl

TRIGGER_POLICY_EVERY_TOKEN = "every_token"
TRIGGER_POLICY_SPANS_UP_TO_K = "every_span_up_to_k"
TRIGGER_POLICIES = (TRIGGER_POLICY_EVERY_TOKEN, TRIGGER_POLICY_SPANS_UP_TO_K)

STRAY_I_OPEN = "open_span"
STRAY_I_DISCARD = "discard"
STRAY_I_MODES = (STRAY_I_OPEN, STRAY_I_DISCARD)

# provenance of a standardized assignment
PROV_NATIVE = "native"
PROV_PROJECTED = "projected"
PROV_POSITIONED = "positioned"
PROV_RESOLVED_DUPLICATE = "resolved_duplicate"

# discard reasons
DISCARD_OVERLAP = "overlap_mismatch"
DISCARD_DUP_CONFIDENCE = "duplicate_lower_confidence"
DISCARD_DUP_ARRIVAL = "duplicate_later_arrival"
DISCARD_UNPLACEABLE = "unplaceable_mention"
DISCARD_UNKNOWN_CANDIDATE = "unknown_candidate"


@dataclass(frozen=True)
class CandidatePolicy:
    """How trigger candidates are enumerated. Argument candidates are always
    the entity mentions of the (variant-filtered) document."""

    trigger_policy: str = TRIGGER_POLICY_EVERY_TOKEN
    k: int = 1

    def __post_init__(self):
        if self.trigger_policy not in TRIGGER_POLICIES:
            raise ValueError(f"unknown trigger policy {self.trigger_policy!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class StandardizeOptions:
    stray_i: str = STRAY_I_OPEN

    def __post_init__(self):
        if self.stray_i not in STRAY_I_MODES:
            raise ValueError(f"unknown stray-I mode {self.stray_i!r}")


@dataclass(frozen=True)
class Assignment:
    candidate_id: str
    span: Span
    label: str
    provenance: str
    confidence: float | None = None


@dataclass(frozen=True)
class Discard:
    reason: str
    original: dict  # JSON-ready description of the discarded prediction


@dataclass(frozen=True)
class StandardizedRecord:
    doc_id: str
    task: str
    anchor: Anchor | None
    assignments: tuple[Assignment, ...]  # canonical candidate order, one per candidate
    discarded: tuple[Discard, ...]
    line: int = 0


@dataclass(frozen=True)
class StandardizedPredictionSet:
    records: tuple[StandardizedRecord, ...]

    def __iter__(self) -> Iterator[StandardizedRecord]:
        return iter(self.records)

    def task_records(self, task: str) -> tuple[StandardizedRecord, ...]:
        return tuple(r for r in self.records if r.task == task)


def trigger_candidate_id(span: Span) -> str:
    return f"t:{span.start}:{span.end}"


def build_candidates(
    doc: Document, anchor: Anchor | None = None, policy: CandidatePolicy = CandidatePolicy()
) -> CandidateSet:
    """Enumerates the candidate set for one document (and anchor, for EAE).

    anchor=None builds trigger candidates per the policy; otherwise one
    argument candidate per entity mention, id equal to the mention id.
    """
    if anchor is None:
        if policy.trigger_policy == TRIGGER_POLICY_EVERY_TOKEN:
            cands = [Candidate(trigger_candidate_id(Span(i, i + 1)), Span(i, i + 1)) for i in range(len(doc.tokens))]
        else:
            cands = []
            for sent in doc.sentences:
                for start in range(sent.start, sent.end):
                    for end in range(start + 1, min(start + policy.k, sent.end) + 1):
                        cands.append(Candidate(trigger_candidate_id(Span(start, end)), Span(start, end)))
        return CandidateSet.make(TASK_TRIGGER, doc.id, cands)
    cands = [Candidate(m.id, m.span) for m in doc.entities]
    return CandidateSet.make(TASK_ARGUMENT, doc.id, cands, anchor=anchor)


def decode_bio(tags: Sequence[str], stray_i: str = STRAY_I_OPEN) -> list[tuple[Span, str]]:
    """Decodes a BIO tag sequence into labeled spans.

    Maximal B-led runs become spans; a label change inside a run closes
    the previous span. A stray I tag (no same-label B/I immediately
    before it) either opens a new span (`open_span`, the default) or is
    dropped (`discard`).

    >>> decode_bio(["B-Person", "I-Person", "O"])
    [(Span(start=0, end=2), 'Person')]
    """
    if stray_i not in STRAY_I_MODES:
        raise ValueError(f"unknown stray-I mode {stray_i!r}")
    spans: list[tuple[Span, str]] = []
    open_start: int | None = None
    open_label: str | None = None

    def close(end: int) -> None:
        nonlocal open_start, open_label
        if open_start is not None:
            spans.append((Span(open_start, end), open_label))
            open_start = None
            open_label = None

    for i, tag in enumerate(tags):
        if tag == "O":
            close(i)
            continue
        prefix, label = tag.split("-", 1)
        if prefix == "I" and label == open_label:
            continue
        close(i)
        if prefix == "B" or stray_i == STRAY_I_OPEN:
            open_start = i
            open_label = label
    close(len(tags))
    return spans


def position_cg(
    items: Sequence[CgItem], doc: Document
) -> tuple[list[tuple[Span, CgItem, int]], list[tuple[CgItem, int]]]:
    """Assigns positions to generated items by appearance order.

    Occurrences of each mention are found by exact, case-sensitive token
    sequence matching, left to right; the k-th generated item carrying a
    given mention is placed on its k-th occurrence. Returns (placed,
    unplaceable), both carrying the item's arrival index.
    """
    occurrences: dict[tuple[str, ...], list[Span]] = {}
    used: dict[tuple[str, ...], int] = {}
    placed: list[tuple[Span, CgItem, int]] = []
    unplaceable: list[tuple[CgItem, int]] = []
    tokens = doc.tokens
    for idx, item in enumerate(items):
        mention = item.mention
        if mention not in occurrences:
            width = len(mention)
            occurrences[mention] = [
                Span(s, s + width)
                for s in range(len(tokens) - width + 1)
                if tokens[s : s + width] == mention
            ]
            used[mention] = 0
        k = used[mention]
        if k < len(occurrences[mention]):
            placed.append((occurrences[mention][k], item, idx))
            used[mention] = k + 1
        else:
            unplaceable.append((item, idx))
    return placed, unplaceable


@dataclass(frozen=True)
class MatchedPrediction:
    """A prediction that strictly matched a candidate, before duplicate
    resolution. arrival_index is its position in the source record."""

    candidate_id: str
    label: str
    confidence: float | None
    arrival_index: int


def resolve_duplicates(
    matched: Sequence[MatchedPrediction],
) -> tuple[dict[str, MatchedPrediction], list[tuple[MatchedPrediction, str]]]:
    """Keeps one prediction per candidate: highest confidence when scores
    exist (ties to the first appearing), otherwise the first appearing.

    Returns (winner per candidate_id, discarded entries with reasons).
    """
    groups: dict[str, list[MatchedPrediction]] = {}
    for m in matched:
        groups.setdefault(m.candidate_id, []).append(m)
    winners: dict[str, MatchedPrediction] = {}
    discards: list[tuple[MatchedPrediction, str]] = []
    for cid, group in groups.items():
        if any(m.confidence is not None for m in group):
            best = max(group, key=lambda m: (m.confidence, -m.arrival_index))
        else:
            best = min(group, key=lambda m: m.arrival_index)
        winners[cid] = best
        for m in group:
            if m is best:
                continue
            if m.confidence is not None and m.confidence < best.confidence:
                discards.append((m, DISCARD_DUP_CONFIDENCE))
            else:
                discards.append((m, DISCARD_DUP_ARRIVAL))
    return winners, discards


def _cls_original(a: ClsAssignment) -> dict:
    obj = {"candidate_id": a.candidate_id, "label": a.label}
    if a.confidence is not None:
        obj["confidence"] = a.confidence
    return obj


def project(
    record: PredictionRecord,
    candidates: CandidateSet,
    options: StandardizeOptions = StandardizeOptions(),
    doc: Document | None = None,
) -> StandardizedRecord:
    """Projects one prediction record onto its candidate set.

    Strict boundary matching: a prediction lands on a candidate only when
    the spans are exactly equal. Generated items are positioned first,
    then matched; duplicates are resolved last. Conservation holds per
    record: every input prediction becomes exactly one assignment or one
    discard. `doc` is required for generation records (positioning needs
    the token sequence).
    """
    if record.doc_id != candidates.doc_id:
        raise ValidationError(
            f"record for doc {record.doc_id!r} projected onto candidates of doc {candidates.doc_id!r}"
        )
    if record.task != candidates.task or record.anchor != candidates.anchor:
        raise ValidationError(
            f"record anchor does not match candidate set anchor for doc {record.doc_id!r}"
        )

    discards: list[Discard] = []
    matched: list[MatchedPrediction] = []
    originals: dict[int, dict] = {}  # arrival_index -> JSON description
    provenance_base = PROV_NATIVE

    if record.assignments is not None:
        for idx, a in enumerate(record.assignments):
            if a.candidate_id not in candidates.ids:
                discards.append(Discard(DISCARD_UNKNOWN_CANDIDATE, _cls_original(a)))
                continue
            originals[idx] = _cls_original(a)
            matched.append(MatchedPrediction(a.candidate_id, a.label, a.confidence, idx))
    elif record.tags is not None:
        provenance_base = PROV_PROJECTED
        for idx, (span, label) in enumerate(decode_bio(record.tags, options.stray_i)):
            original = {"span": span.as_pair(), "label": label}
            cid = candidates.by_span.get((span.start, span.end))
            if cid is None:
                discards.append(Discard(DISCARD_OVERLAP, original))
                continue
            originals[idx] = original
            matched.append(MatchedPrediction(cid, label, None, idx))
    elif record.spans is not None:
        provenance_base = PROV_PROJECTED
        for idx, sp in enumerate(record.spans):
            original = {"span": sp.span.as_pair(), "label": sp.label}
            if sp.confidence is not None:
                original["confidence"] = sp.confidence
            cid = candidates.by_span.get((sp.span.start, sp.span.end))
            if cid is None:
                discards.append(Discard(DISCARD_OVERLAP, original))
                continue
            originals[idx] = original
            matched.append(MatchedPrediction(cid, sp.label, sp.confidence, idx))
    else:
        provenance_base = PROV_POSITIONED
        if doc is None:
            raise ValidationError(
                f"projecting a generation record for doc {record.doc_id!r} requires the document"
            )
        placed, unplaceable = position_cg(record.items or (), doc)
        for item, _idx in unplaceable:
            discards.append(Discard(DISCARD_UNPLACEABLE, _cg_original(item)))
        for span, item, idx in placed:
            original = _cg_original(item, span)
            cid = candidates.by_span.get((span.start, span.end))
            if cid is None:
                discards.append(Discard(DISCARD_OVERLAP, original))
                continue
            originals[idx] = original
            matched.append(MatchedPrediction(cid, item.label, item.confidence, idx))

    winners, dup_discards = resolve_duplicates(matched)
    had_duplicates = {m.candidate_id for m, _ in dup_discards}
    for m, reason in dup_discards:
        discards.append(Discard(reason, originals[m.arrival_index]))

    order = {c.id: i for i, c in enumerate(candidates.candidates)}
    assignments = tuple(
        Assignment(
            candidate_id=m.candidate_id,
            span=candidates.ids[m.candidate_id].span,
            label=m.label,
            provenance=PROV_RESOLVED_DUPLICATE if m.candidate_id in had_duplicates else provenance_base,
            confidence=m.confidence,
        )
        for m in sorted(winners.values(), key=lambda m: order[m.candidate_id])
    )
    return StandardizedRecord(
        doc_id=record.doc_id,
        task=record.task,
        anchor=record.anchor,
        assignments=assignments,
        discarded=tuple(discards),
        line=record.line,
    )


def _cg_original(item: CgItem, span: Span | None = None) -> dict:
    obj: dict = {"mention": list(item.mention), "label": item.label}
    if item.confidence is not None:
        obj["confidence"] = item.confidence
    if span is not None:
        obj["span"] = span.as_pair()
    return obj


def standardize_predictions(
    predictions: ParadigmPredictions,
    corpus: Corpus,
    policy: CandidatePolicy = CandidatePolicy(),
    options: StandardizeOptions = StandardizeOptions(),
    jobs: int = 1,
) -> StandardizedPredictionSet:
    """Standardizes every record against its document's candidate set.

    Records are independent; with jobs > 1 they are projected in a thread
    pool, but output order always equals input order.
    """

    def one(record: PredictionRecord) -> StandardizedRecord:
        doc = corpus.get(record.doc_id)
        candidates = build_candidates(doc, anchor=record.anchor, policy=policy)
        return project(record, candidates, options, doc=doc)

    if jobs > 1 and len(predictions.records) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = tuple(pool.map(one, predictions.records))
    else:
        records = tuple(one(r) for r in predictions.records)
    return StandardizedPredictionSet(records=records)


def _record_to_obj(record: StandardizedRecord) -> dict:
    obj: dict = {"doc_id": record.doc_id}
    if record.anchor is not None:
        obj["anchor"] = {
            "trigger": record.anchor.trigger.as_pair(),
            "event_type": record.anchor.event_type,
        }
    obj["assignments"] = [
        {"candidate_id": a.candidate_id, "label": a.label, "provenance": a.provenance}
        for a in record.assignments
    ]
    obj["discarded"] = [{"reason": d.reason, "original": d.original} for d in record.discarded]
    return obj


def serialize_standardized(standardized: StandardizedPredictionSet) -> bytes:
    return dump_jsonl(_record_to_obj(r) for r in standardized.records)


def to_cls_records(standardized: StandardizedPredictionSet) -> ParadigmPredictions:
    """Re-expresses standardized output as native classification records
    (the output space is the classification space, so this is lossless
    apart from discards)."""
    records = []
    for r in standardized.records:
        records.append(
            PredictionRecord(
                doc_id=r.doc_id,
                task=r.task,
                anchor=r.anchor,
                assignments=tuple(
                    ClsAssignment(a.candidate_id, a.label, a.confidence) for a in r.assignments
                ),
                line=r.line,
            )
        )
    return ParadigmPredictions(paradigm=PARADIGM_CLS, records=tuple(records))
