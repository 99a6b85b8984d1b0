"""Hand-built corpora and prediction builders shared across tests."""

from eescore.core import (
    Argument,
    Corpus,
    Document,
    EntityMention,
    EventAnnotation,
    Span,
)
from eescore.ingest import parse_predictions
from eescore.jsonio import dump_jsonl

# A single-sentence news-style document. Token layout (index: token):
#  0 Elon  1 Musk  2 has  3 formally  4 announced  5 that  6 he  7 is
#  8 quitting  9 as  10 Chief  11 Executive  12 of  13 the  14 Twitter
# 15 company  16 after  17 visiting  18 Twitter  19 headquarters  20 .
# "Twitter" occurs twice, at (14,15) and (18,19); "Elon Musk" is unique.
RESIGNATION_TOKENS = (
    "Elon", "Musk", "has", "formally", "announced", "that", "he", "is",
    "quitting", "as", "Chief", "Executive", "of", "the", "Twitter",
    "company", "after", "visiting", "Twitter", "headquarters", ".",
)


def resignation_document(second_event: bool = False) -> Document:
    entities = (
        EntityMention("e1", Span(0, 2), Span(1, 2), "entity"),      # Elon Musk
        EntityMention("e2", Span(10, 12), Span(11, 12), "value"),   # Chief Executive
        EntityMention("e3", Span(14, 15), Span(14, 15), "entity"),  # first Twitter
        EntityMention("e4", Span(18, 19), Span(18, 19), "entity"),  # second Twitter
    )
    events = [
        EventAnnotation(
            "ev1",
            "End-Position",
            Span(8, 9),  # quitting
            (
                Argument("e1", "Person"),
                Argument("e2", "Position"),
                Argument("e3", "Entity"),
                Argument("e4", "Place"),
            ),
        )
    ]
    if second_event:
        events.append(
            EventAnnotation(
                "ev2",
                "Meet",
                Span(17, 18),  # visiting
                (Argument("e1", "Entity"), Argument("e4", "Place")),
            )
        )
    return Document(
        id="doc-resignation",
        tokens=RESIGNATION_TOKENS,
        sentences=(Span(0, 21),),
        entities=entities,
        events=tuple(events),
    )


def resignation_corpus(second_event: bool = False) -> Corpus:
    return Corpus(documents=(resignation_document(second_event),))


def predictions_from(objs, paradigm, corpus):
    """Builds predictions through the real parser so record invariants hold."""
    return parse_predictions(dump_jsonl(objs), paradigm, corpus)


def simple_doc(doc_id: str, n_tokens: int = 8, events=(), entities=()) -> Document:
    return Document(
        id=doc_id,
        tokens=tuple(f"w{i}" for i in range(n_tokens)),
        sentences=(Span(0, n_tokens),),
        entities=tuple(entities),
        events=tuple(events),
    )


def delta_corpus() -> Corpus:
    """20 documents used to measure how standardization moves the metrics.

    Every document has one type-A event with trigger (0,1) and two gold
    arguments: e1 with role R1 on span (1,3) and e2 with role R2 on (4,5).
    """
    docs = []
    for i in range(20):
        entities = (
            EntityMention("e1", Span(1, 3), Span(1, 2), "entity"),
            EntityMention("e2", Span(4, 5), Span(4, 5), "entity"),
        )
        events = (
            EventAnnotation(
                "ev", "A", Span(0, 1), (Argument("e1", "R1"), Argument("e2", "R2"))
            ),
        )
        docs.append(simple_doc(f"d{i:02d}", 8, events=events, entities=entities))
    return Corpus(documents=tuple(docs))


def delta_sl_eae_objs() -> list:
    """Argument-task tag records for delta_corpus.

    Documents 0-9 predict both arguments exactly; 10-14 stretch the R1
    span to (1,4) (an overlap that cannot match any candidate); 15-19
    fragment R1 into (1,2)+(2,3), two predictions aimed at one annotated
    span. R2 is always correct.
    """
    objs = []
    for i in range(20):
        tags = ["O"] * 8
        if i < 10:
            tags[1], tags[2] = "B-R1", "I-R1"
        elif i < 15:
            tags[1], tags[2], tags[3] = "B-R1", "I-R1", "I-R1"
        else:
            tags[1], tags[2] = "B-R1", "B-R1"
        tags[4] = "B-R2"
        objs.append(
            {
                "doc_id": f"d{i:02d}",
                "task": "argument",
                "anchor": {"trigger": [0, 1], "event_type": "A"},
                "tags": tags,
            }
        )
    return objs
