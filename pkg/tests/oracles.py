"""Independent reference implementations used as test oracles.

These deliberately take a different route than the package code: the
matcher enumerates prediction-to-gold pairings instead of counting
multisets, and the BIO decoder normalizes tags in a first pass before
grouping runs in a second. They must never import the implementations
they check beyond the shared data types.
"""

from eescore.core import Span


def max_matching(pred_keys, gold_keys) -> int:
    """Largest number of prediction-gold pairs with equal keys, each gold
    consumed at most once, found by exhaustive search with pruning."""
    golds = list(gold_keys)
    used = [False] * len(golds)
    best = 0

    def rec(i: int, matched: int) -> None:
        nonlocal best
        if matched > best:
            best = matched
        if i == len(pred_keys) or matched + (len(pred_keys) - i) <= best:
            return
        rec(i + 1, matched)  # leave prediction i unmatched
        for j, g in enumerate(golds):
            if not used[j] and g == pred_keys[i]:
                used[j] = True
                rec(i + 1, matched + 1)
                used[j] = False

    rec(0, 0)
    return best


def brute_force_counts(pred_keys, gold_keys) -> tuple[int, int, int]:
    """(tp, fp, fn) by exhaustive pairing."""
    tp = max_matching(list(pred_keys), list(gold_keys))
    return tp, len(pred_keys) - tp, len(gold_keys) - tp


def brute_force_by_doc(pred_keys, gold_keys) -> tuple[int, int, int]:
    """Same, but partitioned per document (keys start with the doc id);
    matches never cross documents, so this is exact and keeps the
    enumeration small."""
    docs = {k[0] for k in pred_keys} | {k[0] for k in gold_keys}
    tp = fp = fn = 0
    for doc in sorted(docs):
        p = [k for k in pred_keys if k[0] == doc]
        g = [k for k in gold_keys if k[0] == doc]
        dtp, dfp, dfn = brute_force_counts(p, g)
        tp, fp, fn = tp + dtp, fp + dfp, fn + dfn
    return tp, fp, fn


def reference_bio_decode(tags) -> list[tuple[Span, str]]:
    """Two-pass decoder: rewrite stray I tags as B, then group maximal runs."""
    normalized: list[tuple[str, str | None]] = []
    prev_label = None
    for tag in tags:
        if tag == "O":
            normalized.append(("O", None))
            prev_label = None
            continue
        prefix, label = tag.split("-", 1)
        if prefix == "I" and prev_label == label:
            normalized.append(("I", label))
        else:
            normalized.append(("B", label))
        prev_label = label

    spans: list[tuple[Span, str]] = []
    i = 0
    while i < len(normalized):
        prefix, label = normalized[i]
        if prefix != "B":
            i += 1
            continue
        j = i + 1
        while j < len(normalized) and normalized[j] == ("I", label):
            j += 1
        spans.append((Span(i, j), label))
        i = j
    return spans
