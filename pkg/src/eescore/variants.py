"""Preprocessing-variant engine and dataset statistics.

The same raw corpus yields materially different datasets depending on
preprocessing choices: whether multi-token triggers survive, whether
time/value/pronoun mentions count as argument candidates, and whether
mentions are kept full or reduced to head words. This module makes those
choices an explicit configuration, applies them as a pure transformation,
and reports what was silently dropped so runs stay comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .core import Corpus, Document, EntityMention, EventAnnotation, Span
from .errors import ConfigError
from .standardize import CandidatePolicy, build_candidates

MENTION_MODE_HEAD = "head"
MENTION_MODE_FULL = "full"
MENTION_MODES = (MENTION_MODE_HEAD, MENTION_MODE_FULL)

MULTI_TOKEN_FIRST = "first_token"
MULTI_TOKEN_DROP = "drop_event"
MULTI_TOKEN_POLICIES = (MULTI_TOKEN_FIRST, MULTI_TOKEN_DROP)

_KIND_FLAGS = {"time": "include_time", "value": "include_value", "pronoun": "include_pronoun"}


@dataclass(frozen=True)
class VariantConfig:
    multi_token_triggers: bool = True
    include_time: bool = True
    include_value: bool = True
    include_pronoun: bool = True
    entity_mention_mode: str = MENTION_MODE_FULL
    # applies only when multi_token_triggers is false
    multi_token_policy: str = MULTI_TOKEN_FIRST

    def __post_init__(self):
        if self.entity_mention_mode not in MENTION_MODES:
            raise ValueError(f"unknown entity_mention_mode {self.entity_mention_mode!r}")
        if self.multi_token_policy not in MULTI_TOKEN_POLICIES:
            raise ValueError(f"unknown multi_token_policy {self.multi_token_policy!r}")

    def as_dict(self) -> dict:
        return {
            "multi_token_triggers": self.multi_token_triggers,
            "include_time": self.include_time,
            "include_value": self.include_value,
            "include_pronoun": self.include_pronoun,
            "entity_mention_mode": self.entity_mention_mode,
            "multi_token_policy": self.multi_token_policy,
        }


IDENTITY_CONFIG = VariantConfig()


@dataclass(frozen=True)
class VariantReport:
    """What the transformation removed or rewrote."""

    removed_arguments: int = 0
    reduced_triggers: int = 0


@dataclass(frozen=True)
class DatasetStats:
    token_count: int
    trigger_count: int
    argument_count: int
    event_type_count: int
    role_count: int
    trigger_candidate_count: int
    argument_candidate_count: int

    def as_dict(self) -> dict:
        return {
            "token_count": self.token_count,
            "trigger_count": self.trigger_count,
            "argument_count": self.argument_count,
            "event_type_count": self.event_type_count,
            "role_count": self.role_count,
            "trigger_candidate_count": self.trigger_candidate_count,
            "argument_candidate_count": self.argument_candidate_count,
        }


def _mention_kept(mention: EntityMention, cfg: VariantConfig) -> bool:
    flag = _KIND_FLAGS.get(mention.kind)
    return flag is None or getattr(cfg, flag)


def _apply_document(doc: Document, cfg: VariantConfig) -> tuple[Document, int, int]:
    removed_ids = {m.id for m in doc.entities if not _mention_kept(m, cfg)}
    entities = []
    for m in doc.entities:
        if m.id in removed_ids:
            continue
        if cfg.entity_mention_mode == MENTION_MODE_HEAD:
            m = replace(m, span=m.head_span)
        entities.append(m)

    events: list[EventAnnotation] = []
    removed_arguments = 0
    reduced_triggers = 0
    for ev in doc.events:
        trigger = ev.trigger
        if not cfg.multi_token_triggers and trigger.length > 1:
            reduced_triggers += 1
            if cfg.multi_token_policy == MULTI_TOKEN_DROP:
                removed_arguments += len(ev.arguments)
                continue
            trigger = Span(trigger.start, trigger.start + 1)
        kept_args = tuple(a for a in ev.arguments if a.entity_id not in removed_ids)
        removed_arguments += len(ev.arguments) - len(kept_args)
        events.append(replace(ev, trigger=trigger, arguments=kept_args))

    new_doc = Document(
        id=doc.id,
        tokens=doc.tokens,
        sentences=doc.sentences,
        entities=tuple(entities),
        events=tuple(events),
    )
    return new_doc, removed_arguments, reduced_triggers


def apply_variant(corpus: Corpus, cfg: VariantConfig) -> tuple[Corpus, VariantReport]:
    """Pure transformation; idempotent, and the identity configuration
    returns a deeply equal corpus. Trigger-only events are legal and kept."""
    docs = []
    removed_arguments = 0
    reduced_triggers = 0
    for doc in corpus:
        new_doc, removed, reduced = _apply_document(doc, cfg)
        docs.append(new_doc)
        removed_arguments += removed
        reduced_triggers += reduced
    return (
        Corpus(documents=tuple(docs)),
        VariantReport(removed_arguments=removed_arguments, reduced_triggers=reduced_triggers),
    )


def compute_stats(corpus: Corpus, policy: CandidatePolicy = CandidatePolicy()) -> DatasetStats:
    """Corpus statistics. Type/role counts are labels actually in use, not
    a declared schema; candidate counts follow the candidate policy."""
    tokens = sum(len(d.tokens) for d in corpus)
    triggers = sum(len(d.events) for d in corpus)
    arguments = sum(len(e.arguments) for d in corpus for e in d.events)
    event_types = {e.event_type for d in corpus for e in d.events}
    roles = {a.role for d in corpus for e in d.events for a in e.arguments}
    trigger_candidates = sum(len(build_candidates(d, policy=policy).candidates) for d in corpus)
    argument_candidates = sum(len(d.entities) for d in corpus)
    return DatasetStats(
        token_count=tokens,
        trigger_count=triggers,
        argument_count=arguments,
        event_type_count=len(event_types),
        role_count=len(roles),
        trigger_candidate_count=trigger_candidates,
        argument_candidate_count=argument_candidates,
    )


_BOOL_KEYS = ("multi_token_triggers", "include_time", "include_value", "include_pronoun")
_VALUE_KEYS = {
    "entity_mention_mode": MENTION_MODES,
    "multi_token_policy": MULTI_TOKEN_POLICIES,
}


def parse_variant_config(text: str) -> VariantConfig:
    """Parses a flat `key = value` config; `#` starts a comment. Unknown
    keys are errors; missing keys default to the identity configuration."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"variant config line {lineno}: expected 'key = value'")
        key, _, value = (part.strip() for part in stripped.partition("="))
        if key in values:
            raise ConfigError(f"variant config line {lineno}: duplicate key {key!r}")
        if key in _BOOL_KEYS:
            lowered = value.lower()
            if lowered not in ("true", "false"):
                raise ConfigError(
                    f"variant config line {lineno}: {key} must be true or false, got {value!r}"
                )
            values[key] = lowered == "true"
        elif key in _VALUE_KEYS:
            if value not in _VALUE_KEYS[key]:
                raise ConfigError(
                    f"variant config line {lineno}: {key} must be one of {_VALUE_KEYS[key]}, got {value!r}"
                )
            values[key] = value
        else:
            raise ConfigError(f"variant config line {lineno}: unknown key {key!r}")
    return VariantConfig(**values)


def load_variant_config(path) -> VariantConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_variant_config(f.read())
