"""Command-line interface.

Subcommands: stats, score, standardize, compare, trigger-store {put,get,list}.
Exit codes are stable: 0 success, 1 evaluation-time error, 2
configuration/validation error. Every run is deterministic: no sampling
happens anywhere, report files embed the resolved configuration and the
corpus/variant fingerprint, and repeated runs produce byte-identical
outputs regardless of --jobs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, ParseError, ToolkitError, ValidationError
from .ingest import PARADIGMS, load_corpus, load_predictions
from .jsonio import dump_jsonl, format_report
from .metrics import (
    CONVENTION_MODERN,
    CONVENTIONS,
    EAE_MATCH_BY_TYPE,
    EAE_MATCH_MODES,
    MODE_GOLD_TRIGGER,
    MODE_PIPELINE,
    MODES,
    EvalReport,
)
from .pipeline import (
    TriggerContext,
    TriggerStore,
    corpus_fingerprint,
    evaluate,
    load_trigger_file,
    parse_trigger_file,
    serialize_trigger_context,
)
from .standardize import (
    STRAY_I_MODES,
    STRAY_I_OPEN,
    TRIGGER_POLICY_EVERY_TOKEN,
    TRIGGER_POLICY_SPANS_UP_TO_K,
    TRIGGER_POLICIES,
    CandidatePolicy,
    StandardizeOptions,
    serialize_standardized,
    standardize_predictions,
)
from .variants import (
    MULTI_TOKEN_POLICIES,
    VariantConfig,
    apply_variant,
    compute_stats,
    load_variant_config,
)


def _err(message) -> None:
    print(f"eescore: error: {message}", file=sys.stderr)


def _write_atomic(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.parent / (path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _require_file(path, what: str) -> None:
    if not Path(path).is_file():
        raise ConfigError(f"{what} {path!r} does not exist")


# ---------------------------------------------------------------------------
# shared flags


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="corpus JSONL file")
    p.add_argument("--variant", help="preprocessing-variant config file (default: keep everything)")
    p.add_argument(
        "--multi_token_policy",
        choices=MULTI_TOKEN_POLICIES,
        help="override the variant's multi-token trigger handling",
    )


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--trigger-policy",
        choices=TRIGGER_POLICIES,
        default=TRIGGER_POLICY_EVERY_TOKEN,
        help="trigger candidate enumeration",
    )
    p.add_argument("--k", type=int, help="max span length for every_span_up_to_k")


def _add_standardize_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--stray_i", choices=STRAY_I_MODES, default=STRAY_I_OPEN,
                   help="how to decode a stray I tag")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (output is identical)")


def _load_variant(args) -> VariantConfig:
    if args.variant:
        _require_file(args.variant, "variant config")
        cfg = load_variant_config(args.variant)
    else:
        cfg = VariantConfig()
    if getattr(args, "multi_token_policy", None):
        cfg = replace(cfg, multi_token_policy=args.multi_token_policy)
    return cfg


def _load_corpus_checked(args):
    _require_file(args.corpus, "corpus")
    try:
        return load_corpus(args.corpus)
    except (ParseError, ValidationError) as exc:
        # data the run cannot even start from: configuration/validation class
        raise ConfigError(f"corpus {args.corpus}: {exc}") from None


def _policy(args) -> CandidatePolicy:
    if args.trigger_policy == TRIGGER_POLICY_SPANS_UP_TO_K:
        if args.k is None:
            raise ConfigError("--k is required with --trigger-policy every_span_up_to_k")
        if args.k < 1:
            raise ConfigError("--k must be >= 1")
        return CandidatePolicy(trigger_policy=TRIGGER_POLICY_SPANS_UP_TO_K, k=args.k)
    if args.k is not None:
        raise ConfigError("--k only applies to --trigger-policy every_span_up_to_k")
    return CandidatePolicy()


# ---------------------------------------------------------------------------
# stats


def cmd_stats(args) -> int:
    policy = _policy(args)
    cfg = _load_variant(args)
    corpus = _load_corpus_checked(args)
    applied, report = apply_variant(corpus, cfg)
    stats = compute_stats(applied, policy)
    payload = stats.as_dict()
    payload["removed_arguments"] = report.removed_arguments
    payload["reduced_triggers"] = report.reduced_triggers
    text = format_report(payload)
    if args.output:
        _write_atomic(args.output, text.encode("utf-8"))
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# score


def _resolved_config(args, cfg: VariantConfig, policy: CandidatePolicy) -> dict:
    return {
        "subcommand": args.command,
        "corpus": args.corpus,
        "variant": cfg.as_dict(),
        "mode": getattr(args, "mode", None),
        "convention": getattr(args, "convention", None),
        "ed_predictions": getattr(args, "ed_predictions", None),
        "ed_paradigm": getattr(args, "ed_paradigm", None),
        "eae_predictions": getattr(args, "eae_predictions", None),
        "eae_paradigm": getattr(args, "eae_paradigm", None),
        "triggers": getattr(args, "triggers", None),
        "store": getattr(args, "store", None),
        "producer": getattr(args, "producer", None),
        "trigger_policy": policy.trigger_policy,
        "k": policy.k,
        "stray_i": getattr(args, "stray_i", None),
        "eae_match": getattr(args, "eae_match", None),
        "standardize": getattr(args, "standardize", True),
    }


def _format_table(ed: EvalReport | None, eae: EvalReport | None) -> str:
    lines = [f"{'Task':<6}{'P':>8}{'R':>8}{'F1':>8}"]
    for name, rep in (("ED", ed), ("EAE", eae)):
        if rep is not None:
            lines.append(
                f"{name:<6}{rep.precision * 100:>8.1f}{rep.recall * 100:>8.1f}{rep.f1 * 100:>8.1f}"
            )
    return "\n".join(lines) + "\n"


def _validate_score_flags(args) -> None:
    if not args.ed_predictions and not args.eae_predictions:
        raise ConfigError("provide --ed-predictions and/or --eae-predictions")
    if bool(args.ed_predictions) != bool(args.ed_paradigm):
        raise ConfigError("--ed-predictions and --ed-paradigm must be given together")
    if bool(args.eae_predictions) != bool(args.eae_paradigm):
        raise ConfigError("--eae-predictions and --eae-paradigm must be given together")
    if args.triggers and args.store:
        raise ConfigError("--triggers and --store are mutually exclusive")
    if args.mode == MODE_GOLD_TRIGGER and (args.triggers or args.store):
        raise ConfigError("--triggers/--store only apply to --mode pipeline")
    if args.mode == MODE_PIPELINE and args.eae_predictions and not (
        args.ed_predictions or args.triggers or args.store
    ):
        raise ConfigError(
            "pipeline mode requires predicted triggers: provide --ed-predictions, --triggers or --store"
        )
    if not args.standardize:
        if args.ed_paradigm == "CG" or args.eae_paradigm == "CG":
            raise ConfigError(
                "generation predictions cannot be scored without --standardize "
                "(their mentions carry no positions)"
            )


def _pipeline_context(args, corpus, fingerprint: str) -> TriggerContext | None:
    if args.triggers:
        _require_file(args.triggers, "trigger file")
        return load_trigger_file(args.triggers, corpus)
    if args.store:
        found = TriggerStore(args.store).get(
            Path(args.corpus).name, fingerprint, getattr(args, "producer", None)
        )
        if found is None:
            raise ToolkitError(
                f"no trigger-store entry for corpus {Path(args.corpus).name!r} and the "
                f"current variant fingerprint {fingerprint[:12]}... (stale or missing entry)"
            )
        entry, payload = found
        return parse_trigger_file(payload, corpus, source=f"store:{entry.producer}")
    return None


def cmd_score(args) -> int:
    _validate_score_flags(args)
    policy = _policy(args)
    cfg = _load_variant(args)
    corpus_raw = _load_corpus_checked(args)
    fingerprint = corpus_fingerprint(corpus_raw, cfg)
    corpus, _ = apply_variant(corpus_raw, cfg)
    options = StandardizeOptions(stray_i=args.stray_i)

    ed_pred = None
    if args.ed_predictions:
        _require_file(args.ed_predictions, "ED prediction file")
        ed_pred = load_predictions(args.ed_predictions, args.ed_paradigm, corpus)
    eae_pred = None
    if args.eae_predictions:
        _require_file(args.eae_predictions, "EAE prediction file")
        eae_pred = load_predictions(args.eae_predictions, args.eae_paradigm, corpus)

    trigger_context = None
    if args.mode == MODE_PIPELINE:
        trigger_context = _pipeline_context(args, corpus, fingerprint)

    result = evaluate(
        corpus,
        eae_pred,
        mode=args.mode,
        convention=args.convention,
        ed_pred=ed_pred,
        trigger_context=trigger_context,
        policy=policy,
        options=options,
        eae_match=args.eae_match,
        standardize=args.standardize,
        jobs=args.jobs,
    )

    payload = {
        "config": _resolved_config(args, cfg, policy),
        "fingerprint": fingerprint,
        "ed": result.ed_report.as_dict() if result.ed_report else None,
        "eae": result.eae_report.as_dict() if result.eae_report else None,
    }
    report_text = format_report(payload)
    _write_atomic(args.output, report_text.encode("utf-8"))

    table = _format_table(result.ed_report, result.eae_report)
    print(table, end="")
    if args.table:
        _write_atomic(args.table, table.encode("utf-8"))

    if args.dump_discards:
        lines = []
        for std in (result.ed_standardized, result.eae_standardized):
            if std is None:
                continue
            for record in std:
                for d in record.discarded:
                    row = {"doc_id": record.doc_id, "task": record.task}
                    if record.anchor is not None:
                        row["anchor"] = {
                            "trigger": record.anchor.trigger.as_pair(),
                            "event_type": record.anchor.event_type,
                        }
                    row["reason"] = d.reason
                    row["original"] = d.original
                    lines.append(row)
        _write_atomic(args.dump_discards, dump_jsonl(lines))
    return 0


# ---------------------------------------------------------------------------
# standardize


def cmd_standardize(args) -> int:
    policy = _policy(args)
    cfg = _load_variant(args)
    corpus = _load_corpus_checked(args)
    corpus, _ = apply_variant(corpus, cfg)
    _require_file(args.predictions, "prediction file")
    predictions = load_predictions(args.predictions, args.paradigm, corpus)
    standardized = standardize_predictions(
        predictions, corpus, policy, StandardizeOptions(stray_i=args.stray_i), jobs=args.jobs
    )
    _write_atomic(args.output, serialize_standardized(standardized))
    return 0


# ---------------------------------------------------------------------------
# compare


def _load_report(path) -> dict:
    _require_file(path, "report file")
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"report {path}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or "fingerprint" not in obj:
        raise ConfigError(f"report {path}: not a score report (missing fingerprint)")
    return obj


def cmd_compare(args) -> int:
    a = _load_report(args.report_a)
    b = _load_report(args.report_b)
    if a["fingerprint"] != b["fingerprint"]:
        raise ConfigError(
            "reports were produced from different corpus/variant fingerprints: "
            f"{a['fingerprint'][:12]}... vs {b['fingerprint'][:12]}..."
        )
    rows = []
    for task_key, task_name in (("ed", "ED"), ("eae", "EAE")):
        ra, rb = a.get(task_key), b.get(task_key)
        if ra is None or rb is None:
            continue
        deltas = [
            (rb[metric] - ra[metric]) * 100 for metric in ("precision", "recall", "f1")
        ]
        rows.append((task_name, deltas))
    if not rows:
        raise ConfigError("the two reports share no task to compare")
    lines = [f"{'Task':<6}{'ΔP':>8}{'ΔR':>8}{'ΔF1':>8}"]
    for task_name, (dp, dr, df) in rows:
        lines.append(f"{task_name:<6}{dp:>+8.1f}{dr:>+8.1f}{df:>+8.1f}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.output:
        _write_atomic(args.output, text.encode("utf-8"))
    return 0


# ---------------------------------------------------------------------------
# trigger-store


def cmd_store_put(args) -> int:
    policy = _policy(args)
    cfg = _load_variant(args)
    corpus_raw = _load_corpus_checked(args)
    fingerprint = corpus_fingerprint(corpus_raw, cfg)
    corpus, _ = apply_variant(corpus_raw, cfg)
    _require_file(args.predictions, "ED prediction file")
    predictions = load_predictions(args.predictions, args.paradigm, corpus)
    result = evaluate(
        corpus,
        None,
        mode=MODE_PIPELINE,
        ed_pred=predictions,
        policy=policy,
        options=StandardizeOptions(stray_i=args.stray_i),
        jobs=args.jobs,
    )
    trigger_bytes = serialize_trigger_context(result.trigger_context)
    entry = TriggerStore(args.store).put(
        corpus_id=Path(args.corpus).name,
        fingerprint=fingerprint,
        producer=args.producer,
        trigger_bytes=trigger_bytes,
        ed_report=result.ed_report,
    )
    print(f"stored {entry.file} (ED F1 {entry.ed_f1 * 100:.1f})")
    return 0


def cmd_store_get(args) -> int:
    cfg = _load_variant(args)
    corpus = _load_corpus_checked(args)
    fingerprint = corpus_fingerprint(corpus, cfg)
    found = TriggerStore(args.store).get(Path(args.corpus).name, fingerprint, args.producer)
    if found is None:
        _err(
            f"no trigger-store entry for corpus {Path(args.corpus).name!r} and fingerprint "
            f"{fingerprint[:12]}..."
        )
        return 1
    entry, payload = found
    _write_atomic(args.output, payload)
    print(f"{entry.producer}\t{entry.file}\tED F1 {entry.ed_f1 * 100:.1f}")
    return 0


def cmd_store_list(args) -> int:
    entries = TriggerStore(args.store).entries()
    for e in entries:
        print(f"{e.corpus_id}\t{e.fingerprint[:12]}\t{e.producer}\t{e.file}\t{e.ed_f1 * 100:.1f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eescore",
        description="Deterministic event-extraction evaluation: preprocessing variants, "
        "output standardization, gold-trigger and pipeline scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="dataset statistics under a preprocessing variant")
    _add_corpus_flags(p_stats)
    _add_policy_flags(p_stats)
    p_stats.add_argument("--output", help="write JSON stats here (default: stdout)")
    p_stats.set_defaults(func=cmd_stats)

    p_score = sub.add_parser("score", help="score predictions and write an evaluation report")
    _add_corpus_flags(p_score)
    _add_policy_flags(p_score)
    _add_standardize_flags(p_score)
    p_score.add_argument("--ed-predictions", help="trigger prediction JSONL")
    p_score.add_argument("--ed-paradigm", choices=PARADIGMS)
    p_score.add_argument("--eae-predictions", help="argument prediction JSONL")
    p_score.add_argument("--eae-paradigm", choices=PARADIGMS)
    p_score.add_argument("--mode", choices=MODES, default=MODE_GOLD_TRIGGER)
    p_score.add_argument("--convention", choices=CONVENTIONS, default=CONVENTION_MODERN)
    p_score.add_argument("--eae_match", choices=EAE_MATCH_MODES, default=EAE_MATCH_BY_TYPE)
    p_score.add_argument("--triggers", help="predicted-trigger JSONL for pipeline mode")
    p_score.add_argument("--store", help="trigger-store directory for pipeline mode")
    p_score.add_argument("--producer", help="trigger-store producer to use")
    p_score.add_argument(
        "--standardize",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="project predictions onto the candidate space before scoring",
    )
    p_score.add_argument("--dump-discards", dest="dump_discards",
                         help="write the discard ledger JSONL here")
    p_score.add_argument("--output", required=True, help="report JSON path")
    p_score.add_argument("--table", help="also write the plain-text table here")
    p_score.set_defaults(func=cmd_score)

    p_std = sub.add_parser("standardize", help="project predictions onto candidate space")
    _add_corpus_flags(p_std)
    _add_policy_flags(p_std)
    _add_standardize_flags(p_std)
    p_std.add_argument("--predictions", required=True)
    p_std.add_argument("--paradigm", choices=PARADIGMS, required=True)
    p_std.add_argument("--output", required=True, help="standardized JSONL path")
    p_std.set_defaults(func=cmd_standardize)

    p_cmp = sub.add_parser("compare", help="delta table between two score reports")
    p_cmp.add_argument("report_a")
    p_cmp.add_argument("report_b")
    p_cmp.add_argument("--output", help="also write the delta table here")
    p_cmp.set_defaults(func=cmd_compare)

    p_store = sub.add_parser("trigger-store", help="manage off-the-shelf predicted triggers")
    store_sub = p_store.add_subparsers(dest="store_command", required=True)

    p_put = store_sub.add_parser("put", help="score ED predictions and store the triggers")
    _add_corpus_flags(p_put)
    _add_policy_flags(p_put)
    _add_standardize_flags(p_put)
    p_put.add_argument("--store", required=True)
    p_put.add_argument("--predictions", required=True, help="trigger prediction JSONL")
    p_put.add_argument("--paradigm", choices=PARADIGMS, required=True)
    p_put.add_argument("--producer", required=True, help="name of the producing model/run")
    p_put.set_defaults(func=cmd_store_put)

    p_get = store_sub.add_parser("get", help="fetch stored triggers for a corpus/variant")
    _add_corpus_flags(p_get)
    p_get.add_argument("--store", required=True)
    p_get.add_argument("--producer")
    p_get.add_argument("--output", required=True, help="write the trigger JSONL here")
    p_get.set_defaults(func=cmd_store_get)

    p_list = store_sub.add_parser("list", help="list store entries")
    p_list.add_argument("--store", required=True)
    p_list.set_defaults(func=cmd_store_list)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(exc)
        return 2
    except ToolkitError as exc:
        _err(exc)
        return 1
    except OSError as exc:
        _err(exc)
        return 2


def entry_point() -> None:
    raise SystemExit(main())
