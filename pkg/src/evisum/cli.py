"""Command-line orchestration over the documented file formats.

Every subcommand is a pure function of its inputs and flags; reruns with
identical inputs produce identical outputs. Timestamps appear only in
annotation exports.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import annotation, corpus, input_builder, metrics, stats, summarizer, tagger


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad JSON: {exc}") from None
    return rows


def _write_jsonl(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _resolve(args: argparse.Namespace, key: str, default):
    """Flag wins over config file wins over default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return args.run_config.get(key.replace("_", "-"), args.run_config.get(key, default))


# -- corpus -----------------------------------------------------------------


def cmd_corpus_validate(args: argparse.Namespace) -> int:
    reviews = corpus.load_corpus(args.path)
    studies = sum(len(r.studies) for r in reviews)
    print(f"ok: {len(reviews)} reviews, {studies} studies")
    return 0


def cmd_corpus_split(args: argparse.Namespace) -> int:
    reviews = corpus.load_corpus(args.path)
    spec = corpus.SplitSpec(
        fractions=(args.train, args.dev, args.test),
        seed=_resolve(args, "seed", 0),
    )
    train, dev, test = corpus.split_corpus(reviews, spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("dev", dev), ("test", test)):
        corpus.save_corpus(part, out / f"{name}.jsonl")
        print(f"{name}: {len(part)} reviews")
    return 0


# -- tagging ------------------------------------------------------------------


def cmd_tag(args: argparse.Namespace) -> int:
    reviews = corpus.load_corpus(args.path)
    provider = None
    if args.endpoint:
        provider = tagger.RemoteSpanProvider(args.endpoint)
    rows = []
    for review in reviews:
        for study in review.studies:
            tags = tagger.tag_spans(study, provider)
            row = tagger.tag_set_to_dict(tags)
            row["review_id"] = review.review_id
            rows.append(row)
    rows.sort(key=lambda r: (r["review_id"], r["study_id"]))
    _write_jsonl(args.out, rows)
    print(f"tagged {len(rows)} studies -> {args.out}")
    return 0


def _load_tags(path: str | None) -> dict[str, dict[str, tagger.TagSet]]:
    if path is None:
        return {}
    by_review: dict[str, dict[str, tagger.TagSet]] = {}
    for row in _read_jsonl(path):
        tags = tagger.tag_set_from_dict(row)
        by_review.setdefault(row["review_id"], {})[tags.study_id] = tags
    return by_review


# -- encoder inputs ------------------------------------------------------------


def _build_config(args: argparse.Namespace) -> input_builder.BuildConfig:
    return input_builder.BuildConfig(
        token_budget=_resolve(args, "budget", 1024),
        seed=_resolve(args, "seed", 0),
        decorate=bool(args.decorate),
        sort_by_evidence=bool(args.sort_evidence),
    )


def cmd_build_inputs(args: argparse.Namespace) -> int:
    reviews = corpus.load_corpus(args.path)
    cfg = _build_config(args)
    tags = _load_tags(args.tags)
    if cfg.decorate and not tags:
        tags = {
            r.review_id: {s.study_id: tagger.tag_spans(s) for s in r.studies}
            for r in reviews
        }
    rows = []
    for review in reviews:
        enc = input_builder.assemble(review, cfg, tags.get(review.review_id))
        rows.append(input_builder.input_to_dict(enc))
    rows.sort(key=lambda r: r["review_id"])
    _write_jsonl(args.out, rows)
    print(f"built {len(rows)} inputs -> {args.out}")
    return 0


# -- summarization -------------------------------------------------------------


def _make_backend(args: argparse.Namespace) -> summarizer.SummarizerBackend:
    backend = _resolve(args, "backend", "baseline")
    if backend == "baseline":
        return summarizer.BaselineBackend(cue_scoring=True)
    if backend == "lead":
        return summarizer.BaselineBackend(cue_scoring=False)
    if backend == "remote":
        endpoint = _resolve(args, "endpoint", None)
        if not endpoint:
            raise ValueError("--endpoint required for the remote backend")
        return summarizer.RemoteBackend(endpoint)
    raise ValueError(f"unknown backend {backend!r}")


def cmd_summarize(args: argparse.Namespace) -> int:
    inputs = [input_builder.input_from_dict(d) for d in _read_jsonl(args.inputs)]
    backend = _make_backend(args)
    params = summarizer.DecodingParams(
        beam_size=args.beam_size,
        min_length=args.min_length,
        no_repeat_ngram=args.no_repeat_ngram,
        max_length=args.max_length,
    )
    rows = []
    for enc in inputs:
        summary = summarizer.generate(enc, backend, params, system_id=args.system_id)
        rows.append(summarizer.summary_to_dict(summary))
    rows.sort(key=lambda r: (r["review_id"], r["system_id"]))
    _write_jsonl(args.out, rows)
    print(f"summarized {len(rows)} inputs -> {args.out}")
    return 0


# -- classifiers ----------------------------------------------------------------


def _load_training(path: str | Path) -> list[tuple[str, str]]:
    return [(row["text"], row["label"]) for row in _read_jsonl(path)]


def _bundled_training(name: str) -> Path:
    from importlib import resources

    return Path(str(resources.files("evisum.data.training").joinpath(f"{name}.jsonl")))


def cmd_train_classifier(args: argparse.Namespace) -> int:
    labels = tuple(args.labels.split(","))
    if len(labels) != 2:
        raise ValueError("--labels must name exactly two labels: negative,positive")
    examples = _load_training(args.data)
    clf = metrics.train_classifier(
        examples,
        labels,
        seed=_resolve(args, "seed", 0),
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        l2=args.l2,
    )
    metrics.save_classifier(clf, args.out)
    correct = sum(1 for text, label in examples if clf.predict(text) == label)
    print(f"trained on {len(examples)} examples, accuracy {correct / len(examples):.3f} -> {args.out}")
    return 0


def _default_classifiers(seed: int) -> tuple[metrics.LinearTextClassifier, metrics.LinearTextClassifier]:
    punchline = metrics.train_classifier(
        _load_training(_bundled_training("punchline")),
        ("not_punchline", "punchline"),
        seed=seed,
    )
    direction = metrics.train_classifier(
        _load_training(_bundled_training("direction")),
        ("no_sig_diff", "sig_diff"),
        seed=seed,
    )
    return punchline, direction


# -- evaluation -------------------------------------------------------------------


def _reference_map(path: str | Path) -> dict[str, str]:
    return {r.review_id: r.target_summary for r in corpus.load_corpus(path)}


def cmd_eval_rouge(args: argparse.Namespace) -> int:
    refs = _reference_map(args.references)
    rows = []
    for cand in _read_jsonl(args.candidates):
        rid = cand["review_id"]
        if rid not in refs:
            raise ValueError(f"candidate review {rid!r} not in references")
        score = metrics.rouge_l(cand["text"], refs[rid])
        rows.append(
            {
                "review_id": rid,
                "system_id": cand.get("system_id", ""),
                "precision": score.precision,
                "recall": score.recall,
                "f": score.f,
            }
        )
    rows.sort(key=lambda r: (r["system_id"], r["review_id"]))
    for row in rows:
        print(f"{row['system_id']}\t{row['review_id']}\tF = {row['f']:.4f}")
    mean = sum(r["f"] for r in rows) / len(rows) if rows else 0.0
    print(f"mean ROUGE-L F: {mean:.4f}")
    if args.out:
        _write_jsonl(args.out, rows)
    return 0


def cmd_eval_findings_jsd(args: argparse.Namespace) -> int:
    refs = _reference_map(args.references)
    if args.punchline_model and args.direction_model:
        punchline = metrics.load_classifier(args.punchline_model)
        direction = metrics.load_classifier(args.direction_model)
    else:
        punchline, direction = _default_classifiers(_resolve(args, "seed", 0))
    rows = []
    for cand in _read_jsonl(args.candidates):
        rid = cand["review_id"]
        if rid not in refs:
            raise ValueError(f"candidate review {rid!r} not in references")
        value = metrics.findings_jsd(cand["text"], refs[rid], punchline, direction)
        rows.append(
            {"review_id": rid, "system_id": cand.get("system_id", ""), "jsd": value}
        )
    rows.sort(key=lambda r: (r["system_id"], r["review_id"]))
    for row in rows:
        print(f"{row['system_id']}\t{row['review_id']}\tJSD = {row['jsd']:.4f}")
    mean = sum(r["jsd"] for r in rows) / len(rows) if rows else 0.0
    print(f"mean findings-JSD: {mean:.4f}")
    if args.out:
        _write_jsonl(args.out, rows)
    return 0


# -- stats -------------------------------------------------------------------------


def cmd_stats_kappa(args: argparse.Namespace) -> int:
    rows = [
        r
        for r in _read_jsonl(args.export)
        if r["question"] == args.question
    ]
    annotators = sorted({r["annotator_id"] for r in rows})
    if args.annotators:
        wanted = args.annotators.split(",")
        if len(wanted) != 2:
            raise ValueError("--annotators takes exactly two ids")
        annotators = wanted
    if len(annotators) != 2:
        raise ValueError(
            f"need exactly two annotators, found {len(annotators)}; use --annotators"
        )
    a, b = annotators
    by_item: dict[tuple[str, str], dict[str, int]] = {}
    for r in rows:
        if r["annotator_id"] in (a, b):
            key = (r["review_id"], r["system_id"])
            by_item.setdefault(key, {})[r["annotator_id"]] = int(r["value"])
    pairs = [
        (vals[a], vals[b]) for _, vals in sorted(by_item.items()) if a in vals and b in vals
    ]
    if not pairs:
        raise ValueError("no items rated by both annotators")
    scale = annotation.SCALE_QUESTIONS.get(args.question)
    if scale is None:
        raise ValueError(f"{args.question!r} is not an ordinal question")
    ratings = stats.PairedRatings(min(scale), max(scale), tuple(pairs))
    kappa = stats.weighted_kappa(ratings)
    print(f"weighted kappa ({args.question}, {a} vs {b}, n={len(pairs)}): {kappa:.4f}")
    return 0


def _aligned_values(
    path_a: str, key_a: str, path_b: str, key_b: str
) -> tuple[list[float], list[float]]:
    rows_a = {r["review_id"]: float(r[key_a]) for r in _read_jsonl(path_a)}
    rows_b = {r["review_id"]: float(r[key_b]) for r in _read_jsonl(path_b)}
    shared = sorted(set(rows_a) & set(rows_b))
    if not shared:
        raise ValueError("no shared review_ids between the two files")
    return [rows_a[rid] for rid in shared], [rows_b[rid] for rid in shared]


def cmd_stats_ttest(args: argparse.Namespace) -> int:
    x, y = _aligned_values(args.a, args.a_key, args.b, args.b_key)
    t, p = stats.paired_ttest(x, y)
    print(f"paired t-test (n={len(x)}): t = {t:.4f}, p = {p:.6f}")
    return 0


def cmd_stats_regress(args: argparse.Namespace) -> int:
    xs, ys = _aligned_values(args.x, args.x_key, args.y, args.y_key)
    result = stats.ols_regress(xs, ys)
    print(
        f"OLS (n={result.n}): slope = {result.slope:.4f} "
        f"(95% CI {result.slope_ci_low:.4f} to {result.slope_ci_high:.4f}), "
        f"p = {result.p_value:.6f}, R^2 = {result.r_squared:.4f}"
    )
    return 0


# -- annotation -----------------------------------------------------------------------


def _build_store(args: argparse.Namespace) -> annotation.AnnotationStore:
    reviews = corpus.load_corpus(args.corpus)
    summaries = [summarizer.summary_from_dict(d) for d in _read_jsonl(args.summaries)]
    config = annotation.AnnotationConfig.load(args.annotation_config)
    return annotation.AnnotationStore(config, reviews, summaries, args.journal)


def cmd_annotate_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .webapp import create_app

    store = _build_store(args)
    app = create_app(store, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_annotate_export(args: argparse.Namespace) -> int:
    store = _build_store(args)
    config = store.config
    text = store.export_ndjson(config.admin_token)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"exported {text.count(chr(10))} rows -> {args.out}")
    return 0


# -- pipeline ----------------------------------------------------------------------------


def cmd_pipeline(args: argparse.Namespace) -> int:
    seed = _resolve(args, "seed", 0)
    budget = _resolve(args, "budget", 1024)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = args.corpus or str(corpus.toy_corpus_path())

    reviews = corpus.load_corpus(corpus_path)
    print(f"corpus: {len(reviews)} reviews")
    train, dev, test = corpus.split_corpus(
        reviews, corpus.SplitSpec(fractions=(0.6, 0.2, 0.2), seed=seed)
    )
    print(f"split: train {len(train)}, dev {len(dev)}, test {len(test)}")

    grid = summarizer.variant_grid(budget=budget, seed=seed)
    eval_reviews = dev + test
    split_of = {r.review_id: "dev" for r in dev}
    split_of.update({r.review_id: "test" for r in test})

    summaries, failures = summarizer.run_systems(eval_reviews, grid, jobs=args.jobs)
    for failure in failures:
        print(f"failed cell: {failure.system_id} / {failure.review_id}: {failure.error}")
    rows = sorted(
        (summarizer.summary_to_dict(s) for s in summaries),
        key=lambda r: (r["review_id"], r["system_id"]),
    )
    _write_jsonl(out_dir / "summaries.jsonl", rows)
    print(f"generated {len(rows)} summaries ({len(failures)} failures)")

    punchline, direction = _default_classifiers(seed)
    refs = {r.review_id: r.target_summary for r in eval_reviews}
    scores: dict[str, dict[str, list[float]]] = {}
    jsd_by_cell: list[tuple[str, str, float, float]] = []
    for s in summaries:
        ref = refs[s.review_id]
        rouge = metrics.rouge_l(s.text, ref).f
        fjsd = metrics.findings_jsd(s.text, ref, punchline, direction)
        split = split_of[s.review_id]
        bucket = scores.setdefault(s.system_id, {})
        bucket.setdefault(f"rouge_l_{split}", []).append(rouge)
        bucket.setdefault(f"jsd_{split}", []).append(fjsd)
        jsd_by_cell.append((s.system_id, s.review_id, rouge, fjsd))

    def mean(values: list[float]) -> float:
        return sum(values) / len(values) if values else 0.0

    report = {}
    order = [cfg.system_id for cfg in grid]
    header = f"{'system':<24}{'R-L dev':>10}{'R-L test':>10}{'JSD dev':>10}{'JSD test':>10}"
    print(header)
    print("-" * len(header))
    for system_id in order:
        bucket = scores.get(system_id, {})
        row = {
            "rouge_l_dev": mean(bucket.get("rouge_l_dev", [])),
            "rouge_l_test": mean(bucket.get("rouge_l_test", [])),
            "findings_jsd_dev": mean(bucket.get("jsd_dev", [])),
            "findings_jsd_test": mean(bucket.get("jsd_test", [])),
        }
        report[system_id] = row
        print(
            f"{system_id:<24}{row['rouge_l_dev']:>10.4f}{row['rouge_l_test']:>10.4f}"
            f"{row['findings_jsd_dev']:>10.4f}{row['findings_jsd_test']:>10.4f}"
        )

    # paired comparison between the plain and fully augmented systems
    base_f = {rid: r for sid, rid, r, _ in jsd_by_cell if sid == order[0]}
    full_f = {rid: r for sid, rid, r, _ in jsd_by_cell if sid == order[-1]}
    shared = sorted(set(base_f) & set(full_f))
    stats_block = {}
    if len(shared) >= 2:
        try:
            t, p = stats.paired_ttest(
                [full_f[rid] for rid in shared], [base_f[rid] for rid in shared]
            )
            stats_block["ttest_rouge_full_vs_base"] = {"t": t, "p": p}
            print(f"paired t-test ROUGE-L {order[-1]} vs {order[0]}: t = {t:.4f}, p = {p:.6f}")
        except ValueError as exc:
            print(f"paired t-test skipped: {exc}")
    all_rouge = [r for _, _, r, _ in jsd_by_cell]
    all_jsd = [j for _, _, _, j in jsd_by_cell]
    if len(all_rouge) >= 3:
        try:
            reg = stats.ols_regress(all_jsd, all_rouge)
            stats_block["regress_rouge_on_jsd"] = {
                "slope": reg.slope,
                "ci": [reg.slope_ci_low, reg.slope_ci_high],
                "p": reg.p_value,
                "r_squared": reg.r_squared,
            }
            print(
                f"OLS ROUGE-L on findings-JSD: slope = {reg.slope:.4f}, p = {reg.p_value:.6f}"
            )
        except ValueError as exc:
            print(f"regression skipped: {exc}")

    report_path = out_dir / "report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump({"systems": report, "stats": stats_block}, fh, sort_keys=True, indent=2)
    print(f"report -> {report_path}")
    return 0


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evisum")
    parser.add_argument("--config", help="JSON file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p_corpus = sub.add_parser("corpus", help="corpus management")
    corpus_sub = p_corpus.add_subparsers(dest="subcommand", required=True)
    p = corpus_sub.add_parser("validate")
    p.add_argument("path")
    p.set_defaults(func=cmd_corpus_validate)
    p = corpus_sub.add_parser("split")
    p.add_argument("path")
    p.add_argument("--train", type=float, default=0.8)
    p.add_argument("--dev", type=float, default=0.1)
    p.add_argument("--test", type=float, default=0.1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_corpus_split)

    p = sub.add_parser("tag", help="tag spans in study abstracts")
    p.add_argument("path")
    p.add_argument("--out", required=True)
    p.add_argument("--endpoint", help="remote tagging service URL")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("build-inputs", help="assemble encoder inputs")
    p.add_argument("path")
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--decorate", action="store_true")
    p.add_argument("--sort-evidence", action="store_true")
    p.add_argument("--tags", help="tag file from the tag subcommand")
    p.set_defaults(func=cmd_build_inputs)

    p = sub.add_parser("summarize", help="generate summaries")
    p.add_argument("--inputs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=["baseline", "lead", "remote"])
    p.add_argument("--endpoint")
    p.add_argument("--system-id", default="system")
    p.add_argument("--beam-size", type=int, default=4)
    p.add_argument("--min-length", type=int, default=65)
    p.add_argument("--no-repeat-ngram", type=int, default=3)
    p.add_argument("--max-length", type=int, default=200)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("train-classifier", help="train a text classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--labels", required=True, help="negative,positive")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--l2", type=float, default=1e-4)
    p.set_defaults(func=cmd_train_classifier)

    p_eval = sub.add_parser("eval", help="score summaries")
    eval_sub = p_eval.add_subparsers(dest="subcommand", required=True)
    p = eval_sub.add_parser("rouge")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_rouge)
    p = eval_sub.add_parser("findings-jsd")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--punchline-model")
    p.add_argument("--direction-model")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_findings_jsd)

    p_stats = sub.add_parser("stats", help="statistics over exports and scores")
    stats_sub = p_stats.add_subparsers(dest="subcommand", required=True)
    p = stats_sub.add_parser("kappa")
    p.add_argument("--export", required=True)
    p.add_argument("--question", default="factual_agreement")
    p.add_argument("--annotators", help="two comma-separated annotator ids")
    p.set_defaults(func=cmd_stats_kappa)
    p = stats_sub.add_parser("ttest")
    p.add_argument("--a", required=True)
    p.add_argument("--a-key", default="f")
    p.add_argument("--b", required=True)
    p.add_argument("--b-key", default="f")
    p.set_defaults(func=cmd_stats_ttest)
    p = stats_sub.add_parser("regress")
    p.add_argument("--x", required=True)
    p.add_argument("--x-key", default="jsd")
    p.add_argument("--y", required=True)
    p.add_argument("--y-key", default="value")
    p.set_defaults(func=cmd_stats_regress)

    p_annot = sub.add_parser("annotate", help="blinded annotation service")
    annot_sub = p_annot.add_subparsers(dest="subcommand", required=True)
    p = annot_sub.add_parser("serve")
    p.add_argument("--corpus", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--annotation-config", dest="annotation_config", required=True)
    p.add_argument("--journal", required=True)
    p.add_argument("--frontend", help="built frontend directory to serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_annotate_serve)
    p = annot_sub.add_parser("export")
    p.add_argument("--corpus", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--annotation-config", dest="annotation_config", required=True)
    p.add_argument("--journal", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_annotate_export)

    p = sub.add_parser("pipeline", help="full toy-corpus experiment grid")
    p.add_argument("--corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_pipeline)

    return parser


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.run_config = _load_config(args.config)
    try:
        return args.func(args)
    except (
        corpus.CorpusError,
        annotation.AnnotationError,
        input_builder.BudgetError,
        input_builder.DecorationError,
        summarizer.BackendError,
        tagger.ProviderError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
