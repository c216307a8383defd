"""The ``stylo`` command line: every stage of the toolkit as a subcommand.

Subcommands mirror the processing stages: ingest, normalize, vocab,
vectorize, train, predict, explain, index, search, detect, eval, pr-curve,
freq, and a ``pipeline`` command that runs the whole lost-material
procedure from one TOML config. All outputs are deterministic functions of
the inputs and the seed; provenance (tool version and input hashes) goes
to stderr, never into output files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, classifier, corpus, evaluation, features, pipeline, reuse
from .labels import ClassLabel, parse_label
from .normalize import NormalizationRules, default_rules, load_rules, normalize


class CliError(RuntimeError):
    pass


def _file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _log(message: str) -> None:
    print(f"stylo: {message}", file=sys.stderr)


def _log_provenance(args: argparse.Namespace) -> None:
    _log(f"version {__version__} (python {sys.version.split()[0]})")
    settings = {
        k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
    }
    digest = hashlib.sha256(repr(settings).encode("utf-8")).hexdigest()[:16]
    _log(f"run config hash {digest}: {settings}")


def _load_rules_arg(path: str | None) -> NormalizationRules:
    return load_rules(path) if path else default_rules()


def _default_thresholds() -> list[float]:
    return [round(0.05 * i, 2) for i in range(20)] + [1.0]


def _parse_thresholds(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


# ---------------------------------------------------------------------------
# Subcommand implementations


def cmd_ingest(args: argparse.Namespace) -> int:
    manifest = corpus.load_manifest(args.manifest) if args.manifest else corpus.default_manifest()
    result = corpus.ingest_directory(args.root, manifest)
    for warning in result.warnings:
        _log(f"warning: {warning}")
    corpus.write_jsonl(args.out, [corpus.document_to_json(d) for d in result.documents])
    _log(f"ingested {len(result.documents)} documents -> {args.out}")
    if args.segments_out:
        rules = _load_rules_arg(args.rules)
        segments = []
        for doc in result.documents:
            segments.extend(
                corpus.segment_document(
                    doc, rules=rules, block_size=args.block_size, drop_short=args.drop_short
                )
            )
        corpus.write_jsonl(args.segments_out, [corpus.segment_to_json(s) for s in segments])
        _log(f"segmented into {len(segments)} blocks -> {args.segments_out}")
    return 0


def cmd_normalize(args: argparse.Namespace) -> int:
    rules = _load_rules_arg(args.rules)
    raw = Path(args.infile).read_text(encoding="utf-8")
    first = next((line for line in raw.splitlines() if line.strip()), "")
    jsonl_mode = False
    if first.startswith("{"):
        try:
            jsonl_mode = "raw_text" in json.loads(first)
        except json.JSONDecodeError:
            jsonl_mode = False
    if jsonl_mode:
        docs = corpus.read_documents(args.infile)
        normalized = [corpus.normalize_document(d, rules) for d in docs]
        kept = [d for d in normalized if d is not None]
        if len(kept) < len(docs):
            _log(f"warning: {len(docs) - len(kept)} documents were empty after cleaning")
        corpus.write_jsonl(args.out, [corpus.document_to_json(d) for d in kept])
        _log(f"normalized {len(kept)} documents -> {args.out}")
    else:
        paragraphs = [normalize(p, rules) for p in raw.split("\n\n")]
        Path(args.out).write_text(
            "\n\n".join(p for p in paragraphs if p) + "\n", encoding="utf-8"
        )
        _log(f"normalized text -> {args.out}")
    return 0


def cmd_vocab(args: argparse.Namespace) -> int:
    segments = corpus.read_segments(args.segments)
    rules = _load_rules_arg(args.rules)
    vocab = features.build_vocab(
        segments,
        min_df=args.min_df,
        corpus_hash=_file_hash(args.segments),
        rules_hash=rules.content_hash(),
    )
    features.save_vocab(vocab, args.out)
    _log(f"vocabulary of {len(vocab)} n-grams (min_df={args.min_df}) -> {args.out}")
    return 0


def cmd_vectorize(args: argparse.Namespace) -> int:
    lines = []
    if args.tagged:
        tagged_segments = features.read_tagged_tsv(args.tagged)
        tag_vocab = features.build_tag_vocab(tagged_segments)
        for i, tagged in enumerate(tagged_segments):
            vec = features.aggregate_morph(tagged, tag_vocab)
            lines.append(features.feature_vector_to_json(args.tagged, i, vec))
    else:
        if not args.vocab or not args.segments:
            raise CliError("vectorize needs --vocab and --segments (or --tagged)")
        vocab = features.load_vocab(args.vocab)
        for seg in corpus.read_segments(args.segments):
            vec = features.vectorize(seg, vocab)
            lines.append(features.feature_vector_to_json(seg.doc_id, seg.seq, vec))
    corpus.write_jsonl(args.out, lines)
    _log(f"vectorized {len(lines)} segments -> {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    vocab = features.load_vocab(args.vocab)
    segments = corpus.read_segments(args.train)
    config = _train_config(args)
    x = [features.vectorize(s, vocab) for s in segments]
    y = [s.label for s in segments]
    weights = classifier.class_weights_balanced(corpus.class_counts(segments))
    model = classifier.train_logreg(
        x, y, weights, config, vocab=vocab, rules_hash=vocab.rules_hash
    )
    classifier.save_model(model, args.out)
    status = "converged" if model.converged else "NOT converged"
    _log(f"trained on {len(segments)} segments ({status}) -> {args.out}")
    return 0


def _train_config(args: argparse.Namespace) -> classifier.TrainConfig:
    values = {}
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            loaded = tomllib.load(fh)
        values.update(loaded.get("train", loaded))
    for key, flag in (
        ("l2_strength", "l2"),
        ("max_iterations", "max_iter"),
        ("convergence_tolerance", "tol"),
        ("seed", "seed"),
    ):
        override = getattr(args, flag, None)
        if override is not None:
            values[key] = override
    return classifier.TrainConfig(**values)


def cmd_predict(args: argparse.Namespace) -> int:
    vocab = features.load_vocab(args.vocab)
    model = classifier.load_model(args.model, vocab=vocab)
    segments = corpus.read_segments(args.segments)
    lines = []
    for seg in segments:
        pred = classifier.predict_proba(model, features.vectorize(seg, vocab))
        lines.append(pipeline.prediction_to_json(seg.doc_id, seg.seq, pred))
    corpus.write_jsonl(args.out, lines)
    _log(f"predicted {len(segments)} segments -> {args.out}")
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    vocab = features.load_vocab(args.vocab)
    model = classifier.load_model(args.model, vocab=vocab)
    label = parse_label(args.class_name)
    for ngram, weight in classifier.top_features(model, label, args.top):
        print(f"{weight:+.6f}\t{' '.join(ngram)}")
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    rules = _load_rules_arg(args.rules)
    docs = corpus.read_documents(args.corpus)
    normalized = []
    for doc in docs:
        norm = corpus.normalize_document(doc, rules)
        if norm is None:
            _log(f"warning: document {doc.id} empty after cleaning; skipped")
        else:
            normalized.append(norm)
    params = reuse.MatchParams(n=args.n, max_word_edit=args.max_word_edit)
    index = reuse.build_index(normalized, params)
    index.rules_hash = rules.content_hash()
    reuse.save_index(index, args.out)
    _log(
        f"indexed {len(normalized)} documents, {index.total_postings()} postings -> {args.out}"
    )
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    index = reuse.load_index(args.index)
    rules = _load_rules_arg(args.rules)
    query_tokens = normalize(Path(args.query).read_text(encoding="utf-8"), rules).split()
    results = reuse.search(query_tokens, index, top_k=args.top)
    total = reuse.query_ngram_total(query_tokens, index.n)
    print(f"# query n-grams: {total}")
    for result in results:
        print(f"{result.doc_id}\t{result.match_count}\t{result.query_ngram_total}")
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    rules = _load_rules_arg(args.rules)
    anthology = corpus.read_documents(args.anthology)
    index = reuse.load_index(args.index)
    model = None
    scores = None
    if args.scores:
        scores = pipeline.load_external_scores(args.scores)
    else:
        if not args.model or not args.vocab:
            raise CliError("detect needs --model and --vocab (or --scores)")
        vocab = features.load_vocab(args.vocab)
        model = classifier.load_model(args.model, vocab=vocab)
    records = pipeline.detect_candidates(
        anthology,
        model,
        index,
        target=parse_label(args.target),
        filter_ratio=args.ratio,
        max_segment=args.max_segment,
        rules=rules,
        external_scores=scores,
    )
    corpus.write_jsonl(args.out, [pipeline.record_to_json(r) for r in records])
    kept = sum(r.kept for r in records)
    _log(f"{kept} candidates kept out of {len(records)} segments -> {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    gold_segments = corpus.read_segments(args.gold)
    gold_by_key = {s.key: s.label for s in gold_segments}
    preds: list[ClassLabel] = []
    gold: list[ClassLabel] = []
    with open(args.preds, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            key = (obj["doc_id"], obj["seq"])
            if key not in gold_by_key:
                raise CliError(f"prediction for unknown segment {key}")
            preds.append(parse_label(obj["argmax"]))
            gold.append(gold_by_key[key])
    acc = evaluation.accuracy(preds, gold)
    matrix = evaluation.confusion(preds, gold)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.json").write_text(
        json.dumps({"accuracy": acc, "count": len(preds)}) + "\n", encoding="utf-8"
    )
    evaluation.write_confusion_csv(matrix, out_dir / "confusion.csv")
    evaluation.write_confusion_json(matrix, out_dir / "confusion.json")
    _log(f"accuracy {acc:.4f} over {len(preds)} segments -> {out_dir}")
    return 0


def cmd_pr_curve(args: argparse.Namespace) -> int:
    records = pipeline.read_records(args.candidates)
    labels = evaluation.load_labels_tsv(args.labels)
    thresholds = (
        _parse_thresholds(args.thresholds) if args.thresholds else _default_thresholds()
    )
    curve = evaluation.precision_recall_curve(records, labels, thresholds)
    evaluation.write_curve_csv(curve, args.out)
    _log(f"{len(curve.points)} curve points -> {args.out}")
    return 0


def cmd_freq(args: argparse.Namespace) -> int:
    records = pipeline.read_records(args.candidates)
    docs = corpus.read_documents(args.corpus)
    doc_labels = {d.id: d.label for d in docs}
    attribution = evaluation.attribute_by_best_match(records, doc_labels)
    report = evaluation.class_frequency_report(records, attribution, high_reuse_cut=args.cut)
    evaluation.write_frequency_csv(report, args.out)
    _log(f"class frequency report -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Whole-pipeline run from a TOML config


@dataclass
class RunConfig:
    seed: int = 0
    threads: int = 1
    root: str = ""
    manifest: str = ""
    rules: str = ""
    anthology: str = ""
    labels: str = ""
    out_dir: str = "out"
    block_size: int = 50
    drop_short: int = 10
    train_fraction: float = 0.8
    min_df: int = 2
    l2_strength: float = 1.0
    max_iterations: int = 1000
    convergence_tolerance: float = 1e-4
    n: int = 3
    max_word_edit: int = 2
    target: str = "Tanhuma"
    filter_ratio: str = "0.2"

    @classmethod
    def from_toml(cls, path: str | Path) -> "RunConfig":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        flat: dict[str, object] = {}
        for key, value in raw.items():
            if isinstance(value, dict):
                flat.update(value)
            else:
                flat[key] = value
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(flat) - known
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in flat.items() if k in known})


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = RunConfig.from_toml(args.config)
    for field_name in ("target", "seed", "out_dir"):
        override = getattr(args, field_name, None)
        if override is not None:
            setattr(config, field_name, override)
    if args.ratio is not None:
        config.filter_ratio = args.ratio
    if not config.root or not config.anthology:
        raise CliError("pipeline config needs [paths] root and anthology")

    config_dir = Path(args.config).resolve().parent

    def resolve(p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else config_dir / path

    out_dir = resolve(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rules = _load_rules_arg(str(resolve(config.rules)) if config.rules else None)

    manifest = (
        corpus.load_manifest(resolve(config.manifest))
        if config.manifest
        else corpus.default_manifest()
    )
    result = corpus.ingest_directory(resolve(config.root), manifest)
    for warning in result.warnings:
        _log(f"warning: {warning}")
    docs = result.documents
    corpus.write_jsonl(out_dir / "corpus.jsonl", [corpus.document_to_json(d) for d in docs])

    segments = []
    for doc in docs:
        segments.extend(
            corpus.segment_document(
                doc, rules=rules, block_size=config.block_size, drop_short=config.drop_short
            )
        )
    labeled = [s for s in segments if s.label is not ClassLabel.UNKNOWN]
    corpus.write_jsonl(out_dir / "segments.jsonl", [corpus.segment_to_json(s) for s in labeled])
    _log(f"step 1-2: {len(docs)} documents, {len(labeled)} labeled segments")

    split = corpus.split_train_val(labeled, config.train_fraction, config.seed)
    balanced_val = corpus.downsample_balance(split.validation, config.seed)
    vocab = features.build_vocab(
        split.train,
        min_df=config.min_df,
        corpus_hash=corpus.segments_hash(split.train),
        rules_hash=rules.content_hash(),
    )
    features.save_vocab(vocab, out_dir / "vocab.json")

    train_config = classifier.TrainConfig(
        l2_strength=config.l2_strength,
        max_iterations=config.max_iterations,
        convergence_tolerance=config.convergence_tolerance,
        seed=config.seed,
    )
    weights = classifier.class_weights_balanced(corpus.class_counts(split.train))
    model = classifier.train_logreg(
        [features.vectorize(s, vocab) for s in split.train],
        [s.label for s in split.train],
        weights,
        train_config,
        vocab=vocab,
        rules_hash=vocab.rules_hash,
    )
    classifier.save_model(model, out_dir / "model.json")

    val_preds = [
        classifier.predict(model, features.vectorize(s, vocab)) for s in balanced_val
    ]
    acc = evaluation.accuracy(val_preds, [s.label for s in balanced_val])
    matrix = evaluation.confusion(val_preds, [s.label for s in balanced_val])
    (out_dir / "metrics.json").write_text(
        json.dumps({"validation_accuracy": acc, "validation_count": len(balanced_val)}) + "\n",
        encoding="utf-8",
    )
    evaluation.write_confusion_csv(matrix, out_dir / "confusion.csv")
    evaluation.write_confusion_json(matrix, out_dir / "confusion.json")
    _log(f"step 3: validation accuracy {acc:.4f} on {len(balanced_val)} balanced segments")

    normalized_docs = [
        norm for doc in docs if (norm := corpus.normalize_document(doc, rules)) is not None
    ]
    index = reuse.build_index(
        normalized_docs, reuse.MatchParams(n=config.n, max_word_edit=config.max_word_edit)
    )
    index.rules_hash = rules.content_hash()
    reuse.save_index(index, out_dir / "idx.bin")
    _log(f"step 5 prep: indexed {len(normalized_docs)} documents")

    anthology = corpus.read_documents(resolve(config.anthology))
    filter_ratio = pipeline.as_ratio(config.filter_ratio)
    records = pipeline.detect_candidates(
        anthology,
        model,
        index,
        target=parse_label(config.target),
        filter_ratio=filter_ratio,
        max_segment=config.block_size,
        rules=rules,
    )
    corpus.write_jsonl(
        out_dir / "candidates.jsonl", [pipeline.record_to_json(r) for r in records]
    )
    kept = sum(r.kept for r in records)
    _log(f"step 4-6: {kept} candidates kept out of {len(records)} anthology segments")

    attribution = evaluation.attribute_by_best_match(records, {d.id: d.label for d in docs})
    report = evaluation.class_frequency_report(
        records, attribution, high_reuse_cut=float(filter_ratio)
    )
    evaluation.write_frequency_csv(report, out_dir / "freq.csv")

    if config.labels:
        labels = evaluation.load_labels_tsv(resolve(config.labels))
        curve = evaluation.precision_recall_curve(records, labels, _default_thresholds())
        evaluation.write_curve_csv(curve, out_dir / "curve.csv")
        _log(f"pr-curve: {len(curve.points)} points -> {out_dir / 'curve.csv'}")
    return 0


# ---------------------------------------------------------------------------
# Parser wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stylo",
        description="Style classification and text-reuse detection for rabbinic corpora.",
    )
    parser.add_argument("--version", action="version", version=f"stylo {__version__}")
    parser.add_argument(
        "--threads", type=int, default=1, help="worker cap (processing is deterministic for any N)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read a corpus tree into documents (and segments)")
    p.add_argument("--root", required=True)
    p.add_argument("--manifest", help="work->label TSV (default: bundled)")
    p.add_argument("--out", required=True)
    p.add_argument("--segments-out")
    p.add_argument("--rules", help="normalization rules TSV (default: bundled)")
    p.add_argument("--block-size", type=int, default=50)
    p.add_argument("--drop-short", type=int, default=10)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("normalize", help="clean a text file or documents JSONL")
    p.add_argument("--rules")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("vocab", help="build the n-gram vocabulary from training segments")
    p.add_argument("--segments", required=True)
    p.add_argument("--min-df", type=int, default=2)
    p.add_argument("--rules")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("vectorize", help="turn segments into sparse feature vectors")
    p.add_argument("--vocab")
    p.add_argument("--segments")
    p.add_argument("--tagged", help="morphologically tagged TSV instead of n-gram segments")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("train", help="train the linear model")
    p.add_argument("--vocab", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--config", help="TOML with a [train] table")
    p.add_argument("--l2", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="per-segment class probabilities")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="top-weighted n-grams for a class")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("--top", type=int, default=30)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("index", help="build the reuse index over a normalized corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--rules")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--max-word-edit", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="fuzzy-search the reuse index with a query text")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--rules")
    p.add_argument("--top", type=int, default=20)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("detect", help="find low-reuse segments in the target style")
    p.add_argument("--anthology", required=True)
    p.add_argument("--model")
    p.add_argument("--vocab")
    p.add_argument("--scores", help="external per-segment probabilities JSONL (instead of --model)")
    p.add_argument("--index", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--ratio", default="0.2")
    p.add_argument("--max-segment", type=int, default=50)
    p.add_argument("--rules")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="accuracy and confusion matrix of predictions")
    p.add_argument("--preds", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pr-curve", help="precision/recall versus decision threshold")
    p.add_argument("--candidates", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--thresholds", help="comma-separated list (default: 0,0.05,...,1)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pr_curve)

    p = sub.add_parser("freq", help="class-frequency report (reuse vs classifier views)")
    p.add_argument("--candidates", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--cut", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("pipeline", help="run the full procedure from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--target")
    p.add_argument("--ratio")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    _log_provenance(args)
    try:
        return args.func(args)
    except (CliError, ValueError, KeyError, OSError, pipeline.ProvenanceError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
