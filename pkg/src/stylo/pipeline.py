"""Lost-material candidate detection.

Given an anthology, a trained style model, and a reuse index over the
known corpus, every anthology segment is classified and searched for an
established source. A segment becomes a candidate when the style model
puts the target class on top AND no single known document fuzzily covers
more than ``filter_ratio`` of the segment's n-grams. All segments are
recorded, kept or not, so rejected near-misses stay auditable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .classifier import LinearModel, Prediction, predict_proba
from .corpus import Document, Segment, segment_document
from .features import vectorize
from .labels import ClassLabel, TRAIN_CLASSES, parse_label
from .normalize import NormalizationRules, default_rules
from .reuse import ReuseIndex, ReuseResult, query_ngram_total, search

DEFAULT_FILTER_RATIO = Fraction(1, 5)


class ProvenanceError(RuntimeError):
    """Model and index were built over different normalization rules."""


class PipelineError(ValueError):
    pass


@dataclass
class CandidateRecord:
    segment: Segment
    prediction: Prediction
    target_probability: float
    best_reuse: ReuseResult | None
    reuse_ratio: float
    kept: bool


def as_ratio(value: float | str | Fraction) -> Fraction:
    """Canonicalize a filter ratio to an exact rational.

    Floats go through their shortest decimal repr, so 0.2 means exactly
    1/5 and the keep/reject boundary has no float surprises.
    """
    if isinstance(value, Fraction):
        ratio = value
    elif isinstance(value, str):
        ratio = Fraction(value)
    else:
        ratio = Fraction(repr(float(value)))
    if not 0 <= ratio <= 1:
        raise PipelineError(f"filter ratio must be within [0, 1], got {value}")
    return ratio


def passes_reuse_filter(match_count: int, ngram_total: int, filter_ratio: Fraction) -> bool:
    """Exact-rational form of: match_count <= filter_ratio * ngram_total."""
    return Fraction(match_count) <= filter_ratio * ngram_total


def detect_candidates(
    anthology: list[Document],
    model: LinearModel | None,
    index: ReuseIndex,
    target: ClassLabel,
    filter_ratio: float | str | Fraction = DEFAULT_FILTER_RATIO,
    max_segment: int = 50,
    rules: NormalizationRules | None = None,
    external_scores: dict[tuple[str, int], Prediction] | None = None,
) -> list[CandidateRecord]:
    """Run the full detector over an anthology.

    Every anthology segment yields exactly one record. Kept records come
    first, ordered by target probability descending; rejected records
    follow in document order. Segments too short to form a single n-gram
    are never kept.

    ``external_scores`` substitutes precomputed per-segment probabilities
    (e.g. from an outside model) for the linear model's predictions.
    """
    ratio = as_ratio(filter_ratio)
    rules = rules or default_rules()
    _check_provenance(model, index, rules)
    if model is None and external_scores is None:
        raise PipelineError("need either a model or external scores")
    if model is not None and model.vocab is None and external_scores is None:
        raise PipelineError("model has no vocabulary bound; cannot vectorize segments")

    records: list[CandidateRecord] = []
    for doc in anthology:
        for segment in segment_document(doc, rules=rules, block_size=max_segment):
            prediction = _predict(segment, model, external_scores)
            target_probability = prediction.probabilities.get(target, 0.0)
            total = query_ngram_total(list(segment.tokens), index.n)
            results = search(list(segment.tokens), index, top_k=1)
            best = results[0] if results else None
            match_count = best.match_count if best else 0
            reuse_ratio = match_count / max(1, total)
            kept = (
                prediction.argmax == target
                and total > 0
                and passes_reuse_filter(match_count, total, ratio)
            )
            records.append(
                CandidateRecord(
                    segment=segment,
                    prediction=prediction,
                    target_probability=target_probability,
                    best_reuse=best,
                    reuse_ratio=reuse_ratio,
                    kept=kept,
                )
            )
    kept_records = [r for r in records if r.kept]
    rejected = [r for r in records if not r.kept]
    kept_records.sort(key=lambda r: (-r.target_probability, r.segment.key))
    rejected.sort(key=lambda r: r.segment.key)
    return kept_records + rejected


def _check_provenance(model: LinearModel | None, index: ReuseIndex, rules: NormalizationRules) -> None:
    hashes = {h for h in (model.rules_hash if model else "", index.rules_hash) if h}
    if len(hashes) > 1:
        raise ProvenanceError(
            "model and index were normalized under different rule sets: "
            + ", ".join(sorted(h[:12] for h in hashes))
        )
    if hashes and rules.content_hash() not in hashes:
        raise ProvenanceError(
            "supplied normalization rules differ from the ones the model/index were built with"
        )


def _predict(
    segment: Segment,
    model: LinearModel | None,
    external_scores: dict[tuple[str, int], Prediction] | None,
) -> Prediction:
    if external_scores is not None:
        prediction = external_scores.get(segment.key)
        if prediction is None:
            raise PipelineError(f"no external score for segment {segment.key}")
        return prediction
    assert model is not None and model.vocab is not None
    return predict_proba(model, vectorize(segment, model.vocab))


def apply_decision_threshold(
    records: list[CandidateRecord], threshold: float
) -> list[CandidateRecord]:
    """Kept records whose target probability clears the threshold."""
    if not 0 <= threshold <= 1:
        raise PipelineError(f"threshold must be within [0, 1], got {threshold}")
    return [r for r in records if r.kept and r.target_probability >= threshold]


# ---------------------------------------------------------------------------
# JSON Lines serialization


def record_to_json(record: CandidateRecord) -> str:
    best = record.best_reuse
    return json.dumps(
        {
            "doc_id": record.segment.doc_id,
            "seq": record.segment.seq,
            "tokens": list(record.segment.tokens),
            "label": record.segment.label.value,
            "probabilities": {
                label.value: prob for label, prob in record.prediction.probabilities.items()
            },
            "argmax": record.prediction.argmax.value,
            "target_probability": record.target_probability,
            "best_reuse": None
            if best is None
            else {
                "doc_id": best.doc_id,
                "match_count": best.match_count,
                "query_ngram_total": best.query_ngram_total,
            },
            "reuse_ratio": record.reuse_ratio,
            "kept": record.kept,
        },
        ensure_ascii=False,
    )


def record_from_json(line: str) -> CandidateRecord:
    obj = json.loads(line)
    best = obj.get("best_reuse")
    return CandidateRecord(
        segment=Segment(
            doc_id=obj["doc_id"],
            seq=obj["seq"],
            tokens=tuple(obj["tokens"]),
            label=parse_label(obj["label"]),
        ),
        prediction=Prediction(
            probabilities={parse_label(k): v for k, v in obj["probabilities"].items()},
            argmax=parse_label(obj["argmax"]),
        ),
        target_probability=obj["target_probability"],
        best_reuse=None
        if best is None
        else ReuseResult(
            doc_id=best["doc_id"],
            match_count=best["match_count"],
            query_ngram_total=best["query_ngram_total"],
        ),
        reuse_ratio=obj["reuse_ratio"],
        kept=obj["kept"],
    )


def read_records(path: str | Path) -> list[CandidateRecord]:
    with open(path, encoding="utf-8") as fh:
        return [record_from_json(line) for line in fh if line.strip()]


def prediction_to_json(doc_id: str, seq: int, prediction: Prediction) -> str:
    return json.dumps(
        {
            "doc_id": doc_id,
            "seq": seq,
            "probabilities": {l.value: p for l, p in prediction.probabilities.items()},
            "argmax": prediction.argmax.value,
        },
        ensure_ascii=False,
    )


def load_external_scores(path: str | Path) -> dict[tuple[str, int], Prediction]:
    """Read per-segment probabilities in the predictions JSONL format."""
    scores: dict[tuple[str, int], Prediction] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            probabilities = {parse_label(k): float(v) for k, v in obj["probabilities"].items()}
            argmax = (
                parse_label(obj["argmax"])
                if "argmax" in obj
                else max(probabilities, key=lambda l: (probabilities[l], -_label_rank(l)))
            )
            scores[(obj["doc_id"], obj["seq"])] = Prediction(
                probabilities=probabilities, argmax=argmax
            )
    return scores


def _label_rank(label: ClassLabel) -> int:
    return TRAIN_CLASSES.index(label) if label in TRAIN_CLASSES else len(TRAIN_CLASSES)
