"""Validation metrics and report files.

Covers classifier accuracy, the gold-by-predicted confusion matrix,
class-frequency views of an anthology under the reuse/classifier lenses,
and precision/recall as a function of the decision threshold. Reports are
emitted as CSV (tables, curves) and JSON (matrices) for external plotting;
no rendering happens here.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .labels import ClassLabel, TRAIN_CLASSES, parse_label
from .pipeline import CandidateRecord

SegmentKey = tuple[str, int]


class EvalError(ValueError):
    pass


def accuracy(preds: list[ClassLabel], gold: list[ClassLabel]) -> float:
    if len(preds) != len(gold):
        raise EvalError(f"{len(preds)} predictions vs {len(gold)} gold labels")
    if not preds:
        raise EvalError("cannot compute accuracy of zero predictions")
    return sum(p == g for p, g in zip(preds, gold)) / len(preds)


@dataclass
class ConfusionMatrix:
    """counts[i][j] = gold class i predicted as class j."""

    counts: list[list[int]]
    classes: tuple[ClassLabel, ...]

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.classes)))


def confusion(
    preds: list[ClassLabel],
    gold: list[ClassLabel],
    classes: tuple[ClassLabel, ...] = TRAIN_CLASSES,
) -> ConfusionMatrix:
    if len(preds) != len(gold):
        raise EvalError(f"{len(preds)} predictions vs {len(gold)} gold labels")
    index = {label: i for i, label in enumerate(classes)}
    counts = [[0] * len(classes) for _ in classes]
    for p, g in zip(preds, gold):
        if g not in index or p not in index:
            raise EvalError(f"label outside the class set: gold={g}, pred={p}")
        counts[index[g]][index[p]] += 1
    return ConfusionMatrix(counts=counts, classes=classes)


# ---------------------------------------------------------------------------
# Class-frequency views of an anthology


@dataclass
class ClassFrequencyReport:
    """Three views: where reuse says quotes come from, and what the
    classifier predicts on the high- and low-reuse ends."""

    reuse_attributed: dict[ClassLabel, int]
    high_reuse_predicted: dict[ClassLabel, int]
    low_reuse_predicted: dict[ClassLabel, int]


def attribute_by_best_match(
    records: list[CandidateRecord], doc_labels: dict[str, ClassLabel]
) -> dict[SegmentKey, ClassLabel]:
    """Attribute each segment to the class of its best-matching reuse document.

    Segments with no match at all get no attribution.
    """
    attribution: dict[SegmentKey, ClassLabel] = {}
    for record in records:
        best = record.best_reuse
        if best is None or best.match_count < 1:
            continue
        label = doc_labels.get(best.doc_id)
        if label is not None:
            attribution[record.segment.key] = label
    return attribution


def class_frequency_report(
    records: list[CandidateRecord],
    reuse_attribution: dict[SegmentKey, ClassLabel],
    high_reuse_cut: float = 0.2,
) -> ClassFrequencyReport:
    reuse_attributed: dict[ClassLabel, int] = {}
    high: dict[ClassLabel, int] = {}
    low: dict[ClassLabel, int] = {}
    for record in records:
        attributed = reuse_attribution.get(record.segment.key)
        if attributed is not None:
            reuse_attributed[attributed] = reuse_attributed.get(attributed, 0) + 1
        bucket = high if record.reuse_ratio > high_reuse_cut else low
        predicted = record.prediction.argmax
        bucket[predicted] = bucket.get(predicted, 0) + 1
    return ClassFrequencyReport(
        reuse_attributed=reuse_attributed,
        high_reuse_predicted=high,
        low_reuse_predicted=low,
    )


# ---------------------------------------------------------------------------
# Precision/recall versus decision threshold


@dataclass
class PrecisionRecallCurve:
    """(threshold, precision, recall, kept_count), thresholds ascending.

    Thresholds that keep nothing are omitted rather than given an arbitrary
    precision.
    """

    points: list[tuple[float, float, float, int]]


def load_labels_tsv(path: str | Path) -> dict[SegmentKey, bool]:
    """Expert annotations: ``doc_id<TAB>seq<TAB>positive|negative``."""
    labels: dict[SegmentKey, bool] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 3 or row[2].strip().lower() not in ("positive", "negative"):
                raise EvalError(f"{path}:{lineno}: expected 'doc_id<TAB>seq<TAB>positive|negative'")
            labels[(row[0], int(row[1]))] = row[2].strip().lower() == "positive"
    return labels


def precision_recall_curve(
    records: list[CandidateRecord],
    labels: dict[SegmentKey, bool],
    thresholds: list[float],
) -> PrecisionRecallCurve:
    if not labels:
        raise EvalError("no labels supplied")
    kept = [r for r in records if r.kept]
    unlabeled = [r.segment.key for r in kept if r.segment.key not in labels]
    if unlabeled:
        raise EvalError(f"kept segments missing labels: {unlabeled[:5]}")
    total_positives = sum(1 for r in kept if labels[r.segment.key])
    if total_positives == 0:
        raise EvalError("no positive labels among kept records")
    points: list[tuple[float, float, float, int]] = []
    for threshold in sorted(thresholds):
        selected = [r for r in kept if r.target_probability >= threshold]
        if not selected:
            continue
        positives = sum(1 for r in selected if labels[r.segment.key])
        points.append(
            (threshold, positives / len(selected), positives / total_positives, len(selected))
        )
    return PrecisionRecallCurve(points=points)


# ---------------------------------------------------------------------------
# Report files


def write_confusion_csv(matrix: ConfusionMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gold\\predicted"] + [c.value for c in matrix.classes])
        for label, row in zip(matrix.classes, matrix.counts):
            writer.writerow([label.value] + row)


def read_confusion_csv(path: str | Path) -> ConfusionMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    classes = tuple(parse_label(c) for c in rows[0][1:])
    counts = [[int(v) for v in row[1:]] for row in rows[1:]]
    return ConfusionMatrix(counts=counts, classes=classes)


def write_confusion_json(matrix: ConfusionMatrix, path: str | Path) -> None:
    payload = {"classes": [c.value for c in matrix.classes], "counts": matrix.counts}
    Path(path).write_text(json.dumps(payload, ensure_ascii=False) + "\n", encoding="utf-8")


def read_confusion_json(path: str | Path) -> ConfusionMatrix:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return ConfusionMatrix(
        counts=payload["counts"], classes=tuple(parse_label(c) for c in payload["classes"])
    )


def write_frequency_csv(report: ClassFrequencyReport, path: str | Path) -> None:
    views = [
        ("reuse_attributed", report.reuse_attributed),
        ("high_reuse_predicted", report.high_reuse_predicted),
        ("low_reuse_predicted", report.low_reuse_predicted),
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["view", "class", "count"])
        for name, table in views:
            for label in TRAIN_CLASSES:
                if label in table:
                    writer.writerow([name, label.value, table[label]])


def read_frequency_csv(path: str | Path) -> ClassFrequencyReport:
    report = ClassFrequencyReport({}, {}, {})
    views = {
        "reuse_attributed": report.reuse_attributed,
        "high_reuse_predicted": report.high_reuse_predicted,
        "low_reuse_predicted": report.low_reuse_predicted,
    }
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for view, label, count in reader:
            views[view][parse_label(label)] = int(count)
    return report


def write_curve_csv(curve: PrecisionRecallCurve, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "precision", "recall", "kept"])
        for threshold, precision, recall, kept in curve.points:
            writer.writerow([repr(threshold), repr(precision), repr(recall), kept])


def read_curve_csv(path: str | Path) -> PrecisionRecallCurve:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        points = [(float(t), float(p), float(r), int(k)) for t, p, r, k in reader]
    return PrecisionRecallCurve(points=points)
