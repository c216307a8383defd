"""Corpus ingestion, tokenization, fixed-size segmentation, and splits.

Source texts live as plain UTF-8 files, one file per work, with blank
lines separating paragraphs. Segments are blocks of at most ``block_size``
tokens and never span a paragraph boundary.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .labels import ClassLabel, TRAIN_CLASSES, parse_label
from .normalize import NormalizationRules, default_rules, normalize

DEFAULT_BLOCK_SIZE = 50


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Document:
    """One source text: a work with a class label and its raw text."""

    id: str
    work: str
    label: ClassLabel
    raw_text: str

    def __post_init__(self) -> None:
        if not self.raw_text:
            raise CorpusError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class Segment:
    """A contiguous block of at most 50 tokens with provenance."""

    doc_id: str
    seq: int
    tokens: tuple[str, ...]
    label: ClassLabel

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.seq)


@dataclass
class DatasetSplit:
    train: list[Segment]
    validation: list[Segment]
    seed: int


@dataclass
class IngestResult:
    documents: list[Document]
    warnings: list[str] = field(default_factory=list)


def load_manifest(path: str | Path) -> dict[str, ClassLabel]:
    """Read a work -> class-label mapping from a two-column TSV."""
    mapping: dict[str, ClassLabel] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 2:
                raise CorpusError(f"{path}:{lineno}: expected 'work<TAB>label'")
            mapping[row[0].strip()] = parse_label(row[1])
    return mapping


def default_manifest() -> dict[str, ClassLabel]:
    """The bundled manifest assigning the standard corpus works to classes."""
    from importlib import resources

    ref = resources.files("stylo").joinpath("data/manifest_default.tsv")
    with resources.as_file(ref) as path:
        return load_manifest(path)


def ingest_directory(root: str | Path, manifest: dict[str, ClassLabel]) -> IngestResult:
    """Load every ``*.txt`` under ``root`` as one Document per file.

    Files are visited in lexicographic path order so document ids are
    stable. A work missing from the manifest is ingested with label
    Unknown and a warning is recorded, not raised.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root not found: {root}")
    result = IngestResult(documents=[])
    for path in sorted(root.rglob("*.txt")):
        work = path.stem
        doc_id = path.relative_to(root).with_suffix("").as_posix()
        label = manifest.get(work)
        if label is None:
            label = ClassLabel.UNKNOWN
            result.warnings.append(f"work {work!r} ({doc_id}) not in manifest; labeled Unknown")
        result.documents.append(
            Document(id=doc_id, work=work, label=label, raw_text=path.read_text(encoding="utf-8"))
        )
    return result


def tokenize(text: str) -> list[str]:
    """Split normalized text on whitespace runs; never emits empty tokens."""
    return text.split()


def segment_blocks(
    tokens: list[str],
    block_size: int = DEFAULT_BLOCK_SIZE,
    *,
    doc_id: str = "",
    label: ClassLabel = ClassLabel.UNKNOWN,
    start_seq: int = 0,
) -> list[Segment]:
    """Cut a token list into consecutive non-overlapping blocks.

    A trailing remainder shorter than ``block_size`` is kept as a final
    short segment; dropping uninformative short segments is a separate,
    explicit step (see ``drop_short``).
    """
    if block_size < 1:
        raise CorpusError(f"block_size must be >= 1, got {block_size}")
    segments = []
    for i in range(0, len(tokens), block_size):
        segments.append(
            Segment(
                doc_id=doc_id,
                seq=start_seq + i // block_size,
                tokens=tuple(tokens[i : i + block_size]),
                label=label,
            )
        )
    return segments


def segment_document(
    doc: Document,
    rules: NormalizationRules | None = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
    drop_short: int = 0,
) -> list[Segment]:
    """Normalize and segment one document, paragraph by paragraph.

    Blocks never span a blank-line paragraph boundary. ``seq`` numbering is
    continuous across the document, so concatenating segments in seq order
    reconstructs the document's normalized token sequence exactly (when
    ``drop_short`` is 0).
    """
    rules = rules or default_rules()
    segments: list[Segment] = []
    seq = 0
    for paragraph in _paragraphs(doc.raw_text):
        tokens = tokenize(normalize(paragraph, rules))
        if not tokens:
            continue
        blocks = segment_blocks(
            tokens, block_size, doc_id=doc.id, label=doc.label, start_seq=seq
        )
        segments.extend(blocks)
        seq += len(blocks)
    if drop_short > 0:
        segments = [s for s in segments if len(s.tokens) >= drop_short]
    return segments


def _paragraphs(text: str) -> list[str]:
    parts = [p.strip() for p in text.replace("\r\n", "\n").split("\n\n")]
    return [p for p in parts if p]


def normalize_document(doc: Document, rules: NormalizationRules | None = None) -> Document | None:
    """Normalize a document paragraph by paragraph, keeping blank-line breaks.

    Returns None if nothing survives cleaning (e.g. a file of pure markup).
    """
    rules = rules or default_rules()
    paragraphs = [normalize(p, rules) for p in _paragraphs(doc.raw_text)]
    text = "\n\n".join(p for p in paragraphs if p)
    if not text:
        return None
    return Document(id=doc.id, work=doc.work, label=doc.label, raw_text=text)


def split_train_val(
    segments: list[Segment], train_fraction: float = 0.8, seed: int = 0
) -> DatasetSplit:
    """Deterministic per-class stratified split.

    Every input segment lands in exactly one side. A class with fewer than
    5 segments cannot be meaningfully stratified and is an error.
    """
    if not 0.0 < train_fraction < 1.0:
        raise CorpusError(f"train_fraction must be in (0, 1), got {train_fraction}")
    by_class: dict[ClassLabel, list[Segment]] = {}
    for seg in segments:
        if seg.label is ClassLabel.UNKNOWN:
            raise CorpusError(f"segment {seg.key} is unlabeled; cannot split")
        by_class.setdefault(seg.label, []).append(seg)
    rng = random.Random(seed)
    train: list[Segment] = []
    validation: list[Segment] = []
    for label in sorted(by_class, key=lambda l: l.value):
        group = sorted(by_class[label], key=lambda s: s.key)
        if len(group) < 5:
            raise CorpusError(
                f"class {label} has only {len(group)} segments; need >= 5 to stratify"
            )
        rng.shuffle(group)
        n_train = int(len(group) * train_fraction)
        train.extend(group[:n_train])
        validation.extend(group[n_train:])
    train.sort(key=lambda s: s.key)
    validation.sort(key=lambda s: s.key)
    return DatasetSplit(train=train, validation=validation, seed=seed)


def downsample_balance(segments: list[Segment], seed: int = 0) -> list[Segment]:
    """Downsample every class to the minority-class count, without replacement."""
    by_class: dict[ClassLabel, list[Segment]] = {}
    for seg in segments:
        by_class.setdefault(seg.label, []).append(seg)
    if not by_class:
        return []
    target = min(len(group) for group in by_class.values())
    rng = random.Random(seed)
    kept: list[Segment] = []
    for label in sorted(by_class, key=lambda l: l.value):
        group = sorted(by_class[label], key=lambda s: s.key)
        kept.extend(rng.sample(group, target))
    kept.sort(key=lambda s: s.key)
    return kept


# ---------------------------------------------------------------------------
# JSON Lines serialization


def document_to_json(doc: Document) -> str:
    return json.dumps(
        {"id": doc.id, "work": doc.work, "label": doc.label.value, "raw_text": doc.raw_text},
        ensure_ascii=False,
    )


def document_from_json(line: str) -> Document:
    obj = json.loads(line)
    return Document(
        id=obj["id"], work=obj["work"], label=parse_label(obj["label"]), raw_text=obj["raw_text"]
    )


def segment_to_json(seg: Segment) -> str:
    return json.dumps(
        {"doc_id": seg.doc_id, "seq": seg.seq, "tokens": list(seg.tokens), "label": seg.label.value},
        ensure_ascii=False,
    )


def segment_from_json(line: str) -> Segment:
    obj = json.loads(line)
    return Segment(
        doc_id=obj["doc_id"],
        seq=obj["seq"],
        tokens=tuple(obj["tokens"]),
        label=parse_label(obj["label"]),
    )


def write_jsonl(path: str | Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def read_documents(path: str | Path) -> list[Document]:
    with open(path, encoding="utf-8") as fh:
        return [document_from_json(line) for line in fh if line.strip()]


def read_segments(path: str | Path) -> list[Segment]:
    with open(path, encoding="utf-8") as fh:
        return [segment_from_json(line) for line in fh if line.strip()]


def segments_hash(segments: list[Segment]) -> str:
    """Content hash binding downstream artifacts to their source segments."""
    h = hashlib.sha256()
    for seg in segments:
        h.update(segment_to_json(seg).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def documents_hash(documents: list[Document]) -> str:
    h = hashlib.sha256()
    for doc in documents:
        h.update(document_to_json(doc).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def class_counts(segments: list[Segment]) -> dict[ClassLabel, int]:
    counts: dict[ClassLabel, int] = {}
    for seg in segments:
        counts[seg.label] = counts.get(seg.label, 0) + 1
    return counts


__all__ = [
    "ClassLabel",
    "TRAIN_CLASSES",
    "CorpusError",
    "Document",
    "Segment",
    "DatasetSplit",
    "IngestResult",
    "load_manifest",
    "ingest_directory",
    "tokenize",
    "segment_blocks",
    "segment_document",
    "split_train_val",
    "downsample_balance",
]
