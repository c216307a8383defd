"""Sparse feature extraction: word n-gram counts and morphological tags.

The n-gram vocabulary covers word unigrams, bigrams, and trigrams with a
document-frequency floor, and assigns feature ids in lexicographic n-gram
order, so two builds over the same training set produce byte-identical
vocabulary files.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Segment

NGRAM_ORDERS = (1, 2, 3)


class FeatureError(ValueError):
    pass


@dataclass
class FeatureVector:
    """Sparse counts: feature id -> positive count. Absent means zero."""

    counts: dict[int, int]
    dimension: int

    def __post_init__(self) -> None:
        for idx, count in self.counts.items():
            if not 0 <= idx < self.dimension:
                raise FeatureError(f"feature id {idx} out of range for dimension {self.dimension}")
            if count < 1:
                raise FeatureError(f"feature {idx} has non-positive count {count}")


@dataclass
class NGramVocabulary:
    entries: dict[tuple[str, ...], int]
    min_df: int
    corpus_hash: str = ""
    rules_hash: str = ""
    by_id: list[tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.by_id = [()] * len(self.entries)
        for ngram, idx in self.entries.items():
            self.by_id[idx] = ngram

    def __len__(self) -> int:
        return len(self.entries)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"min_df={self.min_df}\n".encode("utf-8"))
        for ngram in self.by_id:
            h.update(("".join(ngram) + "\n").encode("utf-8"))
        return h.hexdigest()


def iter_ngrams(tokens: tuple[str, ...] | list[str]):
    """All word 1-, 2-, and 3-grams of a token sequence, as tuples."""
    for n in NGRAM_ORDERS:
        for i in range(len(tokens) - n + 1):
            yield tuple(tokens[i : i + n])


def build_vocab(
    train_segments: list[Segment],
    min_df: int = 2,
    corpus_hash: str = "",
    rules_hash: str = "",
) -> NGramVocabulary:
    """Vocabulary over all n-grams occurring in at least ``min_df`` segments."""
    if not train_segments:
        raise FeatureError("cannot build a vocabulary from zero segments")
    if min_df < 1:
        raise FeatureError(f"min_df must be >= 1, got {min_df}")
    df: Counter[tuple[str, ...]] = Counter()
    for seg in train_segments:
        df.update(set(iter_ngrams(seg.tokens)))
    kept = sorted(ngram for ngram, count in df.items() if count >= min_df)
    entries = {ngram: idx for idx, ngram in enumerate(kept)}
    return NGramVocabulary(
        entries=entries, min_df=min_df, corpus_hash=corpus_hash, rules_hash=rules_hash
    )


def vectorize(segment: Segment, vocab: NGramVocabulary) -> FeatureVector:
    """Count in-vocabulary n-grams of one segment; out-of-vocabulary are ignored."""
    counts: dict[int, int] = {}
    for ngram in iter_ngrams(segment.tokens):
        idx = vocab.entries.get(ngram)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    return FeatureVector(counts=counts, dimension=len(vocab))


def save_vocab(vocab: NGramVocabulary, path: str | Path) -> None:
    payload = {
        "min_df": vocab.min_df,
        "corpus_hash": vocab.corpus_hash,
        "rules_hash": vocab.rules_hash,
        "entries": [list(ngram) + [idx] for idx, ngram in enumerate(vocab.by_id)],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=None, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_vocab(path: str | Path) -> NGramVocabulary:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = {tuple(row[:-1]): row[-1] for row in payload["entries"]}
    return NGramVocabulary(
        entries=entries,
        min_df=payload["min_df"],
        corpus_hash=payload.get("corpus_hash", ""),
        rules_hash=payload.get("rules_hash", ""),
    )


def feature_vector_to_json(doc_id: str, seq: int, vec: FeatureVector) -> str:
    return json.dumps(
        {
            "doc_id": doc_id,
            "seq": seq,
            "counts": {str(idx): count for idx, count in sorted(vec.counts.items())},
            "dimension": vec.dimension,
        },
        ensure_ascii=False,
    )


def feature_vector_from_json(line: str) -> tuple[str, int, FeatureVector]:
    obj = json.loads(line)
    vec = FeatureVector(
        counts={int(idx): count for idx, count in obj["counts"].items()},
        dimension=obj["dimension"],
    )
    return obj["doc_id"], obj["seq"], vec


# ---------------------------------------------------------------------------
# Morphological features (external tagger adapter)


@dataclass
class MorphTaggedSegment:
    """Tokens with the tag sets an external morphological engine assigned."""

    tokens: list[tuple[str, frozenset[str]]]


def read_tagged_tsv(path: str | Path) -> list[MorphTaggedSegment]:
    """Parse the tagger exchange format: ``surface<TAB>tag1|tag2|...`` per
    token, blank line between segments."""
    segments: list[MorphTaggedSegment] = []
    current: list[tuple[str, frozenset[str]]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                if current:
                    segments.append(MorphTaggedSegment(tokens=current))
                    current = []
                continue
            surface, _, tag_field = line.partition("\t")
            tags = frozenset(t for t in tag_field.split("|") if t)
            current.append((surface, tags))
    if current:
        segments.append(MorphTaggedSegment(tokens=current))
    return segments


def build_tag_vocab(tagged_segments: list[MorphTaggedSegment]) -> dict[str, int]:
    tags = sorted({tag for seg in tagged_segments for _, tagset in seg.tokens for tag in tagset})
    return {tag: idx for idx, tag in enumerate(tags)}


def aggregate_morph(
    tagged: MorphTaggedSegment,
    tag_vocab: dict[str, int],
    unknown_tally: Counter[str] | None = None,
) -> FeatureVector:
    """Count morphological tags across all tokens, discarding surface forms.

    Tags outside the vocabulary are skipped; pass a Counter to collect them.
    """
    counts: dict[int, int] = {}
    for _, tagset in tagged.tokens:
        for tag in tagset:
            idx = tag_vocab.get(tag)
            if idx is None:
                if unknown_tally is not None:
                    unknown_tally[tag] += 1
                continue
            counts[idx] = counts.get(idx, 0) + 1
    return FeatureVector(counts=counts, dimension=len(tag_vocab))
