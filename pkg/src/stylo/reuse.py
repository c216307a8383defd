"""Fuzzy text-reuse detection over word 3-gram windows.

A reference corpus is indexed by every overlapping window of n consecutive
tokens. A query n-gram matches an indexed one when each aligned word pair
is within a small Levenshtein bound (2 by default, applied per word, with
no pooled budget across the gram). A document's match score is the number
of distinct query n-gram positions it covers, so the score never exceeds
the query's n-gram count.

Candidate generation is the performance-sensitive part: each indexed word
is keyed under its deletion neighborhood (every string reachable by up to
``max_word_edit`` character deletions). If two words are within edit
distance d, they share a variant reachable by at most d deletions from
each side, so the neighborhood lookup is complete; an exact bounded
Levenshtein pass then discards the false candidates.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Document


class ReuseError(ValueError):
    pass


@dataclass(frozen=True)
class MatchParams:
    n: int = 3
    max_word_edit: int = 2

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ReuseError(f"n must be >= 1, got {self.n}")
        if self.max_word_edit < 0:
            raise ReuseError(f"max_word_edit must be >= 0, got {self.max_word_edit}")


@dataclass(frozen=True)
class ReuseResult:
    doc_id: str
    match_count: int
    query_ngram_total: int

    @property
    def ratio(self) -> float:
        return self.match_count / max(1, self.query_ngram_total)


def word_levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over Unicode scalar values."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a):
        current = [i + 1]
        for j, cb in enumerate(b):
            current.append(
                min(previous[j + 1] + 1, current[j] + 1, previous[j] + (ca != cb))
            )
        previous = current
    return previous[-1]


def levenshtein_within(a: str, b: str, bound: int) -> int:
    """Banded edit distance: exact when <= bound, else any value > bound."""
    if a == b:
        return 0
    if abs(len(a) - len(b)) > bound:
        return bound + 1
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    width = len(b)
    previous = list(range(width + 1))
    for i, ca in enumerate(a):
        current = [i + 1]
        row_min = current[0]
        for j, cb in enumerate(b):
            value = min(previous[j + 1] + 1, current[j] + 1, previous[j] + (ca != cb))
            current.append(value)
            if value < row_min:
                row_min = value
        if row_min > bound:
            return bound + 1
        previous = current
    return previous[-1] if previous[-1] <= bound else bound + 1


def deletion_neighborhood(word: str, max_deletes: int) -> set[str]:
    """All strings reachable from ``word`` by up to ``max_deletes`` deletions."""
    frontier = {word}
    seen = {word}
    for _ in range(min(max_deletes, len(word))):
        next_frontier = set()
        for w in frontier:
            for i in range(len(w)):
                shorter = w[:i] + w[i + 1 :]
                if shorter not in seen:
                    seen.add(shorter)
                    next_frontier.add(shorter)
        frontier = next_frontier
    return seen


@dataclass
class ReuseIndex:
    """Inverted index over word n-gram windows of a normalized corpus."""

    params: MatchParams
    words: list[str]
    gram_words: list[tuple[int, ...]]
    occurrences: list[list[tuple[int, int]]]
    doc_ids: list[str]
    doc_lengths: dict[str, int]
    corpus_hash: str = ""
    rules_hash: str = ""
    keying_scheme: str = "slot-word+deletion-neighborhood/v1"

    _word_ids: dict[str, int] = field(init=False, repr=False, default_factory=dict)
    _delete_index: dict[str, list[int]] = field(init=False, repr=False, default_factory=dict)
    _grams_by_slot_word: dict[tuple[int, int], list[int]] = field(
        init=False, repr=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        self._word_ids = {w: i for i, w in enumerate(self.words)}
        for word_id, word in enumerate(self.words):
            for variant in deletion_neighborhood(word, self.params.max_word_edit):
                self._delete_index.setdefault(variant, []).append(word_id)
        for gram_id, gram in enumerate(self.gram_words):
            for slot, word_id in enumerate(gram):
                self._grams_by_slot_word.setdefault((slot, word_id), []).append(gram_id)

    @property
    def n(self) -> int:
        return self.params.n

    def total_postings(self) -> int:
        return sum(len(occ) for occ in self.occurrences)

    def matching_word_ids(self, query_word: str, max_edit: int) -> set[int]:
        """Indexed words within ``max_edit`` of the query word, verified exactly."""
        if max_edit > self.params.max_word_edit:
            raise ReuseError(
                f"index was built for edit distance <= {self.params.max_word_edit}, "
                f"cannot search at {max_edit}"
            )
        candidates: set[int] = set()
        for variant in deletion_neighborhood(query_word, max_edit):
            candidates.update(self._delete_index.get(variant, ()))
        return {
            wid
            for wid in candidates
            if levenshtein_within(query_word, self.words[wid], max_edit) <= max_edit
        }


def build_index(corpus: list[Document], params: MatchParams | None = None) -> ReuseIndex:
    """Index every overlapping n-token window of every (normalized) document.

    Documents shorter than n tokens simply contribute no postings.
    """
    params = params or MatchParams()
    seen_ids = set()
    for doc in corpus:
        if doc.id in seen_ids:
            raise ReuseError(f"duplicate document id {doc.id!r}")
        seen_ids.add(doc.id)

    words: list[str] = []
    word_ids: dict[str, int] = {}
    gram_ids: dict[tuple[int, ...], int] = {}
    gram_words: list[tuple[int, ...]] = []
    occurrences: list[list[tuple[int, int]]] = []
    doc_ids: list[str] = []
    doc_lengths: dict[str, int] = {}

    for doc in corpus:
        tokens = doc.raw_text.split()
        doc_idx = len(doc_ids)
        doc_ids.append(doc.id)
        doc_lengths[doc.id] = len(tokens)
        token_ids = []
        for tok in tokens:
            wid = word_ids.get(tok)
            if wid is None:
                wid = len(words)
                word_ids[tok] = wid
                words.append(tok)
            token_ids.append(wid)
        for pos in range(len(token_ids) - params.n + 1):
            gram = tuple(token_ids[pos : pos + params.n])
            gid = gram_ids.get(gram)
            if gid is None:
                gid = len(gram_words)
                gram_ids[gram] = gid
                gram_words.append(gram)
                occurrences.append([])
            occurrences[gid].append((doc_idx, pos))

    for occ in occurrences:
        occ.sort()
    index = ReuseIndex(
        params=params,
        words=words,
        gram_words=gram_words,
        occurrences=occurrences,
        doc_ids=doc_ids,
        doc_lengths=doc_lengths,
        corpus_hash=_corpus_hash(corpus),
    )
    return index


def _corpus_hash(corpus: list[Document]) -> str:
    h = hashlib.sha256()
    for doc in corpus:
        h.update(doc.id.encode("utf-8"))
        h.update(b"\x00")
        h.update(doc.raw_text.encode("utf-8"))
        h.update(b"\x01")
    return h.hexdigest()


def _matching_gram_ids(
    index: ReuseIndex,
    query_gram: tuple[str, ...],
    params: MatchParams,
    word_cache: dict[str, set[int]],
) -> set[int]:
    # Slot-wise membership is exact after word-level verification, so the
    # intersection over slots needs no further gram-level check.
    candidate: set[int] | None = None
    for slot, query_word in enumerate(query_gram):
        matched = word_cache.get(query_word)
        if matched is None:
            matched = index.matching_word_ids(query_word, params.max_word_edit)
            word_cache[query_word] = matched
        grams: set[int] = set()
        for wid in matched:
            grams.update(index._grams_by_slot_word.get((slot, wid), ()))
        candidate = grams if candidate is None else candidate & grams
        if not candidate:
            return set()
    return candidate or set()


def fuzzy_match(
    query_gram: tuple[str, ...], index: ReuseIndex, params: MatchParams | None = None
) -> set[tuple[str, int]]:
    """All (doc_id, position) postings whose gram matches the query gram
    with every aligned word within the per-word edit bound."""
    params = params or index.params
    if len(query_gram) != index.n:
        raise ReuseError(f"query gram has {len(query_gram)} words, index n is {index.n}")
    postings: set[tuple[str, int]] = set()
    for gid in _matching_gram_ids(index, tuple(query_gram), params, {}):
        for doc_idx, pos in index.occurrences[gid]:
            postings.add((index.doc_ids[doc_idx], pos))
    return postings


def query_ngram_total(query_tokens: list[str], n: int) -> int:
    return max(0, len(query_tokens) - n + 1)


def search(
    query_tokens: list[str],
    index: ReuseIndex,
    params: MatchParams | None = None,
    top_k: int = 20,
) -> list[ReuseResult]:
    """Rank documents by how many distinct query n-gram positions they match."""
    params = params or index.params
    if params.n != index.n:
        raise ReuseError(f"search n={params.n} does not match index n={index.n}")
    total = query_ngram_total(query_tokens, params.n)
    if total == 0:
        return []
    word_cache: dict[str, set[int]] = {}
    gram_cache: dict[tuple[str, ...], set[int]] = {}
    matched_positions: dict[int, set[int]] = {}
    for pos in range(total):
        gram = tuple(query_tokens[pos : pos + params.n])
        doc_idxs = gram_cache.get(gram)
        if doc_idxs is None:
            doc_idxs = {
                doc_idx
                for gid in _matching_gram_ids(index, gram, params, word_cache)
                for doc_idx, _ in index.occurrences[gid]
            }
            gram_cache[gram] = doc_idxs
        for doc_idx in doc_idxs:
            matched_positions.setdefault(doc_idx, set()).add(pos)
    results = [
        ReuseResult(
            doc_id=index.doc_ids[doc_idx], match_count=len(positions), query_ngram_total=total
        )
        for doc_idx, positions in matched_positions.items()
    ]
    results.sort(key=lambda r: (-r.match_count, r.doc_id))
    return results[:top_k]


# ---------------------------------------------------------------------------
# Serialization: binary postings plus a JSON sidecar with the doc table

MAGIC = b"STRIX1"


def save_index(index: ReuseIndex, path: str | Path) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", index.params.n, index.params.max_word_edit))
        fh.write(struct.pack("<I", len(index.words)))
        for word in index.words:
            raw = word.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        fh.write(struct.pack("<I", len(index.gram_words)))
        for gram in index.gram_words:
            fh.write(struct.pack(f"<{index.params.n}I", *gram))
        for occ in index.occurrences:
            fh.write(struct.pack("<I", len(occ)))
            for doc_idx, pos in occ:
                fh.write(struct.pack("<II", doc_idx, pos))
    sidecar = {
        "n": index.params.n,
        "max_word_edit": index.params.max_word_edit,
        "keying_scheme": index.keying_scheme,
        "corpus_hash": index.corpus_hash,
        "rules_hash": index.rules_hash,
        "docs": [{"id": doc_id, "length": index.doc_lengths[doc_id]} for doc_id in index.doc_ids],
    }
    sidecar_path(path).write_text(
        json.dumps(sidecar, ensure_ascii=False, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def load_index(path: str | Path) -> ReuseIndex:
    path = Path(path)
    sidecar = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ReuseError(f"{path}: bad magic bytes {magic!r}")
        n, max_word_edit = struct.unpack("<II", fh.read(8))
        (word_count,) = struct.unpack("<I", fh.read(4))
        words = []
        for _ in range(word_count):
            (length,) = struct.unpack("<I", fh.read(4))
            words.append(fh.read(length).decode("utf-8"))
        (gram_count,) = struct.unpack("<I", fh.read(4))
        gram_words = [struct.unpack(f"<{n}I", fh.read(4 * n)) for _ in range(gram_count)]
        occurrences = []
        for _ in range(gram_count):
            (occ_count,) = struct.unpack("<I", fh.read(4))
            occurrences.append(
                [struct.unpack("<II", fh.read(8)) for _ in range(occ_count)]
            )
    return ReuseIndex(
        params=MatchParams(n=n, max_word_edit=max_word_edit),
        words=words,
        gram_words=gram_words,
        occurrences=[[(d, p) for d, p in occ] for occ in occurrences],
        doc_ids=[d["id"] for d in sidecar["docs"]],
        doc_lengths={d["id"]: d["length"] for d in sidecar["docs"]},
        corpus_hash=sidecar.get("corpus_hash", ""),
        rules_hash=sidecar.get("rules_hash", ""),
        keying_scheme=sidecar.get("keying_scheme", "slot-word+deletion-neighborhood/v1"),
    )
