"""Text cleaning and orthographic standardization.

The cleaning pipeline has a fixed stage order: strip vocalization marks,
strip punctuation and editorial metadata, expand acronyms, standardize
spelling. The full pipeline is idempotent: running it twice produces the
same string as running it once.

Acronym and spelling tables are data, not code. The bundled starter
lexicon is small (~60 entries); downstream results depend directly on the
richness of the lexicon supplied.
"""

from __future__ import annotations

import csv
import hashlib
import re
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

#: Hebrew cantillation marks and points (U+0591..U+05C7), excluding the
#: maqaf U+05BE which is word-joining punctuation and must become a space.
DEFAULT_STRIP_RANGES: tuple[tuple[int, int], ...] = (
    (0x0591, 0x05BD),
    (0x05BF, 0x05C7),
)

#: Characters replaced by a space. Straight quotes and geresh/gershayim are
#: deliberately excluded: they mark acronyms and abbreviations, and the
#: acronym expander must still see them.
DEFAULT_PUNCTUATION: frozenset[str] = frozenset(
    set(string.punctuation) - {"'", '"'}
) | frozenset("־–—…·")

#: Marker characters that flag an acronym (doubled) or truncation (final).
_GERSHAYIM_VARIANTS = "״“”″"
_GERESH_VARIANTS = "׳‘’′"

_TAG_RE = re.compile(r"<[^<>]*>")
_BRACKET_RE = re.compile(r"\[[^\[\]]*\]|\([^()]*\)")
_WS_RE = re.compile(r"\s+")


class RulesError(ValueError):
    """Raised for malformed or self-contradictory normalization rules."""


def canonical_marker_form(token: str) -> str:
    """Map gershayim/geresh variants (and doubled apostrophes) to '\"' / \"'\"."""
    for ch in _GERSHAYIM_VARIANTS:
        token = token.replace(ch, '"')
    for ch in _GERESH_VARIANTS:
        token = token.replace(ch, "'")
    return token.replace("''", '"')


def is_acronym_candidate(token: str) -> bool:
    """True if the token carries an acronym or truncation marker.

    A doubled marker strictly inside the token (gershayim before the final
    letter) or a single geresh-style apostrophe at the very end both count.
    """
    canon = canonical_marker_form(token)
    inner = canon[1:-1]
    if '"' in inner:
        return True
    return len(canon) >= 2 and canon.endswith("'") and canon[-2] != "'"


@dataclass(frozen=True)
class NormalizationRules:
    """Acronym/spelling tables plus code-point strip and punctuation policy."""

    acronym_map: dict[str, str] = field(default_factory=dict)
    spelling_map: dict[str, str] = field(default_factory=dict)
    strip_codepoint_ranges: tuple[tuple[int, int], ...] = DEFAULT_STRIP_RANGES
    punctuation_policy: frozenset[str] = DEFAULT_PUNCTUATION

    def __post_init__(self) -> None:
        _validate_rules(self)

    def in_strip_range(self, ch: str) -> bool:
        cp = ord(ch)
        return any(lo <= cp <= hi for lo, hi in self.strip_codepoint_ranges)

    def content_hash(self) -> str:
        """Stable hash of the full rule set, recorded in artifact provenance."""
        h = hashlib.sha256()
        for key, value in sorted(self.acronym_map.items()):
            h.update(f"A\t{key}\t{value}\n".encode("utf-8"))
        for key, value in sorted(self.spelling_map.items()):
            h.update(f"S\t{key}\t{value}\n".encode("utf-8"))
        for lo, hi in self.strip_codepoint_ranges:
            h.update(f"R\t{lo:04x}\t{hi:04x}\n".encode("utf-8"))
        h.update(("P\t" + "".join(sorted(self.punctuation_policy)) + "\n").encode("utf-8"))
        return h.hexdigest()


def _validate_rules(rules: NormalizationRules) -> None:
    # Replacement output must survive a second pass unchanged, otherwise the
    # pipeline is not idempotent.
    for kind, table in (("acronym", rules.acronym_map), ("spelling", rules.spelling_map)):
        for key, value in table.items():
            if not key or not value:
                raise RulesError(f"empty {kind} key or value: {key!r} -> {value!r}")
            for ch in value:
                if rules.in_strip_range(ch):
                    raise RulesError(
                        f"{kind} expansion {value!r} contains strippable code point U+{ord(ch):04X}"
                    )
                if ch in rules.punctuation_policy:
                    raise RulesError(f"{kind} expansion {value!r} contains punctuation {ch!r}")
            for word in value.split():
                if is_acronym_candidate(word):
                    raise RulesError(f"{kind} expansion {value!r} still contains a marker")
    for key, value in rules.spelling_map.items():
        if value != key and value in rules.spelling_map:
            raise RulesError(f"spelling chain: {key!r} -> {value!r} -> {rules.spelling_map[value]!r}")


@dataclass
class NormalizeStats:
    """Diagnostics accumulated over one normalization call."""

    unbalanced_brackets: int = 0
    acronyms_expanded: int = 0
    acronyms_unknown: int = 0
    expansion_token_delta: int = 0
    spelling_substitutions: int = 0


def strip_vocalization(text: str, rules: NormalizationRules | None = None) -> str:
    """Delete every code point inside the strip ranges, preserving the rest."""
    rules = rules or default_rules()
    return "".join(ch for ch in text if not rules.in_strip_range(ch))


def strip_punct_metadata(text: str, rules: NormalizationRules | None = None) -> str:
    return _strip_punct_metadata(text, rules or default_rules(), NormalizeStats())


_LEADING_QUOTES = "'\"" + _GERSHAYIM_VARIANTS + _GERESH_VARIANTS
_TRAILING_QUOTES = '"' + _GERSHAYIM_VARIANTS


def _strip_punct_metadata(text: str, rules: NormalizationRules, stats: NormalizeStats) -> str:
    text = _TAG_RE.sub(" ", text)
    # Bracketed editorial insertions are removed with their contents,
    # innermost first so nested brackets unwind.
    while True:
        stripped = _BRACKET_RE.sub(" ", text)
        if stripped == text:
            break
        text = stripped
    leftover = sum(text.count(ch) for ch in "[]()")
    if leftover:
        stats.unbalanced_brackets += leftover
        text = re.sub(r"[\[\]()]", " ", text)
    text = "".join(" " if ch in rules.punctuation_policy else ch for ch in text)
    # Quote characters at token edges are quotation punctuation, never
    # acronym markers (gershayim is word-internal, geresh word-final), so
    # they can go now. A final single apostrophe stays: it may mark a
    # truncation like the one in a cited speaker's title.
    tokens = []
    for token in text.split():
        token = token.lstrip(_LEADING_QUOTES).rstrip(_TRAILING_QUOTES)
        if token:
            tokens.append(token)
    return " ".join(tokens)


def expand_acronyms(text: str, rules: NormalizationRules | None = None) -> str:
    return _expand_acronyms(text, rules or default_rules(), NormalizeStats())


def _expand_acronyms(text: str, rules: NormalizationRules, stats: NormalizeStats) -> str:
    out: list[str] = []
    for token in text.split():
        canon = canonical_marker_form(token)
        expansion = rules.acronym_map.get(canon)
        if expansion is not None:
            out.extend(expansion.split())
            stats.acronyms_expanded += 1
            stats.expansion_token_delta += len(expansion.split()) - 1
        else:
            if is_acronym_candidate(canon):
                stats.acronyms_unknown += 1
            out.append(token)
    return " ".join(out)


def standardize_spelling(text: str, rules: NormalizationRules | None = None) -> str:
    return _standardize_spelling(text, rules or default_rules(), NormalizeStats())


def _standardize_spelling(text: str, rules: NormalizationRules, stats: NormalizeStats) -> str:
    # Single pass over tokens: a replacement is never itself re-replaced.
    out: list[str] = []
    for token in text.split():
        replacement = rules.spelling_map.get(token)
        if replacement is not None and replacement != token:
            stats.spelling_substitutions += 1
            out.append(replacement)
        else:
            out.append(token)
    return " ".join(out)


def normalize(text: str, rules: NormalizationRules | None = None) -> str:
    return normalize_with_stats(text, rules)[0]


def normalize_with_stats(
    text: str, rules: NormalizationRules | None = None
) -> tuple[str, NormalizeStats]:
    """Run the full cleaning pipeline and report what it did."""
    rules = rules or default_rules()
    stats = NormalizeStats()
    text = strip_vocalization(text, rules)
    text = _strip_punct_metadata(text, rules, stats)
    text = _expand_acronyms(text, rules, stats)
    text = _standardize_spelling(text, rules, stats)
    return text, stats


def load_rules(path: str | Path) -> NormalizationRules:
    """Load acronym/spelling tables from a TSV with columns kind, key, value."""
    acronyms: dict[str, str] = {}
    spellings: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:3]] != ["kind", "key", "value"]:
            raise RulesError(f"{path}: expected header 'kind<TAB>key<TAB>value'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if len(row) < 3:
                raise RulesError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            kind, key, value = row[0].strip(), row[1].strip(), row[2].strip()
            if kind == "acronym":
                table = acronyms
                key = canonical_marker_form(key)
            elif kind == "spelling":
                table = spellings
            else:
                raise RulesError(f"{path}:{lineno}: unknown kind {kind!r}")
            if key in table:
                raise RulesError(f"{path}:{lineno}: duplicate {kind} key {key!r}")
            table[key] = value
    return NormalizationRules(acronym_map=acronyms, spelling_map=spellings)


_DEFAULT_RULES: NormalizationRules | None = None


def default_rules() -> NormalizationRules:
    """The bundled starter lexicon, loaded once per process."""
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        ref = resources.files("stylo").joinpath("data/rules_default.tsv")
        with resources.as_file(ref) as path:
            _DEFAULT_RULES = load_rules(path)
    return _DEFAULT_RULES
