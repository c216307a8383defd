"""Class labels for the six trainable source categories."""

from __future__ import annotations

from enum import Enum


class ClassLabel(str, Enum):
    MISHNAH = "Mishnah"
    MIDRASH_HALAKHAH = "MidrashHalakhah"
    JERUSALEM_TALMUD = "JerusalemTalmud"
    BABYLONIAN_TALMUD = "BabylonianTalmud"
    MIDRASH_AGGADAH = "MidrashAggadah"
    TANHUMA = "Tanhuma"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


#: Canonical ordering of the six trainable classes. Unknown is reserved for
#: unlabeled inference input and never appears in training data.
TRAIN_CLASSES: tuple[ClassLabel, ...] = (
    ClassLabel.MISHNAH,
    ClassLabel.MIDRASH_HALAKHAH,
    ClassLabel.JERUSALEM_TALMUD,
    ClassLabel.BABYLONIAN_TALMUD,
    ClassLabel.MIDRASH_AGGADAH,
    ClassLabel.TANHUMA,
)

_ALIASES = {label.value.lower(): label for label in ClassLabel}


def parse_label(text: str) -> ClassLabel:
    """Parse a class label, case-insensitively. Raises ValueError if unknown."""
    try:
        return _ALIASES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown class label: {text!r}") from None
