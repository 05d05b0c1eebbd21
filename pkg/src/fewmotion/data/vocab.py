"""Closed prompt vocabulary and tokenization.

Prompts are unordered bags of known words; tokenize canonicalizes them to
a fixed-length id sequence ordered by category (shape, color, background,
motion) and padded with id 0. Two-word motion names ("slide right") are
recognized as single tokens.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

PAD = "<pad>"
SHAPES = ["circle", "square", "triangle"]
COLORS = ["red", "green", "blue", "yellow", "magenta", "cyan"]
BACKGROUNDS = ["dark", "light", "gradient"]
MOTIONS = ["slide_right", "slide_down", "grow", "shrink", "bounce", "blink"]
DEFAULT_BACKGROUND = "dark"

VOCAB = [PAD] + SHAPES + COLORS + BACKGROUNDS + MOTIONS
VOCAB_SIZE = len(VOCAB)
MAX_TOKENS = 6

_ID = {w: i for i, w in enumerate(VOCAB)}
_PHRASES = {("slide", "right"): "slide_right", ("slide", "down"): "slide_down"}


def token_id(word: str) -> int:
    if word not in _ID:
        raise ValidationError(f"unknown word {word!r}; vocabulary: {', '.join(VOCAB[1:])}")
    return _ID[word]


def tokenize(prompt: str) -> np.ndarray:
    """Canonical fixed-length id sequence for a prompt string.

    Empty input produces the all-padding (unconditional) sequence. The
    background slot defaults to "dark" whenever any content word is
    present but no background word is given.
    """
    words = prompt.replace(",", " ").split()
    merged: list[str] = []
    i = 0
    while i < len(words):
        pair = tuple(words[i:i + 2])
        if pair in _PHRASES:
            merged.append(_PHRASES[pair])
            i += 2
        else:
            merged.append(words[i])
            i += 1
    shape = [w for w in merged if w in SHAPES]
    color = [w for w in merged if w in COLORS]
    bg = [w for w in merged if w in BACKGROUNDS]
    motion = [w for w in merged if w in MOTIONS]
    known = set(shape) | set(color) | set(bg) | set(motion)
    unknown = [w for w in merged if w not in known]
    if unknown:
        raise ValidationError(
            f"unknown word {unknown[0]!r}; vocabulary: {', '.join(VOCAB[1:])}")
    if merged and not bg:
        bg = [DEFAULT_BACKGROUND]
    ordered = sorted(shape) + sorted(color) + sorted(bg) + sorted(motion)
    if len(ordered) > MAX_TOKENS:
        raise ValidationError(f"prompt has {len(ordered)} tokens, max {MAX_TOKENS}")
    ids = [_ID[w] for w in ordered] + [0] * (MAX_TOKENS - len(ordered))
    return np.array(ids, dtype=np.int64)


def untokenize(ids) -> str:
    """Inverse of tokenize on canonical sequences (pads dropped)."""
    return " ".join(VOCAB[int(i)] for i in ids if int(i) != 0)


def unconditional() -> np.ndarray:
    return np.zeros(MAX_TOKENS, dtype=np.int64)
