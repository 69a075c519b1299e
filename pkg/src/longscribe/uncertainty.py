"""Per-word uncertainty masks: score thresholding, model disagreement, TTA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import DELETE, INSERT, REPLACE, EditScript, align, refine
from .recognition import Transcription

METHODS = ("score_threshold", "disagreement", "tta", "ensemble")


@dataclass(frozen=True)
class UncertaintyMask:
    """One boolean per base-transcription word; True marks an uncertain word."""

    flags: np.ndarray
    method: str

    def __post_init__(self):
        object.__setattr__(self, "flags", np.asarray(self.flags, dtype=bool))
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")

    def __len__(self):
        return len(self.flags)

    @property
    def uncertain_count(self) -> int:
        return int(np.count_nonzero(self.flags))


def mask_from_scores(transcription: Transcription, threshold: float) -> UncertaintyMask:
    """Uncertain iff the word's score falls below the threshold."""
    scores = np.array([w.score for w in transcription.words], dtype=np.float64)
    if scores.size and not np.all(np.isfinite(scores)):
        raise ValueError("word scores must be finite")
    return UncertaintyMask(scores < threshold, "score_threshold")


def mask_from_disagreement(
    script: EditScript, base_len: int, flag_deletes: bool = True
) -> UncertaintyMask:
    """Flag base words covered by unaccepted replace (and delete) ops.

    Insertions exist only on the other model's side and cannot be flagged
    here; count them via other_only_word_count for diagnostics.
    """
    if script.ops and script.base_len != base_len:
        raise ValueError(f"script covers {script.base_len} base words, mask needs {base_len}")
    flags = np.zeros(base_len, dtype=bool)
    for op in script.differences():
        if op.kind == REPLACE or (flag_deletes and op.kind == DELETE):
            flags[op.base_span[0] : op.base_span[1]] = True
    return UncertaintyMask(flags, "disagreement")


def other_only_word_count(script: EditScript) -> int:
    """Words the other model produced with no base counterpart (insertions)."""
    return sum(
        op.other_span[1] - op.other_span[0]
        for op in script.differences()
        if op.kind == INSERT
    )


def mask_from_tta(
    base: Transcription, stretched: Transcription, refine_first: bool = False
) -> UncertaintyMask:
    """Disagreement between transcripts of the original and stretched audio."""
    base_words = base.word_texts()
    other_words = stretched.word_texts()
    script = align(base_words, other_words)
    if refine_first:
        script = refine(script, base_words, other_words)
    mask = mask_from_disagreement(script, len(base_words))
    return UncertaintyMask(mask.flags, "tta")


def ensemble_masks(masks) -> UncertaintyMask:
    """Element-wise OR: uncertain when any member mask says so."""
    masks = list(masks)
    if not masks:
        raise ValueError("need at least one mask")
    length = len(masks[0])
    for m in masks[1:]:
        if len(m) != length:
            raise ValueError(f"mask length mismatch: {len(m)} vs {length}")
    combined = np.zeros(length, dtype=bool)
    for m in masks:
        combined |= m.flags
    return UncertaintyMask(combined, "ensemble")
