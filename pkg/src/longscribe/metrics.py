"""Evaluation: WER, per-word error targets and uncertainty quality metrics.

Error targets and WER come from one shared alignment per (ref, hyp) pair so
the counts stay mutually consistent.  Uncertainty quality is summarized by
two ratios that trace a Pareto frontier: how many words were flagged, and
how many of the actually wrong words were caught.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .alignment import DELETE, INSERT, REPLACE, align, normalize_word
from .uncertainty import UncertaintyMask, mask_from_scores


@dataclass(frozen=True)
class EvalReport:
    wer: float
    n_ref_words: int
    n_hyp_words: int
    per_word_correct: tuple
    missed_ref_words: int

    def __post_init__(self):
        if self.wer < 0:
            raise ValueError("wer cannot be negative")


@dataclass(frozen=True)
class UncertaintyPoint:
    uncertainty_ratio: float
    error_recall: float
    threshold: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.uncertainty_ratio <= 1.0 and 0.0 <= self.error_recall <= 1.0):
            raise ValueError(f"ratios must lie in [0, 1]: {self}")


def _identity(word: str) -> str:
    return word


def wer(ref, hyp, normalize: bool = True) -> float:
    """Word error rate: edit distance / len(ref), on normalized text."""
    ref, hyp = list(ref), list(hyp)
    if not ref:
        raise ValueError("reference must contain at least one word")
    norm = normalize_word if normalize else _identity
    codes = {}
    for w in ref:
        codes.setdefault(norm(w), len(codes))
    for w in hyp:
        codes.setdefault(norm(w), len(codes))
    a = np.array([codes[norm(w)] for w in ref], dtype=np.int64)
    b = np.array([codes[norm(w)] for w in hyp], dtype=np.int64)
    return int(_kernels.levenshtein_distance(a, b)) / len(ref)


def word_error_targets(ref, hyp, normalize: bool = True):
    """Boolean per hyp word: True where the word is wrong (replace or insert).

    Reference words the hypothesis dropped cannot be marked on the
    hypothesis side; they are excluded here and reported as
    missed_ref_words by evaluate_transcript.
    """
    return _alignment_targets(ref, hyp, normalize)[0]


def _alignment_targets(ref, hyp, normalize: bool = True):
    norm = normalize_word if normalize else _identity
    script = align(list(ref), list(hyp), normalizer=norm)
    incorrect = np.zeros(len(hyp), dtype=bool)
    missed = 0
    distance = 0
    for op in script.ops:
        span = op.other_span
        if op.kind == REPLACE:
            incorrect[span[0] : span[1]] = True
            distance += max(op.base_span[1] - op.base_span[0], span[1] - span[0])
        elif op.kind == INSERT:
            incorrect[span[0] : span[1]] = True
            distance += span[1] - span[0]
        elif op.kind == DELETE:
            missed += op.base_span[1] - op.base_span[0]
            distance += op.base_span[1] - op.base_span[0]
    return incorrect, missed, distance


def evaluate_transcript(ref, hyp, normalize: bool = True) -> EvalReport:
    """WER plus per-word targets, all derived from a single alignment."""
    ref, hyp = list(ref), list(hyp)
    if not ref:
        raise ValueError("reference must contain at least one word")
    incorrect, missed, distance = _alignment_targets(ref, hyp, normalize)
    return EvalReport(
        wer=distance / len(ref),
        n_ref_words=len(ref),
        n_hyp_words=len(hyp),
        per_word_correct=tuple(bool(x) for x in ~incorrect),
        missed_ref_words=missed,
    )


def uncertainty_report(mask: UncertaintyMask, targets) -> UncertaintyPoint:
    """Fraction of words flagged, and fraction of wrong words caught.

    With zero wrong words recall is defined as 1.0 so aggregation over many
    files never divides by zero.
    """
    targets = np.asarray(targets, dtype=bool)
    if len(mask) != len(targets):
        raise ValueError(f"mask has {len(mask)} flags, targets {len(targets)}")
    n = len(targets)
    ratio = float(mask.uncertain_count / n) if n else 0.0
    n_errors = int(np.count_nonzero(targets))
    if n_errors == 0:
        recall = 1.0
    else:
        recall = float(np.count_nonzero(mask.flags & targets) / n_errors)
    return UncertaintyPoint(uncertainty_ratio=ratio, error_recall=recall)


def score_sweep(transcription, targets, thresholds):
    """One UncertaintyPoint per threshold via score masking."""
    thresholds = list(thresholds)
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")
    points = []
    for thr in thresholds:
        mask = mask_from_scores(transcription, thr)
        point = uncertainty_report(mask, targets)
        points.append(
            UncertaintyPoint(
                uncertainty_ratio=point.uncertainty_ratio,
                error_recall=point.error_recall,
                threshold=thr,
            )
        )
    return points
