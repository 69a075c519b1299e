"""Recognizer invocation and UTF-8-safe token-to-word assembly.

Recognizer backends emit tokens as raw byte sequences (a single code point
may be split across neighboring tokens) with log-probabilities.  Words are
recovered from the decoded concatenation, each word keeping the contiguous
token range it came from and a score reduced from its token log-probs.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .audio import AudioBuffer
from .backends import BackendError, ProtocolError
from .segmentation import Chunk

REDUCTIONS = ("min", "sum", "mean")


@dataclass(frozen=True)
class TokenPiece:
    """Raw token bytes and the log-probability the recognizer assigned them."""

    data: bytes
    logprob: float

    def __post_init__(self):
        if not self.data:
            raise ValueError("token bytes must be non-empty")
        if not (math.isfinite(self.logprob) and self.logprob <= 0.0):
            raise ValueError(f"token logprob must be finite and <= 0, got {self.logprob}")


@dataclass(frozen=True)
class Word:
    text: str
    token_range: tuple  # half-open [lo, hi) into the owning token list
    score: float
    start_s: float | None = None
    end_s: float | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("word text must be non-empty")
        lo, hi = self.token_range
        if hi <= lo:
            raise ValueError(f"word token range {self.token_range} is empty")
        if self.start_s is not None and self.end_s is not None and self.end_s < self.start_s:
            raise ValueError("word end before start")


@dataclass(frozen=True)
class Transcription:
    words: tuple
    tokens: tuple
    chunk_id: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def text(self) -> str:
        return " ".join(w.text for w in self.words)

    def word_texts(self):
        return [w.text for w in self.words]

    def scores(self):
        return [w.score for w in self.words]


def validate_transcription(t: Transcription) -> None:
    """Check the word/token bookkeeping: ordered disjoint cover, text match.

    Content comparison ignores separators: transcriptions merged across
    chunks have no boundary whitespace in their token bytes.
    """
    pos = 0
    for word in t.words:
        lo, hi = word.token_range
        if lo != pos:
            raise ProtocolError(f"token ranges must tile the token list; gap at {pos}")
        if hi <= lo or hi > len(t.tokens):
            raise ProtocolError(f"bad token range {word.token_range}")
        pos = hi
    if t.words and pos != len(t.tokens):
        raise ProtocolError(f"trailing tokens not owned by any word: {pos}..{len(t.tokens)}")
    joined = b"".join(tok.data for tok in t.tokens).decode("utf-8")
    if "".join(joined.split()) != "".join(w.text for w in t.words):
        raise ProtocolError("word texts disagree with decoded token bytes")


def _char_byte_offsets(text: str):
    offsets = [0]
    for ch in text:
        offsets.append(offsets[-1] + len(ch.encode("utf-8")))
    return offsets


def group_tokens_into_words(tokens) -> list:
    """Partition a token list into whitespace-delimited words.

    The concatenated bytes are decoded as UTF-8 (an invalid overall stream is
    an error; partial code points at token boundaries are fine).  Each word's
    range starts at the token holding its first byte, so a code point split
    across two tokens pulls both into the word that owns it; separator-only
    bytes stay with the preceding word (leading separators with the first).
    Ranges are contiguous, disjoint and cover every token whenever there are
    at least as many tokens as words; if a single token carries several whole
    words (no recognizer tokenizer does this, but arbitrary byte splits can),
    the surplus words share their carrier token's range.
    """
    tokens = list(tokens)
    if not tokens:
        return []
    blob = b"".join(t.data for t in tokens)
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValueError(f"concatenated token bytes are not valid UTF-8: {exc}") from exc

    words = []
    first_char = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < len(text) and not text[j].isspace():
            j += 1
        words.append(text[i:j])
        first_char.append(i)
        i = j
    if not words:
        return []

    byte_of_char = _char_byte_offsets(text)
    token_start = [0]
    for tok in tokens:
        token_start.append(token_start[-1] + len(tok.data))
    # token index containing a given byte offset
    first_token = [
        bisect.bisect_right(token_start, byte_of_char[c]) - 1 for c in first_char
    ]

    n_words, n_tokens = len(words), len(tokens)
    bounds = [0] * (n_words + 1)
    bounds[n_words] = n_tokens
    for w in range(1, n_words):
        bounds[w] = max(first_token[w], bounds[w - 1] + 1)
    if n_tokens >= n_words:
        for w in range(n_words - 1, 0, -1):
            bounds[w] = min(bounds[w], bounds[w + 1] - 1)
        return [(words[w], (bounds[w], bounds[w + 1])) for w in range(n_words)]
    # degenerate: more words than tokens; clamp and let carrier tokens be shared
    grouped = []
    for w in range(n_words):
        lo = min(bounds[w], n_tokens - 1)
        hi = max(min(bounds[w + 1], n_tokens), lo + 1)
        grouped.append((words[w], (lo, hi)))
    return grouped


def word_score(logprobs, reduction: str = "min") -> float:
    """Reduce a word's token log-probabilities to a single score."""
    logprobs = list(logprobs)
    if not logprobs:
        raise ValueError("cannot score a word with no token log-probabilities")
    if any(lp > 0 for lp in logprobs):
        raise ValueError("log-probabilities must be <= 0")
    if reduction == "min":
        return min(logprobs)
    if reduction == "sum":
        return sum(logprobs)
    if reduction == "mean":
        return sum(logprobs) / len(logprobs)
    raise ValueError(f"unknown reduction {reduction!r}; pick one of {REDUCTIONS}")


def recognize(
    buffer: AudioBuffer,
    chunk: Chunk,
    backend,
    reduction: str = "min",
    chunk_id: int | None = None,
) -> Transcription:
    """Run the recognizer on one chunk and assemble a Transcription.

    Special tokens flagged by the backend are excluded before grouping.
    Token times arrive chunk-relative and leave as absolute seconds.
    """
    if chunk.start_s < 0 or chunk.end_s > buffer.duration_s + 1e-6:
        raise ValueError(f"chunk ({chunk.start_s}, {chunk.end_s}) outside the buffer span")
    piece = buffer.slice_seconds(chunk.start_s, chunk.end_s)
    try:
        raw_tokens = backend.recognize_chunk(piece, chunk.start_s, chunk.end_s)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"recognizer {type(backend).__name__} failed: {exc}") from exc

    text_tokens = [t for t in raw_tokens if not t.special]
    try:
        pieces = [TokenPiece(t.data, t.logprob) for t in text_tokens]
        grouped = group_tokens_into_words(pieces)
    except ValueError as exc:
        raise ProtocolError(f"recognizer output rejected: {exc}") from exc
    if not grouped:
        # nothing but separators (or nothing at all): no content to keep
        return Transcription(words=(), tokens=(), chunk_id=chunk_id)

    words = []
    for text, (lo, hi) in grouped:
        starts = [text_tokens[i].start_s for i in range(lo, hi) if text_tokens[i].start_s is not None]
        ends = [text_tokens[i].end_s for i in range(lo, hi) if text_tokens[i].end_s is not None]
        words.append(
            Word(
                text=text,
                token_range=(lo, hi),
                score=word_score([pieces[i].logprob for i in range(lo, hi)], reduction),
                start_s=chunk.start_s + min(starts) if starts else None,
                end_s=chunk.start_s + max(ends) if ends else None,
            )
        )
    return Transcription(words=tuple(words), tokens=tuple(pieces), chunk_id=chunk_id)


def merge_transcriptions(parts) -> Transcription:
    """Concatenate per-chunk transcriptions in order, rebasing token ranges."""
    words = []
    tokens = []
    for part in parts:
        shift = len(tokens)
        tokens.extend(part.tokens)
        for w in part.words:
            lo, hi = w.token_range
            words.append(
                Word(
                    text=w.text,
                    token_range=(lo + shift, hi + shift),
                    score=w.score,
                    start_s=w.start_s,
                    end_s=w.end_s,
                )
            )
    return Transcription(words=tuple(words), tokens=tuple(tokens), chunk_id=None)
