"""Word-level transcript alignment and disagreement refinement.

Given a base transcription and an additional one, four stages distill the
raw diff into the disagreements worth flagging:

  1. align            minimum-edit-distance word alignment (unit costs)
  2. refine           split lopsided replacements / merge fragments so the
                      paired sides match linguistically
  3. drop heuristics  discard differences that are mere transliterations
  4. lm_validate      keep a difference only when a language model prefers
                      the additional model's wording, with a look-ahead over
                      nearby dependent differences

Dropping a difference means accepting the base wording; such ops stay in
the script with ``accepted=True`` so spans keep covering both sequences.
All stages are deterministic pure functions.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, replace as _dc_replace

import numpy as np

from . import _kernels

EQUAL = "equal"
REPLACE = "replace"
DELETE = "delete"
INSERT = "insert"

_KIND_OF_CODE = {
    _kernels.OP_EQUAL: EQUAL,
    _kernels.OP_REPLACE: REPLACE,
    _kernels.OP_DELETE: DELETE,
    _kernels.OP_INSERT: INSERT,
}

DEFAULT_PAIR_THRESHOLD = 0.5
DEFAULT_LOOKAHEAD = 3
DEFAULT_LOOKAHEAD_GROUP_MAX = 4


@dataclass(frozen=True)
class DiffOp:
    """One aligned region: half-open word spans into the base and other lists."""

    kind: str
    base_span: tuple
    other_span: tuple
    accepted: bool = False

    def __post_init__(self):
        b0, b1 = self.base_span
        o0, o1 = self.other_span
        if b1 < b0 or o1 < o0:
            raise ValueError(f"negative span in {self}")
        if self.kind == EQUAL and (b1 - b0) != (o1 - o0):
            raise ValueError("equal op with unequal span lengths")
        if self.kind == INSERT and b1 != b0:
            raise ValueError("insert op with non-empty base span")
        if self.kind == DELETE and o1 != o0:
            raise ValueError("delete op with non-empty other span")
        if self.kind == REPLACE and (b1 == b0 or o1 == o0):
            raise ValueError("replace op needs both spans non-empty")

    @property
    def is_difference(self) -> bool:
        return self.kind != EQUAL and not self.accepted


@dataclass(frozen=True)
class EditScript:
    ops: tuple

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def differences(self):
        return [op for op in self.ops if op.is_difference]

    @property
    def base_len(self) -> int:
        return self.ops[-1].base_span[1] if self.ops else 0

    @property
    def other_len(self) -> int:
        return self.ops[-1].other_span[1] if self.ops else 0


def validate_script(script: EditScript, base, other) -> None:
    """Spans must tile both word lists in order; equal ops must match texts."""
    b = o = 0
    for op in script.ops:
        if op.base_span[0] != b or op.other_span[0] != o:
            raise ValueError(f"non-contiguous spans at {op}")
        b, o = op.base_span[1], op.other_span[1]
        if op.kind == EQUAL and not op.accepted:
            for x, y in zip(range(*op.base_span), range(*op.other_span)):
                if normalize_word(base[x]) != normalize_word(other[y]):
                    raise ValueError(f"equal op over differing words {base[x]!r} / {other[y]!r}")
    if b != len(base) or o != len(other):
        raise ValueError(f"script covers ({b}, {o}) of ({len(base)}, {len(other)}) words")


def normalize_word(word: str) -> str:
    """Case-fold and strip punctuation; the equality used for alignment."""
    stripped = "".join(c for c in word if not unicodedata.category(c).startswith("P"))
    return stripped.casefold()


def _coalesce(ops):
    out = []
    for op in ops:
        if (
            out
            and out[-1].kind == op.kind
            and out[-1].accepted == op.accepted
            and out[-1].base_span[1] == op.base_span[0]
            and out[-1].other_span[1] == op.other_span[0]
        ):
            out[-1] = DiffOp(
                op.kind,
                (out[-1].base_span[0], op.base_span[1]),
                (out[-1].other_span[0], op.other_span[1]),
                op.accepted,
            )
        else:
            out.append(op)
    return out


def align(base, other, normalizer=normalize_word) -> EditScript:
    """Minimum-edit-distance alignment of two word lists.

    Words are compared by their normalized text.  Backtracking prefers
    equal, then replace, then delete, then insert, so the script is unique;
    adjacent ops of one kind are coalesced.
    """
    norm_base = [normalizer(w) for w in base]
    norm_other = [normalizer(w) for w in other]
    # first-occurrence integer codes across base then other: the kernels see
    # only the equality pattern, so output is invariant under any relabeling
    codes = {}
    for w in norm_base:
        codes.setdefault(w, len(codes))
    for w in norm_other:
        codes.setdefault(w, len(codes))
    a = np.array([codes[w] for w in norm_base], dtype=np.int64)
    b = np.array([codes[w] for w in norm_other], dtype=np.int64)
    op_codes = _kernels.levenshtein_ops(a, b)

    ops = []
    i = j = 0
    for code in op_codes:
        kind = _KIND_OF_CODE[int(code)]
        if kind == EQUAL or kind == REPLACE:
            ops.append(DiffOp(kind, (i, i + 1), (j, j + 1)))
            i += 1
            j += 1
        elif kind == DELETE:
            ops.append(DiffOp(DELETE, (i, i + 1), (j, j)))
            i += 1
        else:
            ops.append(DiffOp(INSERT, (i, i), (j, j + 1)))
            j += 1
    return EditScript(_coalesce(ops))


def script_edit_distance(script: EditScript) -> int:
    """Unit-cost edit distance implied by a script (accepted ops still count)."""
    total = 0
    for op in script.ops:
        if op.kind == EQUAL:
            continue
        b = op.base_span[1] - op.base_span[0]
        o = op.other_span[1] - op.other_span[0]
        total += max(b, o)
    return total


def char_similarity(a: str, b: str) -> float:
    """Normalized LCS ratio 2*LCS/(|a|+|b|) over normalized characters."""
    na, nb = normalize_word(a), normalize_word(b)
    if not na and not nb:
        return 1.0
    if not na or not nb:
        return 0.0
    xs = np.array([ord(c) for c in na], dtype=np.int64)
    ys = np.array([ord(c) for c in nb], dtype=np.int64)
    return 2.0 * int(_kernels.lcs_length(xs, ys)) / (len(na) + len(nb))


def _pair_words(a_words, b_words, threshold):
    """Order-preserving pairing maximizing summed similarity above threshold.

    Returns a list of (i, j) pairs; unpaired indices become deletes/inserts.
    """
    m, n = len(a_words), len(b_words)
    sim = [[char_similarity(a_words[i], b_words[j]) for j in range(n)] for i in range(m)]
    score = [[0.0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            best = score[i - 1][j]
            if score[i][j - 1] > best:
                best = score[i][j - 1]
            if sim[i - 1][j - 1] >= threshold:
                diag = score[i - 1][j - 1] + sim[i - 1][j - 1]
                if diag > best:
                    best = diag
            score[i][j] = best
    pairs = []
    i, j = m, n
    while i > 0 and j > 0:
        if sim[i - 1][j - 1] >= threshold and score[i][j] == score[i - 1][j - 1] + sim[i - 1][j - 1]:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif score[i][j] == score[i - 1][j]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def _split_replace(op, base, other, threshold):
    """Decompose a lopsided replace into paired replaces plus deletes/inserts."""
    b0, b1 = op.base_span
    o0, o1 = op.other_span
    pairs = _pair_words(base[b0:b1], other[o0:o1], threshold)
    ops = []
    bi, oj = b0, o0
    for (pi, pj) in pairs:
        abs_i, abs_j = b0 + pi, o0 + pj
        if bi < abs_i:
            ops.append(DiffOp(DELETE, (bi, abs_i), (oj, oj)))
        if oj < abs_j:
            ops.append(DiffOp(INSERT, (abs_i, abs_i), (oj, abs_j)))
        kind = EQUAL if normalize_word(base[abs_i]) == normalize_word(other[abs_j]) else REPLACE
        ops.append(DiffOp(kind, (abs_i, abs_i + 1), (abs_j, abs_j + 1)))
        bi, oj = abs_i + 1, abs_j + 1
    if bi < b1:
        ops.append(DiffOp(DELETE, (bi, b1), (oj, oj)))
    if oj < o1:
        ops.append(DiffOp(INSERT, (b1, b1), (oj, o1)))
    return ops


def _side_similarity(base_words, other_words):
    return char_similarity("".join(base_words), "".join(other_words))


def refine(script: EditScript, base, other, pair_threshold: float = DEFAULT_PAIR_THRESHOLD) -> EditScript:
    """Split lopsided replaces, then merge adjacent fragments into them.

    Splitting pairs words across the two sides of an unbalanced replace by
    character similarity; words left unpaired become plain deletes/inserts.
    Merging absorbs a neighboring insert/delete into a replace when gluing
    its words onto the matching side (separators removed) raises the sides'
    character similarity.  Both source word sequences are preserved exactly.
    """
    ops = []
    for op in script.ops:
        b = op.base_span[1] - op.base_span[0]
        o = op.other_span[1] - op.other_span[0]
        if op.kind == REPLACE and not op.accepted and b != o:
            ops.extend(_split_replace(op, base, other, pair_threshold))
        else:
            ops.append(op)

    changed = True
    while changed:
        changed = False
        for idx, op in enumerate(ops):
            if op.kind != REPLACE or op.accepted:
                continue
            base_side = base[op.base_span[0] : op.base_span[1]]
            other_side = other[op.other_span[0] : op.other_span[1]]
            current = _side_similarity(base_side, other_side)
            # try absorbing the previous / next insert-or-delete neighbor
            for nidx in (idx - 1, idx + 1):
                if not (0 <= nidx < len(ops)):
                    continue
                neigh = ops[nidx]
                if neigh.kind not in (DELETE, INSERT) or neigh.accepted:
                    continue
                if neigh.kind == DELETE:
                    extra = base[neigh.base_span[0] : neigh.base_span[1]]
                    new_base = extra + base_side if nidx < idx else base_side + extra
                    merged = _side_similarity(new_base, other_side)
                else:
                    extra = other[neigh.other_span[0] : neigh.other_span[1]]
                    new_other = extra + other_side if nidx < idx else other_side + extra
                    merged = _side_similarity(base_side, new_other)
                if merged > current:
                    lo, hi = (nidx, idx) if nidx < idx else (idx, nidx)
                    fused = DiffOp(
                        REPLACE,
                        (ops[lo].base_span[0], ops[hi].base_span[1]),
                        (ops[lo].other_span[0], ops[hi].other_span[1]),
                    )
                    ops[lo : hi + 1] = [fused]
                    changed = True
                    break
            if changed:
                break
    return EditScript(_coalesce(ops))


def _script_class(word: str):
    """'latin' / 'cyrillic' when every character is a letter of that script."""
    seen = None
    for c in word:
        if not c.isalpha():
            return None
        cp = ord(c)
        if (0x0041 <= cp <= 0x005A) or (0x0061 <= cp <= 0x007A) or (0x00C0 <= cp <= 0x024F):
            cls = "latin"
        elif 0x0400 <= cp <= 0x052F:
            cls = "cyrillic"
        else:
            return None
        if seen is None:
            seen = cls
        elif seen != cls:
            return None
    return seen


def is_transliteration_pair(base_words, other_words) -> bool:
    """True when one side is pure Latin letters and the other pure Cyrillic."""
    a = {_script_class(w) for w in base_words}
    b = {_script_class(w) for w in other_words}
    return (a == {"latin"} and b == {"cyrillic"}) or (a == {"cyrillic"} and b == {"latin"})


DEFAULT_HEURISTICS = (is_transliteration_pair,)


def drop_script_mismatch_diffs(script: EditScript, base, other, heuristics=DEFAULT_HEURISTICS) -> EditScript:
    """Accept the base variant for replaces matched by any drop heuristic.

    The stock heuristic drops Latin-vs-Cyrillic replacements (most are
    transliterations where both spellings are fine).  Additional heuristics
    plug in as callables taking (base_side_words, other_side_words).
    """
    ops = []
    for op in script.ops:
        if op.kind == REPLACE and not op.accepted:
            base_side = base[op.base_span[0] : op.base_span[1]]
            other_side = other[op.other_span[0] : op.other_span[1]]
            if any(h(base_side, other_side) for h in heuristics):
                op = _dc_replace(op, accepted=True)
        ops.append(op)
    return EditScript(ops)


def _candidate_sequence(base, chosen_ops):
    """Base word list with the other-model variant spliced in for chosen ops."""
    events = sorted(chosen_ops, key=lambda pair: pair[0].base_span[0])
    out = []
    pos = 0
    for op, other_words in events:
        b0, b1 = op.base_span
        out.extend(base[pos:b0])
        out.extend(other_words)
        pos = b1
    out.extend(base[pos:])
    return out


def lm_validate(
    script: EditScript,
    base,
    other,
    lm,
    lookahead: int = DEFAULT_LOOKAHEAD,
    lookahead_group_max: int = DEFAULT_LOOKAHEAD_GROUP_MAX,
) -> EditScript:
    """Drop differences whose base wording scores at least as well as the
    other model's variant; nearby differences are decided jointly.

    Differences at most `lookahead` base words apart form a dependency
    group; all joint substitution assignments of a group (up to
    2**lookahead_group_max) are scored and the argmax kept, ties preferring
    the base wording.  Oversized groups fall back to per-difference
    decisions.
    """
    ops = list(script.ops)
    diff_idx = [i for i, op in enumerate(ops) if op.is_difference]
    if not diff_idx:
        return script

    groups = [[diff_idx[0]]]
    for i in diff_idx[1:]:
        gap = ops[i].base_span[0] - ops[groups[-1][-1]].base_span[1]
        if gap <= lookahead:
            groups[-1].append(i)
        else:
            groups.append([i])

    for group in groups:
        if len(group) <= lookahead_group_max:
            keep_mask = _best_joint_assignment(ops, group, base, other, lm)
        else:
            keep_mask = [
                _best_joint_assignment(ops, [i], base, other, lm)[0] for i in group
            ]
        for i, keep in zip(group, keep_mask):
            if not keep:
                ops[i] = _dc_replace(ops[i], accepted=True)
    return EditScript(ops)


def _best_joint_assignment(ops, group, base, other, lm):
    """Score all 2^k substitution patterns; bit set = use the other variant."""
    k = len(group)
    best_score = None
    best_mask = 0
    for mask in range(1 << k):
        chosen = []
        for bit, i in enumerate(group):
            if mask & (1 << bit):
                op = ops[i]
                chosen.append((op, other[op.other_span[0] : op.other_span[1]]))
        candidate = _candidate_sequence(base, chosen)
        score = lm.score(candidate)
        if best_score is None or score > best_score:
            best_score = score
            best_mask = mask
    return [bool(best_mask & (1 << bit)) for bit in range(k)]
