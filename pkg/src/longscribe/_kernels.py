"""Hot numeric kernels, each with a numba-jitted loop and a pure-numpy twin.

The jitted path is used whenever numba imports cleanly; setting the
environment variable ``LONGSCRIBE_NO_NUMBA=1`` before import forces the
numpy path instead.  ``benchmarks/bench_kernels.py`` times the two side by
side, and the test suite asserts they produce identical results.

Word-level edit distance kernels operate on integer code arrays (callers
map words to codes), so results depend only on the equality pattern of the
inputs.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("LONGSCRIBE_NO_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via LONGSCRIBE_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

# Edit operation codes shared by the backtrack kernels and alignment code.
OP_EQUAL = 0
OP_REPLACE = 1
OP_DELETE = 2
OP_INSERT = 3


# ---------------------------------------------------------------------------
# Levenshtein distance (unit costs)
# ---------------------------------------------------------------------------

def _lev_distance_loop(a, b):
    m = a.shape[0]
    n = b.shape[0]
    if m == 0:
        return n
    if n == 0:
        return m
    prev = np.empty(n + 1, dtype=np.int64)
    cur = np.empty(n + 1, dtype=np.int64)
    for j in range(n + 1):
        prev[j] = j
    for i in range(1, m + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, n + 1):
            best = prev[j - 1] if ai == b[j - 1] else prev[j - 1] + 1
            up = prev[j] + 1
            if up < best:
                best = up
            left = cur[j - 1] + 1
            if left < best:
                best = left
            cur[j] = best
        prev, cur = cur, prev
    return prev[n]


def _lev_rows_np(a, b):
    """Yield the full (m+1, n+1) DP matrix using vectorized row updates.

    The in-row dependency D[i][j-1] is eliminated with the prefix-minimum
    identity D[i][j] = min_{k<=j} (E[k] + j - k), where E carries the two
    row-independent candidates.
    """
    m = a.shape[0]
    n = b.shape[0]
    mat = np.empty((m + 1, n + 1), dtype=np.int32)
    col = np.arange(n + 1, dtype=np.int32)
    mat[0] = col
    e = np.empty(n + 1, dtype=np.int32)
    for i in range(1, m + 1):
        e[0] = i
        neq = (b != a[i - 1]).astype(np.int32)
        np.minimum(mat[i - 1, :-1] + neq, mat[i - 1, 1:] + 1, out=e[1:])
        mat[i] = np.minimum.accumulate(e - col) + col
    return mat


def _lev_distance_np(a, b):
    if a.shape[0] == 0:
        return int(b.shape[0])
    if b.shape[0] == 0:
        return int(a.shape[0])
    return int(_lev_rows_np(a, b)[-1, -1])


# ---------------------------------------------------------------------------
# Levenshtein backtrack: forward-ordered op codes
# ---------------------------------------------------------------------------

def _lev_backtrack_loop(a, b):
    m = a.shape[0]
    n = b.shape[0]
    mat = np.empty((m + 1, n + 1), dtype=np.int32)
    for j in range(n + 1):
        mat[0, j] = j
    for i in range(1, m + 1):
        mat[i, 0] = i
        ai = a[i - 1]
        for j in range(1, n + 1):
            best = mat[i - 1, j - 1] if ai == b[j - 1] else mat[i - 1, j - 1] + 1
            up = mat[i - 1, j] + 1
            if up < best:
                best = up
            left = mat[i, j - 1] + 1
            if left < best:
                best = left
            mat[i, j] = best
    ops = np.empty(m + n, dtype=np.int8)
    pos = m + n
    i = m
    j = n
    while i > 0 or j > 0:
        pos -= 1
        # tie order: equal, replace, delete, insert
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and mat[i, j] == mat[i - 1, j - 1]:
            ops[pos] = OP_EQUAL
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and mat[i, j] == mat[i - 1, j - 1] + 1:
            ops[pos] = OP_REPLACE
            i -= 1
            j -= 1
        elif i > 0 and mat[i, j] == mat[i - 1, j] + 1:
            ops[pos] = OP_DELETE
            i -= 1
        else:
            ops[pos] = OP_INSERT
            j -= 1
    return ops[pos:]


def _backtrack_from_matrix(a, b, mat):
    m = a.shape[0]
    n = b.shape[0]
    ops = np.empty(m + n, dtype=np.int8)
    pos = m + n
    i = m
    j = n
    while i > 0 or j > 0:
        pos -= 1
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and mat[i, j] == mat[i - 1, j - 1]:
            ops[pos] = OP_EQUAL
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and mat[i, j] == mat[i - 1, j - 1] + 1:
            ops[pos] = OP_REPLACE
            i -= 1
            j -= 1
        elif i > 0 and mat[i, j] == mat[i - 1, j] + 1:
            ops[pos] = OP_DELETE
            i -= 1
        else:
            ops[pos] = OP_INSERT
            j -= 1
    return ops[pos:]


def _lev_backtrack_np(a, b):
    m = a.shape[0]
    n = b.shape[0]
    if m == 0:
        return np.full(n, OP_INSERT, dtype=np.int8)
    if n == 0:
        return np.full(m, OP_DELETE, dtype=np.int8)
    return _backtrack_from_matrix(a, b, _lev_rows_np(a, b))


# ---------------------------------------------------------------------------
# Longest common subsequence length (for character-level similarity)
# ---------------------------------------------------------------------------

def _lcs_length_loop(a, b):
    m = a.shape[0]
    n = b.shape[0]
    if m == 0 or n == 0:
        return 0
    prev = np.zeros(n + 1, dtype=np.int64)
    cur = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, m + 1):
        ai = a[i - 1]
        cur[0] = 0
        for j in range(1, n + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                best = prev[j]
                if cur[j - 1] > best:
                    best = cur[j - 1]
                cur[j] = best
        prev, cur = cur, prev
    return prev[n]


def _lcs_length_np(a, b):
    m = a.shape[0]
    n = b.shape[0]
    if m == 0 or n == 0:
        return 0
    prev = np.zeros(n + 1, dtype=np.int32)
    e = np.empty(n + 1, dtype=np.int32)
    for i in range(1, m + 1):
        eq = (b == a[i - 1]).astype(np.int32)
        e[0] = 0
        np.maximum(prev[:-1] + eq, prev[1:], out=e[1:])
        prev = np.maximum.accumulate(e)
    return int(prev[n])


# ---------------------------------------------------------------------------
# Hysteresis binarization over a probability series
# ---------------------------------------------------------------------------

def _hysteresis_loop(probs, onset, offset):
    n = probs.shape[0]
    starts = np.empty(n // 2 + 1, dtype=np.int64)
    ends = np.empty(n // 2 + 1, dtype=np.int64)
    count = 0
    open_ = False
    for i in range(n):
        if open_:
            if probs[i] < offset:
                ends[count] = i
                count += 1
                open_ = False
        else:
            if probs[i] >= onset:
                starts[count] = i
                open_ = True
    if open_:
        ends[count] = n
        count += 1
    return starts[:count], ends[:count]


def _hysteresis_np(probs, onset, offset):
    n = probs.shape[0]
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    event = np.zeros(n, dtype=np.int8)
    event[probs >= onset] = 1
    event[probs < offset] = -1
    idx = np.where(event != 0, np.arange(n), -1)
    last = np.maximum.accumulate(idx)
    state = np.where(last >= 0, event[np.maximum(last, 0)], -1) == 1
    prev = np.concatenate(([False], state[:-1]))
    starts = np.flatnonzero(state & ~prev).astype(np.int64)
    ends = np.flatnonzero(~state & prev).astype(np.int64)
    if state[-1]:
        ends = np.concatenate([ends, [n]])
    return starts, ends


# ---------------------------------------------------------------------------
# Polyphase FIR resampling
# ---------------------------------------------------------------------------

def _polyphase_loop(x, h, up, down, out_len, delay):
    nx = x.shape[0]
    nh = h.shape[0]
    out = np.zeros(out_len, dtype=np.float64)
    for k in range(out_len):
        m = k * down + delay
        j_lo = (m - nh + up) // up  # ceil((m - nh + 1) / up)
        if j_lo < 0:
            j_lo = 0
        j_hi = m // up
        if j_hi >= nx:
            j_hi = nx - 1
        acc = 0.0
        for j in range(j_lo, j_hi + 1):
            acc += h[m - j * up] * x[j]
        out[k] = acc
    return out


def _polyphase_np(x, h, up, down, out_len, delay):
    """Per-phase gathered dot products; touches only the needed outputs.

    Output k reads up-rate position m = k*down + delay, i.e. phase m % up
    of the filter against input samples ending at m // up.
    """
    if out_len == 0:
        return np.zeros(0, dtype=np.float64)
    taps_p = -(-h.shape[0] // up)
    h_pad = np.zeros(taps_p * up, dtype=np.float64)
    h_pad[: h.shape[0]] = h
    m = delay + down * np.arange(out_len)
    phase = m % up
    j = m // up
    # pad so every backward window x[j-taps_p+1 .. j] exists, incl. the tail
    pad_right = max(int(j.max()) - x.shape[0] + 1, 0) + 1
    xp = np.concatenate([np.zeros(taps_p - 1), x, np.zeros(pad_right)])
    windows = np.lib.stride_tricks.sliding_window_view(xp, taps_p)
    out = np.empty(out_len, dtype=np.float64)
    for p in range(up):
        sel = np.nonzero(phase == p)[0]
        if sel.size == 0:
            continue
        coeffs = h_pad[p::up][::-1]
        out[sel] = windows[j[sel]] @ coeffs
    return out


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _lev_distance_jit = njit(cache=True)(_lev_distance_loop)
    _lev_backtrack_jit = njit(cache=True)(_lev_backtrack_loop)
    _lcs_length_jit = njit(cache=True)(_lcs_length_loop)
    _hysteresis_jit = njit(cache=True)(_hysteresis_loop)
    _polyphase_jit = njit(cache=True)(_polyphase_loop)

    levenshtein_distance = _lev_distance_jit
    levenshtein_ops = _lev_backtrack_jit
    lcs_length = _lcs_length_jit
    hysteresis_bounds = _hysteresis_jit
    polyphase_filter = _polyphase_jit
else:
    _lev_distance_jit = None
    _lev_backtrack_jit = None
    _lcs_length_jit = None
    _hysteresis_jit = None
    _polyphase_jit = None

    levenshtein_distance = _lev_distance_np
    levenshtein_ops = _lev_backtrack_np
    lcs_length = _lcs_length_np
    hysteresis_bounds = _hysteresis_np
    polyphase_filter = _polyphase_np
