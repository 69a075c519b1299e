"""The jitted and pure-numpy kernel twins must agree exactly."""

import numpy as np
import pytest

from longscribe import _kernels as K

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba unavailable or disabled")

rng = np.random.default_rng(42)


def random_codes(n, alphabet):
    return rng.integers(0, alphabet, size=n).astype(np.int64)


@needs_numba
def test_levenshtein_distance_paths_agree():
    for _ in range(300):
        a = random_codes(int(rng.integers(0, 12)), 4)
        b = random_codes(int(rng.integers(0, 12)), 4)
        assert K._lev_distance_jit(a, b) == K._lev_distance_np(a, b)


@needs_numba
def test_levenshtein_backtrack_paths_agree():
    for _ in range(300):
        a = random_codes(int(rng.integers(0, 10)), 3)
        b = random_codes(int(rng.integers(0, 10)), 3)
        assert np.array_equal(K._lev_backtrack_jit(a, b), K._lev_backtrack_np(a, b))


@needs_numba
def test_lcs_paths_agree():
    for _ in range(300):
        a = random_codes(int(rng.integers(0, 15)), 5)
        b = random_codes(int(rng.integers(0, 15)), 5)
        assert K._lcs_length_jit(a, b) == K._lcs_length_np(a, b)


@needs_numba
def test_hysteresis_paths_agree():
    for _ in range(300):
        probs = rng.uniform(0, 1, int(rng.integers(0, 200)))
        onset, offset = 0.7, 0.3
        s1, e1 = K._hysteresis_jit(probs, onset, offset)
        s2, e2 = K._hysteresis_np(probs, onset, offset)
        assert np.array_equal(s1, s2)
        assert np.array_equal(e1, e2)


@needs_numba
def test_polyphase_paths_agree():
    for _ in range(20):
        x = rng.uniform(-1, 1, int(rng.integers(1, 400)))
        up, down = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        h = rng.uniform(-0.2, 0.5, 4 * up * max(up, down) + 1)
        out_len = -(-len(x) * up // down)
        delay = (len(h) - 1) // 2
        y1 = K._polyphase_jit(x, h, up, down, out_len, delay)
        y2 = K._polyphase_np(x, h, up, down, out_len, delay)
        assert np.allclose(y1, y2, atol=1e-12)


def test_backtrack_ops_reconstruct_distance():
    for _ in range(200):
        a = random_codes(int(rng.integers(0, 10)), 3)
        b = random_codes(int(rng.integers(0, 10)), 3)
        ops = K.levenshtein_ops(a, b)
        cost = int(np.sum(ops != K.OP_EQUAL))
        assert cost == K.levenshtein_distance(a, b)
        # op counts must walk both sequences exactly
        base_steps = int(np.sum((ops == K.OP_EQUAL) | (ops == K.OP_REPLACE) | (ops == K.OP_DELETE)))
        other_steps = int(np.sum((ops == K.OP_EQUAL) | (ops == K.OP_REPLACE) | (ops == K.OP_INSERT)))
        assert base_steps == len(a)
        assert other_steps == len(b)


def test_hysteresis_matches_state_machine():
    # oracle: frame-by-frame two-state simulator
    def simulate(probs, onset, offset):
        segs, open_at = [], None
        for i, p in enumerate(probs):
            if open_at is None and p >= onset:
                open_at = i
            elif open_at is not None and p < offset:
                segs.append((open_at, i))
                open_at = None
        if open_at is not None:
            segs.append((open_at, len(probs)))
        return segs

    for _ in range(300):
        probs = rng.uniform(0, 1, int(rng.integers(0, 120)))
        starts, ends = K.hysteresis_bounds(probs, 0.65, 0.4)
        assert list(zip(starts.tolist(), ends.tolist())) == simulate(probs, 0.65, 0.4)
