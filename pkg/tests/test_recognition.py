import numpy as np
import pytest

from longscribe.audio import AudioBuffer
from longscribe.backends import AdapterToken, ProtocolError, ScriptedRecognizer
from longscribe.recognition import (
    TokenPiece,
    Transcription,
    Word,
    group_tokens_into_words,
    merge_transcriptions,
    recognize,
    validate_transcription,
    word_score,
)
from longscribe.segmentation import Chunk


def pieces(*chunks):
    return [TokenPiece(c.encode("utf-8") if isinstance(c, str) else c, -0.1) for c in chunks]


def regroup_oracle(tokens):
    """Oracle: decode the full byte concatenation, split on whitespace."""
    return b"".join(t.data for t in tokens).decode("utf-8").split()


class TestGroupTokens:
    def test_two_token_cyrillic_word(self):
        grouped = group_tokens_into_words(pieces(" с", "ети"))
        assert grouped == [("сети", (0, 2))]

    def test_single_token_word(self):
        assert group_tokens_into_words(pieces(" cat")) == [("cat", (0, 1))]

    def test_code_point_split_across_tokens(self):
        raw = " сети".encode("utf-8")
        # split inside the two-byte 'с'
        toks = pieces(raw[:2], raw[2:])
        grouped = group_tokens_into_words(toks)
        assert [g[0] for g in grouped] == regroup_oracle(toks)
        assert grouped == [("сети", (0, 2))]

    def test_multiple_words(self):
        grouped = group_tokens_into_words(pieces(" hello", " world"))
        assert grouped == [("hello", (0, 1)), ("world", (0 + 1, 2))]

    def test_empty_token_list(self):
        assert group_tokens_into_words([]) == []

    def test_invalid_utf8_rejected(self):
        with pytest.raises(ValueError):
            group_tokens_into_words([TokenPiece(b"\xff\xfe", -0.1)])

    def test_partial_code_points_inside_boundaries_are_legal(self):
        raw = "кошка мяукает".encode("utf-8")
        toks = pieces(raw[:3], raw[3:8], raw[8:9], raw[9:])
        grouped = group_tokens_into_words(toks)
        assert [g[0] for g in grouped] == regroup_oracle(toks)

    def test_separator_only_token_attaches_to_preceding_word(self):
        grouped = group_tokens_into_words(pieces("one", " ", "two"))
        assert grouped == [("one", (0, 2)), ("two", (2, 3))]

    def test_leading_separator_token_attaches_to_first_word(self):
        grouped = group_tokens_into_words(pieces(" ", "one", " two"))
        assert grouped == [("one", (0, 2)), ("two", (2, 3))]

    def test_trailing_separator_token_attaches_to_last_word(self):
        grouped = group_tokens_into_words(pieces("one", " two", "  "))
        assert grouped == [("one", (0, 1)), ("two", (1, 3))]

    def test_whitespace_only_stream_has_no_words(self):
        assert group_tokens_into_words(pieces(" ", "\n")) == []

    def test_random_byte_tokenizations_regroup_losslessly(self):
        rng = np.random.default_rng(61)
        corpus = "съешь ещё этих мягких французских булок да выпей же чаю " * 3
        ascii_words = "the quick brown fox jumps over the lazy dog " * 3
        mixed = corpus + ascii_words + " наука 科学 science 123 "
        blob = mixed.encode("utf-8")
        for _ in range(500):
            n_cuts = int(rng.integers(1, 30))
            cuts = np.unique(rng.integers(1, len(blob), n_cuts))
            bounds = [0, *cuts.tolist(), len(blob)]
            toks = pieces(*[blob[a:b] for a, b in zip(bounds, bounds[1:]) if b > a])
            grouped = group_tokens_into_words(toks)
            assert [g[0] for g in grouped] == regroup_oracle(toks)
            if len(toks) >= len(grouped):
                # ranges tile the token list
                pos = 0
                for _, (lo, hi) in grouped:
                    assert lo == pos and hi > lo
                    pos = hi
                assert pos == len(toks)
            else:
                # carrier tokens shared by several words: still ordered, non-empty
                for _, (lo, hi) in grouped:
                    assert 0 <= lo < hi <= len(toks)


class TestWordScore:
    def test_singleton(self):
        for red in ("min", "sum", "mean"):
            assert word_score([-0.5], red) == -0.5

    def test_arithmetic(self):
        assert word_score([-1, -2], "min") == -2
        assert word_score([-1, -2], "sum") == -3
        assert word_score([-1, -2], "mean") == -1.5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            word_score([], "min")

    def test_positive_rejected(self):
        with pytest.raises(ValueError):
            word_score([0.1], "min")

    def test_matches_naive_loop_on_random_vectors(self):
        rng = np.random.default_rng(67)
        for _ in range(300):
            v = (-rng.random(int(rng.integers(1, 12)))).tolist()
            lo = v[0]
            total = 0.0
            for x in v:
                lo = x if x < lo else lo
                total += x
            assert word_score(v, "min") == lo
            assert word_score(v, "sum") == pytest.approx(total)
            assert word_score(v, "mean") == pytest.approx(total / len(v))
            assert word_score(v, "min") <= word_score(v, "mean") <= 0


def make_buffer(seconds=4.0):
    return AudioBuffer(np.zeros(int(16000 * seconds), dtype=np.float32), 16000)


class TestRecognize:
    def test_scripted_two_words(self):
        backend = ScriptedRecognizer(
            [
                {
                    "start_s": 0.0,
                    "end_s": 2.0,
                    "tokens": [
                        {"text": " hello", "logprob": -0.1},
                        {"text": " wor", "logprob": -0.2},
                        {"text": "ld", "logprob": -0.3},
                    ],
                }
            ]
        )
        t = recognize(make_buffer(), Chunk(0, 2), backend, reduction="min")
        assert t.word_texts() == ["hello", "world"]
        assert t.words[0].score == -0.1
        assert t.words[1].score == -0.3
        validate_transcription(t)

    def test_empty_token_list(self):
        t = recognize(make_buffer(), Chunk(0, 2), ScriptedRecognizer([]))
        assert t.words == ()
        assert t.tokens == ()

    def test_sum_reduction_on_cyrillic_example(self):
        backend = ScriptedRecognizer(
            [
                {
                    "start_s": 0.0,
                    "end_s": 1.0,
                    "tokens": [
                        {"text": " с", "logprob": -0.4},
                        {"text": "ети", "logprob": -0.25},
                    ],
                }
            ]
        )
        t = recognize(make_buffer(), Chunk(0, 1), backend, reduction="sum")
        assert t.word_texts() == ["сети"]
        assert t.words[0].score == pytest.approx(-0.65)

    def test_special_tokens_excluded(self):
        class WithSpecials:
            parallel_safe = True

            def recognize_chunk(self, buffer, start_s, end_s):
                return [
                    AdapterToken(b"<|begin|>", -0.0, special=True),
                    AdapterToken(" cat".encode(), -0.5),
                    AdapterToken(b"<|end|>", -0.0, special=True),
                ]

        t = recognize(make_buffer(), Chunk(0, 1), WithSpecials())
        assert t.word_texts() == ["cat"]
        assert len(t.tokens) == 1

    def test_token_times_become_absolute(self):
        backend = ScriptedRecognizer(
            [
                {
                    "start_s": 10.0,
                    "end_s": 12.0,
                    "tokens": [
                        {"text": " hey", "logprob": -0.1, "start_s": 10.2, "end_s": 10.6}
                    ],
                }
            ]
        )
        buf = make_buffer(20)
        t = recognize(buf, Chunk(10, 12), backend)
        assert t.words[0].start_s == pytest.approx(10.2)
        assert t.words[0].end_s == pytest.approx(10.6)

    def test_invalid_backend_output_is_protocol_error(self):
        class BadBytes:
            parallel_safe = True

            def recognize_chunk(self, buffer, start_s, end_s):
                return [AdapterToken(b"\xff", -0.1)]

        with pytest.raises(ProtocolError):
            recognize(make_buffer(), Chunk(0, 1), BadBytes())


class TestMergeTranscriptions:
    def test_ranges_rebased(self):
        t1 = recognize(
            make_buffer(),
            Chunk(0, 1),
            ScriptedRecognizer(
                [{"start_s": 0.0, "end_s": 1.0, "tokens": [{"text": "one", "logprob": -0.1}]}]
            ),
        )
        t2 = recognize(
            make_buffer(),
            Chunk(1, 2),
            ScriptedRecognizer(
                [{"start_s": 1.0, "end_s": 2.0, "tokens": [{"text": "two", "logprob": -0.2}]}]
            ),
        )
        merged = merge_transcriptions([t1, t2])
        assert merged.word_texts() == ["one", "two"]
        assert merged.words[1].token_range == (1, 2)
        validate_transcription(merged)


class TestValidateTranscription:
    def test_gap_detected(self):
        toks = pieces("a", "b")
        bad = Transcription(
            words=(Word("b", (1, 2), -0.1),),
            tokens=tuple(toks),
        )
        with pytest.raises(ProtocolError):
            validate_transcription(bad)
