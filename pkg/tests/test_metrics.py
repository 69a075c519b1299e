import numpy as np
import pytest

from longscribe.metrics import (
    EvalReport,
    UncertaintyPoint,
    evaluate_transcript,
    score_sweep,
    uncertainty_report,
    wer,
    word_error_targets,
)
from longscribe.uncertainty import UncertaintyMask
from tests.test_uncertainty import transcription_from


def dp_wer_oracle(ref, hyp):
    m, n = len(ref), len(hyp)
    D = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        D[i][0] = i
    for j in range(n + 1):
        D[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            D[i][j] = min(
                D[i - 1][j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1),
                D[i - 1][j] + 1,
                D[i][j - 1] + 1,
            )
    return D[m][n] / m


class TestWer:
    def test_identical(self):
        assert wer(["a", "b", "c"], ["a", "b", "c"]) == 0.0

    def test_one_substitution_in_four(self):
        assert wer(["a", "b", "c", "d"], ["a", "x", "c", "d"]) == 0.25

    def test_empty_hyp_is_one(self):
        assert wer(["a", "b"], []) == 1.0

    def test_empty_ref_rejected(self):
        with pytest.raises(ValueError):
            wer([], ["a"])

    def test_normalization_flag(self):
        assert wer(["Hello,"], ["hello"]) == 0.0
        assert wer(["Hello,"], ["hello"], normalize=False) == 1.0

    def test_matches_dp_oracle_on_random_pairs(self):
        rng = np.random.default_rng(109)
        vocab = ["aa", "bb", "cc"]
        for _ in range(500):
            ref = [vocab[i] for i in rng.integers(0, 3, int(rng.integers(1, 11)))]
            hyp = [vocab[i] for i in rng.integers(0, 3, int(rng.integers(0, 11)))]
            assert wer(ref, hyp) == pytest.approx(dp_wer_oracle(ref, hyp))


class TestWordErrorTargets:
    def test_perfect_hyp(self):
        targets = word_error_targets(["a", "b"], ["a", "b"])
        assert targets.tolist() == [False, False]

    def test_single_substitution(self):
        targets = word_error_targets(["a", "b", "c"], ["a", "x", "c"])
        assert targets.tolist() == [False, True, False]

    def test_insertion_flagged_incorrect(self):
        targets = word_error_targets(["a", "b"], ["a", "x", "b"])
        assert targets.tolist() == [False, True, False]

    def test_missed_words_excluded_from_targets(self):
        report = evaluate_transcript(["a", "b", "c"], ["a", "c"])
        assert report.missed_ref_words == 1
        assert report.per_word_correct == (True, True)
        assert report.n_hyp_words == 2

    def test_matches_span_expansion_oracle(self):
        from longscribe.alignment import align

        rng = np.random.default_rng(113)
        vocab = ["aa", "bb", "cc", "dd"]
        for _ in range(300):
            ref = [vocab[i] for i in rng.integers(0, 4, int(rng.integers(1, 10)))]
            hyp = [vocab[i] for i in rng.integers(0, 4, int(rng.integers(0, 10)))]
            script = align(ref, hyp)
            expected = np.zeros(len(hyp), dtype=bool)
            for op in script.ops:
                if op.kind in ("replace", "insert"):
                    expected[op.other_span[0] : op.other_span[1]] = True
            assert np.array_equal(word_error_targets(ref, hyp), expected)


class TestEvalReport:
    def test_wer_consistent_with_targets_alignment(self):
        rng = np.random.default_rng(127)
        vocab = ["aa", "bb", "cc"]
        for _ in range(200):
            ref = [vocab[i] for i in rng.integers(0, 3, int(rng.integers(1, 9)))]
            hyp = [vocab[i] for i in rng.integers(0, 3, int(rng.integers(0, 9)))]
            report = evaluate_transcript(ref, hyp)
            assert report.wer == pytest.approx(dp_wer_oracle(ref, hyp))
            assert len(report.per_word_correct) == len(hyp)


def mask_of(bits):
    return UncertaintyMask(np.array(bits, dtype=bool), "score_threshold")


class TestUncertaintyReport:
    def test_all_certain_with_errors(self):
        point = uncertainty_report(mask_of([False] * 4), [True, False, False, False])
        assert point.uncertainty_ratio == 0.0
        assert point.error_recall == 0.0

    def test_all_uncertain(self):
        point = uncertainty_report(mask_of([True] * 4), [True, False, True, False])
        assert point.uncertainty_ratio == 1.0
        assert point.error_recall == 1.0

    def test_twenty_words_one_caught_error(self):
        flags = [False] * 20
        targets = [False] * 20
        flags[7] = True
        targets[7] = True
        point = uncertainty_report(mask_of(flags), targets)
        assert point.uncertainty_ratio == pytest.approx(0.05)
        assert point.error_recall == 1.0

    def test_zero_errors_recall_defined_as_one(self):
        point = uncertainty_report(mask_of([False, True]), [False, False])
        assert point.error_recall == 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            uncertainty_report(mask_of([True]), [True, False])

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(131)
        for _ in range(500):
            n = int(rng.integers(1, 40))
            flags = rng.random(n) < 0.3
            targets = rng.random(n) < 0.25
            point = uncertainty_report(mask_of(flags), targets)
            n_unc = sum(1 for f in flags if f)
            n_err = sum(1 for t in targets if t)
            n_caught = sum(1 for f, t in zip(flags, targets) if f and t)
            assert point.uncertainty_ratio == pytest.approx(n_unc / n)
            expected_recall = 1.0 if n_err == 0 else n_caught / n_err
            assert point.error_recall == pytest.approx(expected_recall)


class TestScoreSweep:
    def test_single_threshold_matches_direct(self):
        t = transcription_from([("a", -0.1), ("b", -2.0)])
        targets = [False, True]
        points = score_sweep(t, targets, [-0.5])
        direct = uncertainty_report(
            UncertaintyMask(np.array([False, True]), "score_threshold"), targets
        )
        assert points[0].uncertainty_ratio == direct.uncertainty_ratio
        assert points[0].error_recall == direct.error_recall
        assert points[0].threshold == -0.5

    def test_extreme_endpoints(self):
        t = transcription_from([("a", -0.1), ("b", -2.0)])
        targets = [False, True]
        points = score_sweep(t, targets, [-1e9, 1e9])
        assert (points[0].uncertainty_ratio, points[0].error_recall) == (0.0, 0.0)
        assert (points[1].uncertainty_ratio, points[1].error_recall) == (1.0, 1.0)

    def test_ratio_monotone_in_threshold(self):
        rng = np.random.default_rng(137)
        t = transcription_from([(f"w{i}", float(-rng.random() * 4)) for i in range(50)])
        targets = rng.random(50) < 0.2
        thresholds = sorted(float(x) for x in rng.uniform(-4, 0, 15))
        points = score_sweep(t, targets, thresholds)
        ratios = [p.uncertainty_ratio for p in points]
        assert all(a <= b for a, b in zip(ratios, ratios[1:]))

    def test_unsorted_thresholds_rejected(self):
        t = transcription_from([("a", -0.1)])
        with pytest.raises(ValueError):
            score_sweep(t, [False], [0.0, -1.0])


class TestValueObjects:
    def test_point_range_validated(self):
        with pytest.raises(ValueError):
            UncertaintyPoint(1.5, 0.0)

    def test_report_rejects_negative_wer(self):
        with pytest.raises(ValueError):
            EvalReport(-0.1, 1, 1, (), 0)
