import json

import numpy as np
import pytest

from longscribe.outputs import (
    emit_outputs,
    parse_transcript_json,
    transcript_html,
    transcript_json,
    transcript_text,
    write_run_manifest,
)
from longscribe.pipeline import PipelineConfig, TimingReport
from longscribe.uncertainty import UncertaintyMask
from tests.test_uncertainty import transcription_from


@pytest.fixture
def sample():
    t = transcription_from([("раз", -0.1), ("two", -1.5), ("three", -0.3)])
    mask = UncertaintyMask(np.array([False, True, False]), "score_threshold")
    return t, mask


class TestFormats:
    def test_text(self, sample):
        t, _ = sample
        assert transcript_text(t) == "раз two three"

    def test_html_single_mark(self, sample):
        t, mask = sample
        page = transcript_html(t, mask)
        assert page.count("<mark>") == 1
        assert "<mark>two</mark>" in page
        assert "раз" in page

    def test_html_escapes(self):
        t = transcription_from([("a<b", -0.1)])
        assert "a&lt;b" in transcript_html(t)

    def test_json_round_trip(self, sample):
        t, mask = sample
        text = transcript_json(t, mask)
        words, scores, flags = parse_transcript_json(text)
        assert words == ["раз", "two", "three"]
        assert scores == [-0.1, -1.5, -0.3]
        assert flags == [False, True, False]

    def test_json_without_mask_omits_uncertainty(self, sample):
        t, _ = sample
        doc = json.loads(transcript_json(t))
        assert "uncertainty" not in doc
        assert all("uncertain" not in w for w in doc["words"])

    def test_json_is_utf8_not_escaped(self, sample):
        t, _ = sample
        assert "раз" in transcript_json(t)

    def test_mask_length_checked(self, sample):
        t, _ = sample
        short = UncertaintyMask(np.array([True]), "score_threshold")
        with pytest.raises(ValueError):
            transcript_json(t, short)

    def test_emit_outputs_writes_files(self, sample, tmp_path):
        t, mask = sample
        for fmt, suffix in (("text", ".txt"), ("json", ".json"), ("html", ".html")):
            path = emit_outputs(t, mask, fmt, tmp_path / f"out{suffix}")
            assert path.exists()

    def test_unknown_format_rejected(self, sample, tmp_path):
        t, mask = sample
        with pytest.raises(ValueError):
            emit_outputs(t, mask, "pdf", tmp_path / "x.pdf")


class TestManifest:
    def test_manifest_contents(self, tmp_path):
        config = PipelineConfig(workers=3)
        timing = TimingReport({"read": 0.1, "recognize": 1.0}, 1.5)
        path = write_run_manifest(
            tmp_path / "m.json",
            config,
            timing,
            inputs={"audio": "a.wav"},
            outputs={"transcript": "a.txt"},
        )
        doc = json.loads(path.read_text("utf-8"))
        assert doc["config"]["workers"] == 3
        assert doc["timing"]["total_seconds"] == 1.5
        assert doc["versions"]["longscribe"]
        assert doc["inputs"]["audio"] == "a.wav"
