import json

from longscribe.cli import main, parse_config_file
from longscribe.outputs import parse_transcript_json
from tests.conftest import token_entry, write_speech_wav, write_token_script


def setup_inputs(tmp_path, phrase=("command", "line", "check")):
    wav = tmp_path / "talk.wav"
    write_speech_wav(wav, 10.0, [(1.0, 6.0)])
    script = write_token_script(tmp_path / "tokens.json", [token_entry(1.0, 6.0, list(phrase))])
    return wav, script


class TestTranscribeCommand:
    def test_text_output_and_manifest(self, tmp_path, capsys):
        wav, script = setup_inputs(tmp_path)
        out = tmp_path / "talk.txt"
        code = main(
            [
                "transcribe",
                str(wav),
                "--vad",
                "mock:energy",
                "--ast",
                "mock:energy",
                "--asr",
                f"script:{script}",
                "--output",
                str(out),
            ]
        )
        assert code == 0
        assert out.read_text("utf-8").strip() == "command line check"
        manifest = json.loads((tmp_path / "talk.txt.manifest.json").read_text("utf-8"))
        assert manifest["config"]["chunking"] == "smart"
        assert manifest["timing"]["total_seconds"] >= 0

    def test_json_output_round_trips(self, tmp_path):
        wav, script = setup_inputs(tmp_path)
        out = tmp_path / "talk.json"
        code = main(
            [
                "transcribe",
                str(wav),
                "--format",
                "json",
                "--uncertainty",
                "scores",
                "--score-threshold",
                "-0.05",
                "--vad",
                "mock:energy",
                "--no-ast",
                "--asr",
                f"script:{script}",
                "--output",
                str(out),
            ]
        )
        assert code == 0
        words, _, flags = parse_transcript_json(out.read_text("utf-8"))
        assert words == ["command", "line", "check"]
        assert flags == [True, True, True]

    def test_config_file_and_env_override(self, tmp_path, monkeypatch):
        wav, script = setup_inputs(tmp_path)
        cfg = tmp_path / "run.conf"
        cfg.write_text(
            "chunking = uniform\n"
            "ast_filter = off\n"
            "workers = 2\n"
            f"asr = script:{script}\n"
            "# endpoint below gets overridden by the environment\n"
            "vad = script:/nonexistent.json\n",
            encoding="utf-8",
        )
        monkeypatch.setenv("LONGSCRIBE_VAD_BACKEND", "mock:energy")
        out = tmp_path / "talk.txt"
        code = main(["transcribe", str(wav), "--config", str(cfg), "--output", str(out)])
        assert code == 0
        assert out.read_text("utf-8").strip() == "command line check"


class TestEvaluateCommand:
    def test_manifest_evaluation(self, tmp_path, capsys):
        wav, script = setup_inputs(tmp_path)
        ref = tmp_path / "talk.txt.ref"
        ref.write_text("command line check", encoding="utf-8")
        manifest = tmp_path / "manifest.json"
        manifest.write_text(
            json.dumps({"items": [{"audio": wav.name, "ref": ref.name}]}), encoding="utf-8"
        )
        code = main(
            [
                "evaluate",
                str(manifest),
                "--vad",
                "mock:energy",
                "--no-ast",
                "--asr",
                f"script:{script}",
                "--output-dir",
                str(tmp_path / "out"),
            ]
        )
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text("utf-8"))
        assert report["aggregate"]["mean_wer"] == 0.0
        assert (tmp_path / "out" / "uncertainty_points.csv").exists()
        printed = capsys.readouterr().out
        assert "mean WER 0.0000" in printed

    def test_missing_ref_fails(self, tmp_path):
        wav, script = setup_inputs(tmp_path)
        manifest = tmp_path / "manifest.json"
        manifest.write_text(
            json.dumps({"items": [{"audio": wav.name, "ref": "absent.txt"}]}), encoding="utf-8"
        )
        try:
            main(["evaluate", str(manifest), "--asr", f"script:{script}"])
        except FileNotFoundError as exc:
            assert "absent.txt" in str(exc)
        else:
            raise AssertionError("expected FileNotFoundError")


class TestConfigParsing:
    def test_parse_config_file(self, tmp_path):
        cfg = tmp_path / "c.conf"
        cfg.write_text("a = 1\n# comment\nb = two words\n", encoding="utf-8")
        assert parse_config_file(cfg) == {"a": "1", "b": "two words"}

    def test_bad_line_rejected(self, tmp_path):
        cfg = tmp_path / "c.conf"
        cfg.write_text("just some text\n", encoding="utf-8")
        try:
            parse_config_file(cfg)
        except ValueError as exc:
            assert "key = value" in str(exc)
        else:
            raise AssertionError("expected ValueError")
