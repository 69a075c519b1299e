import json

import numpy as np
import pytest

from longscribe.audio import AudioBuffer, write_wav


def synth_speech_buffer(duration_s, bursts, rate=16000, seed=0, amplitude=0.3):
    """Silence with seeded noise bursts over the given (start_s, end_s) spans."""
    rng = np.random.default_rng(seed)
    samples = np.zeros(int(duration_s * rate), dtype=np.float32)
    for start, end in bursts:
        lo, hi = int(start * rate), min(int(end * rate), len(samples))
        samples[lo:hi] = rng.uniform(-amplitude, amplitude, hi - lo).astype(np.float32)
    return AudioBuffer(samples, rate)


def write_speech_wav(path, duration_s, bursts, seed=0):
    buf = synth_speech_buffer(duration_s, bursts, seed=seed)
    write_wav(path, buf)
    return buf


def token_entry(start_s, end_s, words, base_logprob=-0.1, scores=None):
    """Script entry spreading one token per word across the span."""
    tokens = []
    n = len(words)
    step = (end_s - start_s) / max(n, 1)
    for i, w in enumerate(words):
        lp = scores[i] if scores is not None else base_logprob
        tokens.append(
            {
                "text": " " + w,
                "logprob": lp,
                "start_s": start_s + i * step,
                "end_s": start_s + (i + 1) * step,
            }
        )
    return {"start_s": start_s, "end_s": end_s, "tokens": tokens}


def write_token_script(path, entries):
    path.write_text(json.dumps({"entries": entries}, ensure_ascii=False), encoding="utf-8")
    return path


@pytest.fixture
def two_burst_setup(tmp_path):
    """40 s WAV with two speech bursts and a matching recognizer script."""
    wav = tmp_path / "audio.wav"
    write_speech_wav(wav, 40.0, [(2.0, 12.0), (16.0, 27.0)], seed=7)
    script = tmp_path / "tokens.json"
    write_token_script(
        script,
        [
            token_entry(2.0, 12.0, ["the", "first", "burst", "speaks"]),
            token_entry(16.0, 27.0, ["and", "the", "second", "answers"]),
        ],
    )
    return wav, script
