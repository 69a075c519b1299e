"""Model backends: in-process mocks, scripted stubs and the subprocess client.

Every stage of the engine talks to a backend through a small duck-typed
contract; anything implementing the right methods plugs in:

  frame classifier   classify_frames(buffer) -> float array in [0, 1],
                     plus a `frame_hop_s` attribute
  segment classifier classify_segment(buffer, start_s, end_s) -> {label: score}
  recognizer         recognize_chunk(buffer, start_s, end_s) -> [AdapterToken],
                     token times relative to the chunk start
  sequence scorer    score(words) -> float, higher = more plausible

Backends also expose `parallel_safe`; when False the pipeline serializes
calls with a lock.  The subprocess client speaks the line-delimited JSON
protocol documented in docs/PROTOCOL.md, so external model servers stay
language-neutral.
"""

from __future__ import annotations

import base64
import json
import math
import shlex
import subprocess
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, resample_to

WIRE_SAMPLE_RATE = 16000


class BackendError(RuntimeError):
    """A backend call failed (process died, refused the request, ...)."""


class ProtocolError(BackendError):
    """A backend answered with a payload violating the documented invariants."""


@dataclass(frozen=True)
class AdapterToken:
    """One recognizer output token: raw UTF-8 bytes plus its log-probability."""

    data: bytes
    logprob: float
    special: bool = False
    start_s: float | None = None
    end_s: float | None = None


def _logistic_energy(samples: np.ndarray, pivot: float, width: float) -> float:
    level = float(np.sqrt(np.mean(np.square(samples, dtype=np.float64)))) if len(samples) else 0.0
    return 1.0 / (1.0 + math.exp(-(level - pivot) / width))


def frame_count(n_samples: int, sample_rate: int, frame_hop_s: float) -> int:
    """Frames covering a signal: ceil(duration / hop), guarded against float fuzz."""
    return int(math.ceil(n_samples / (frame_hop_s * sample_rate) - 1e-9))


# ---------------------------------------------------------------------------
# In-process reference mocks
# ---------------------------------------------------------------------------

class EnergyFrameClassifier:
    """Frame-RMS energy squashed through a logistic; deterministic and model-free."""

    parallel_safe = True

    def __init__(self, frame_hop_s: float = 0.02, pivot: float = 0.05, width: float = 0.01):
        self.frame_hop_s = frame_hop_s
        self.pivot = pivot
        self.width = width

    def classify_frames(self, buffer: AudioBuffer) -> np.ndarray:
        hop = int(round(self.frame_hop_s * buffer.sample_rate))
        n = frame_count(len(buffer.samples), buffer.sample_rate, self.frame_hop_s)
        probs = np.empty(n, dtype=np.float64)
        for i in range(n):
            frame = buffer.samples[i * hop : (i + 1) * hop]
            probs[i] = _logistic_energy(frame, self.pivot, self.width)
        return probs


class ScriptedFrameClassifier:
    """Emits a fixed probability vector regardless of the audio."""

    parallel_safe = True

    def __init__(self, probs, frame_hop_s: float = 0.02):
        self.probs = np.asarray(probs, dtype=np.float64)
        self.frame_hop_s = frame_hop_s

    def classify_frames(self, buffer: AudioBuffer) -> np.ndarray:
        return self.probs


class EnergySegmentClassifier:
    """Whole-chunk RMS mapped to a single 'Speech' score."""

    parallel_safe = True

    def __init__(self, pivot: float = 0.05, width: float = 0.01):
        self.pivot = pivot
        self.width = width

    def classify_segment(self, buffer: AudioBuffer, start_s: float, end_s: float) -> dict:
        return {"Speech": _logistic_energy(buffer.samples, self.pivot, self.width)}


class ScriptedSegmentClassifier:
    """Label scores looked up by chunk span; entries match on midpoint containment."""

    parallel_safe = True

    def __init__(self, entries, default=None):
        # entries: [(start_s, end_s, {label: score}), ...]
        self.entries = list(entries)
        self.default = default if default is not None else {"Speech": 0.0}

    def classify_segment(self, buffer: AudioBuffer, start_s: float, end_s: float) -> dict:
        for lo, hi, scores in self.entries:
            mid = (lo + hi) / 2.0
            if start_s <= mid < end_s:
                return dict(scores)
        return dict(self.default)


class ScriptedRecognizer:
    """Replays a token script; see docs/PROTOCOL.md for the JSON schema.

    Each script entry covers an absolute time span of the source audio and
    lists its tokens.  A chunk picks up every entry whose midpoint falls
    inside it, so the same script serves smart, uniform and mock chunkers.
    Absolute token times are converted to chunk-relative on the way out.
    """

    parallel_safe = True

    def __init__(self, entries):
        self.entries = sorted(entries, key=lambda e: e["start_s"])

    @classmethod
    def from_file(cls, path) -> "ScriptedRecognizer":
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        return cls(doc["entries"] if isinstance(doc, dict) else doc)

    def recognize_chunk(self, buffer: AudioBuffer, start_s: float, end_s: float):
        tokens = []
        for entry in self.entries:
            mid = (entry["start_s"] + entry["end_s"]) / 2.0
            if not (start_s <= mid < end_s):
                continue
            for tok in entry["tokens"]:
                if "text" in tok:
                    data = tok["text"].encode("utf-8")
                else:
                    data = base64.b64decode(tok["bytes_b64"])
                t0 = tok.get("start_s")
                t1 = tok.get("end_s")
                tokens.append(
                    AdapterToken(
                        data=data,
                        logprob=float(tok["logprob"]),
                        special=bool(tok.get("special", False)),
                        start_s=None if t0 is None else float(t0) - start_s,
                        end_s=None if t1 is None else float(t1) - start_s,
                    )
                )
        return tokens


class UnigramScorer:
    """Log unigram-frequency scorer backed by a plain word-count table."""

    parallel_safe = True

    def __init__(self, counts: dict | None = None, oov_count: float = 0.5):
        if counts is None:
            counts = load_word_counts()
        self.counts = {w.casefold(): float(c) for w, c in counts.items()}
        self.total = sum(self.counts.values()) + oov_count
        self.oov = oov_count

    def score(self, words) -> float:
        total = 0.0
        for w in words:
            count = self.counts.get(w.casefold(), self.oov)
            total += math.log(count / self.total)
        return total


class ConstantScorer:
    """Scores every sequence identically; useful for tie-break tests."""

    parallel_safe = True

    def __init__(self, value: float = 0.0):
        self.value = value

    def score(self, words) -> float:
        return self.value


def load_word_counts(path=None) -> dict:
    if path is None:
        text = resources.files("longscribe").joinpath("data/word_counts.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    counts = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, _, count = line.rpartition(" ")
        counts[word] = float(count)
    return counts


# ---------------------------------------------------------------------------
# Subprocess adapter client (line-delimited JSON over stdio)
# ---------------------------------------------------------------------------

def encode_pcm16(buffer: AudioBuffer) -> str:
    """Base64 little-endian PCM16 at the wire rate, resampling if needed."""
    at_rate = resample_to(buffer, WIRE_SAMPLE_RATE)
    pcm = np.clip(np.rint(at_rate.samples.astype(np.float64) * 32768.0), -32768, 32767)
    return base64.b64encode(pcm.astype("<i2").tobytes()).decode("ascii")


def decode_pcm16(payload: str) -> AudioBuffer:
    raw = np.frombuffer(base64.b64decode(payload), dtype="<i2")
    return AudioBuffer((raw / 32768.0).astype(np.float32), WIRE_SAMPLE_RATE)


class SubprocessAdapterClient:
    """Client half of the adapter wire protocol: one JSON object per line.

    The child process is spawned lazily and serves requests strictly in
    order, so this client is not safe for concurrent use; the pipeline
    honors `parallel_safe = False` by locking around calls.
    """

    parallel_safe = False

    def __init__(self, cmd, frame_hop_s: float = 0.02):
        self.cmd = list(cmd) if not isinstance(cmd, str) else shlex.split(cmd)
        self.frame_hop_s = frame_hop_s
        self._proc = None

    # -- lifecycle ----------------------------------------------------------

    def _ensure_started(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )

    def close(self):
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=10)
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- wire ---------------------------------------------------------------

    def _request(self, obj: dict) -> dict:
        self._ensure_started()
        line = json.dumps(obj, ensure_ascii=False)
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
            reply = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise BackendError(f"adapter {self.cmd[0]}: pipe broken: {exc}") from exc
        if not reply:
            raise BackendError(f"adapter {self.cmd[0]}: closed stream mid-request")
        try:
            response = json.loads(reply)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"adapter {self.cmd[0]}: unparseable response: {reply[:200]!r}") from exc
        if not response.get("ok"):
            raise BackendError(f"adapter {self.cmd[0]}: {response.get('error', 'unspecified error')}")
        return response.get("payload", {})

    # -- backend contracts --------------------------------------------------

    def classify_frames(self, buffer: AudioBuffer) -> np.ndarray:
        payload = self._request(
            {
                "op": "classify_frames",
                "audio": encode_pcm16(buffer),
                "params": {"frame_hop_s": self.frame_hop_s},
            }
        )
        probs = np.asarray(payload.get("probs", []), dtype=np.float64)
        if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
            raise ProtocolError("classify_frames probabilities outside [0, 1]")
        return probs

    def classify_segment(self, buffer: AudioBuffer, start_s: float, end_s: float) -> dict:
        payload = self._request(
            {
                "op": "classify_segment",
                "audio": encode_pcm16(buffer),
                "params": {"start_s": start_s, "end_s": end_s},
            }
        )
        scores = payload.get("scores", {})
        if not scores:
            raise ProtocolError("classify_segment returned no labels")
        for label, value in scores.items():
            if not (0.0 <= float(value) <= 1.0):
                raise ProtocolError(f"label {label!r} score {value} outside [0, 1]")
        return {str(k): float(v) for k, v in scores.items()}

    def recognize_chunk(self, buffer: AudioBuffer, start_s: float, end_s: float):
        payload = self._request(
            {
                "op": "recognize",
                "audio": encode_pcm16(buffer),
                "params": {"start_s": start_s, "end_s": end_s},
            }
        )
        tokens = []
        for tok in payload.get("tokens", []):
            logprob = float(tok["logprob"])
            if logprob > 0.0 or not math.isfinite(logprob):
                raise ProtocolError(f"token logprob {logprob} must be finite and <= 0")
            tokens.append(
                AdapterToken(
                    data=base64.b64decode(tok["bytes"]),
                    logprob=logprob,
                    special=bool(tok.get("special", False)),
                    start_s=tok.get("start_s"),
                    end_s=tok.get("end_s"),
                )
            )
        return tokens

    def score(self, words) -> float:
        payload = self._request(
            {"op": "score_sequence", "text": " ".join(words), "params": {}}
        )
        return float(payload["score"])


# ---------------------------------------------------------------------------
# Endpoint parsing (CLI / config / environment)
# ---------------------------------------------------------------------------

def parse_backend(role: str, endpoint: str):
    """Build a backend from an endpoint string.

    Syntax by role (vad, ast, asr, lm):
      mock:energy        deterministic in-process energy mock (vad, ast)
      script:FILE        scripted stub replaying FILE (vad, ast, asr)
      cmd:COMMAND        subprocess adapter speaking the wire protocol (any)
      unigram[:FILE]     bundled or custom word-count scorer (lm)
      constant[:X]       constant scorer (lm)
    """
    kind, _, arg = endpoint.partition(":")
    if kind == "cmd":
        if not arg:
            raise ValueError(f"{role}: cmd endpoint needs a command")
        return SubprocessAdapterClient(arg)
    if kind == "mock" and arg == "energy":
        if role == "vad":
            return EnergyFrameClassifier()
        if role == "ast":
            return EnergySegmentClassifier()
        raise ValueError(f"{role}: no energy mock for this role")
    if kind == "script":
        if role == "vad":
            with open(arg, "r", encoding="utf-8") as f:
                doc = json.load(f)
            return ScriptedFrameClassifier(doc["probs"], doc.get("frame_hop_s", 0.02))
        if role == "ast":
            with open(arg, "r", encoding="utf-8") as f:
                doc = json.load(f)
            entries = [(e["start_s"], e["end_s"], e["scores"]) for e in doc["entries"]]
            return ScriptedSegmentClassifier(entries, doc.get("default"))
        if role == "asr":
            return ScriptedRecognizer.from_file(arg)
        raise ValueError(f"{role}: scripted backend not defined for this role")
    if kind == "unigram":
        return UnigramScorer(load_word_counts(arg) if arg else None)
    if kind == "constant":
        return ConstantScorer(float(arg) if arg else 0.0)
    raise ValueError(f"{role}: unknown backend endpoint {endpoint!r}")
