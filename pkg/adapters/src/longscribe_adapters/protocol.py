"""Server half of the longscribe adapter wire protocol.

Line-delimited JSON over stdio: one response per request, in order; a
malformed or unserviceable request yields {"ok": false, "error": ...} and
the loop keeps serving; EOF exits cleanly.  The format is specified in the
engine's docs/PROTOCOL.md; this package implements it independently so
adapters carry no engine dependency.
"""

from __future__ import annotations

import base64
import json
import math
import sys

import numpy as np

WIRE_SAMPLE_RATE = 16000

OPS = ("classify_frames", "classify_segment", "recognize", "score_sequence")


def decode_audio(payload: str) -> np.ndarray:
    """Base64 little-endian PCM16 mono at 16 kHz -> float32 in [-1, 1)."""
    raw = np.frombuffer(base64.b64decode(payload), dtype="<i2")
    return (raw / 32768.0).astype(np.float32)


def encode_token(data: bytes, logprob: float, special: bool = False,
                 start_s: float | None = None, end_s: float | None = None) -> dict:
    tok = {"bytes": base64.b64encode(data).decode("ascii"), "logprob": float(logprob)}
    if special:
        tok["special"] = True
    if start_s is not None:
        tok["start_s"] = float(start_s)
    if end_s is not None:
        tok["end_s"] = float(end_s)
    return tok


def frame_count(n_samples: int, frame_hop_s: float) -> int:
    return int(math.ceil(n_samples / (frame_hop_s * WIRE_SAMPLE_RATE) - 1e-9))


def handle_request(handler, line: str) -> dict:
    """Dispatch one request line to the handler; never raises."""
    try:
        request = json.loads(line)
        op = request.get("op")
        if op not in OPS:
            raise ValueError(f"unknown op {op!r}")
        method = getattr(handler, op, None)
        if method is None:
            raise ValueError(f"{type(handler).__name__} does not serve {op}")
        params = request.get("params") or {}
        if op == "score_sequence":
            payload = method(request.get("text", ""), params)
        else:
            payload = method(decode_audio(request.get("audio", "")), params)
        return {"ok": True, "payload": payload}
    except Exception as exc:  # a bad request must never kill the loop
        return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}


def serve(handler, stdin=None, stdout=None) -> int:
    """Request/response loop until EOF.  Returns the exit status."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        response = handle_request(handler, line)
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()
    return 0
