"""Adapter wire-protocol conformance checks.

Speaks the line-delimited JSON protocol (docs/PROTOCOL.md) directly against
any adapter command and verifies the contract every adapter must honor:
one ordered response per request, payload invariants, recovery from
malformed input and a clean EOF shutdown.

Run as ``longscribe conformance -- <adapter command ...>`` or
``python -m longscribe.conformance <adapter command ...>``.
"""

from __future__ import annotations

import base64
import json
import math
import subprocess
import sys
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .backends import encode_pcm16

WIRE_RATE = 16000


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def _silence(seconds: float) -> str:
    buf = AudioBuffer(np.zeros(int(WIRE_RATE * seconds), dtype=np.float32), WIRE_RATE)
    return encode_pcm16(buf)


class _Session:
    def __init__(self, cmd):
        self.proc = subprocess.Popen(
            cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )

    def send_line(self, line: str):
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def send(self, obj: dict):
        self.send_line(json.dumps(obj, ensure_ascii=False))

    def recv(self) -> dict:
        line = self.proc.stdout.readline()
        if not line:
            raise EOFError("adapter closed its stdout")
        return json.loads(line)

    def finish(self, timeout: float = 10.0) -> int:
        self.proc.stdin.close()
        return self.proc.wait(timeout=timeout)


def run_conformance(cmd) -> list:
    """Execute every check against the adapter command; returns CheckResults."""
    checks = []
    session = _Session(cmd)
    try:
        checks.append(_check_frame_shape(session))
        checks.append(_check_order_preservation(session))
        checks.append(_check_malformed_line_recovery(session))
        checks.append(_check_unknown_op(session))
        checks.append(_check_recognize_invariants(session))
        checks.append(_check_segment_invariants(session))
        checks.append(_check_score_sequence(session))
        checks.append(_check_eof_shutdown(session))
    except (EOFError, json.JSONDecodeError, BrokenPipeError, OSError) as exc:
        checks.append(CheckResult("session", False, f"adapter died mid-suite: {exc}"))
        session.proc.kill()
    return checks


def _check_frame_shape(s: _Session) -> CheckResult:
    hop = 0.02
    s.send({"op": "classify_frames", "audio": _silence(1.0), "params": {"frame_hop_s": hop}})
    reply = s.recv()
    if not reply.get("ok"):
        # declining an op cleanly is conformant (single-role adapters)
        return CheckResult("frame_shape", True, f"declined: {reply.get('error')}")
    probs = reply["payload"].get("probs", [])
    expected = math.ceil(1.0 / hop)
    if len(probs) != expected:
        return CheckResult("frame_shape", False, f"{len(probs)} probs, expected {expected}")
    if any(not (0.0 <= p <= 1.0) for p in probs):
        return CheckResult("frame_shape", False, "probabilities outside [0, 1]")
    return CheckResult("frame_shape", True)


def _check_order_preservation(s: _Session) -> CheckResult:
    durations = [0.1, 0.3, 0.2, 0.5, 0.4, 0.1, 0.3, 0.2]
    for d in durations:
        s.send({"op": "classify_frames", "audio": _silence(d), "params": {"frame_hop_s": 0.02}})
    got = []
    declined = 0
    for d in durations:
        reply = s.recv()  # one-to-one: exactly one response per request
        if reply.get("ok"):
            got.append(len(reply["payload"]["probs"]))
        else:
            declined += 1
            got.append(math.ceil(d / 0.02 - 1e-9))
    expected = [math.ceil(d / 0.02 - 1e-9) for d in durations]
    if got != expected:
        return CheckResult("order_preservation", False, f"responses out of order: {got} != {expected}")
    detail = f"{declined} declined; order judged by one-to-one framing" if declined else ""
    return CheckResult("order_preservation", True, detail)


def _check_malformed_line_recovery(s: _Session) -> CheckResult:
    s.send_line('{"op": "classify_frames", truncated')
    reply = s.recv()
    if reply.get("ok"):
        return CheckResult("malformed_line_recovery", False, "accepted garbage as ok")
    s.send({"op": "classify_frames", "audio": _silence(0.2), "params": {"frame_hop_s": 0.02}})
    follow_up = s.recv()
    if not follow_up.get("ok"):
        return CheckResult("malformed_line_recovery", False, "did not recover after bad line")
    return CheckResult("malformed_line_recovery", True)


def _check_unknown_op(s: _Session) -> CheckResult:
    s.send({"op": "translate", "params": {}})
    reply = s.recv()
    if reply.get("ok"):
        return CheckResult("unknown_op", False, "accepted an unknown op")
    s.send({"op": "classify_frames", "audio": _silence(0.1), "params": {"frame_hop_s": 0.02}})
    if not s.recv().get("ok"):
        return CheckResult("unknown_op", False, "did not keep serving after unknown op")
    return CheckResult("unknown_op", True)


def _check_recognize_invariants(s: _Session) -> CheckResult:
    s.send(
        {
            "op": "recognize",
            "audio": _silence(0.5),
            "params": {"start_s": 0.0, "end_s": 0.5},
        }
    )
    reply = s.recv()
    if not reply.get("ok"):
        return CheckResult("recognize_invariants", True, f"declined: {reply.get('error')}")
    tokens = reply["payload"].get("tokens", [])
    blob = b""
    for tok in tokens:
        lp = tok.get("logprob")
        if lp is None or lp > 0 or not math.isfinite(lp):
            return CheckResult("recognize_invariants", False, f"bad logprob {lp!r}")
        data = base64.b64decode(tok.get("bytes", ""))
        if not data:
            return CheckResult("recognize_invariants", False, "empty token bytes")
        blob += data
    try:
        blob.decode("utf-8")
    except UnicodeDecodeError:
        return CheckResult("recognize_invariants", False, "concatenated bytes not UTF-8")
    return CheckResult("recognize_invariants", True)


def _check_segment_invariants(s: _Session) -> CheckResult:
    s.send(
        {
            "op": "classify_segment",
            "audio": _silence(0.5),
            "params": {"start_s": 0.0, "end_s": 0.5},
        }
    )
    reply = s.recv()
    if not reply.get("ok"):
        return CheckResult("segment_invariants", True, f"declined: {reply.get('error')}")
    scores = reply["payload"].get("scores", {})
    if not scores:
        return CheckResult("segment_invariants", False, "no labels returned")
    for label, value in scores.items():
        if not (0.0 <= value <= 1.0):
            return CheckResult("segment_invariants", False, f"{label}: {value} outside [0, 1]")
    return CheckResult("segment_invariants", True)


def _check_score_sequence(s: _Session) -> CheckResult:
    s.send({"op": "score_sequence", "text": "hello world", "params": {}})
    reply = s.recv()
    if not reply.get("ok"):
        return CheckResult("score_sequence", True, f"declined: {reply.get('error')}")
    score = reply["payload"].get("score")
    if score is None or not math.isfinite(score):
        return CheckResult("score_sequence", False, f"non-finite score {score!r}")
    return CheckResult("score_sequence", True)


def _check_eof_shutdown(s: _Session) -> CheckResult:
    try:
        code = s.finish()
    except subprocess.TimeoutExpired:
        s.proc.kill()
        return CheckResult("eof_shutdown", False, "did not exit within 10s of EOF")
    if code != 0:
        return CheckResult("eof_shutdown", False, f"exit code {code}")
    return CheckResult("eof_shutdown", True)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "--":
        argv = argv[1:]
    if not argv:
        print("usage: python -m longscribe.conformance <adapter command ...>", file=sys.stderr)
        return 2
    results = run_conformance(argv)
    failed = 0
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        suffix = f"  ({r.detail})" if r.detail else ""
        print(f"[{status}] {r.name}{suffix}")
        failed += 0 if r.ok else 1
    print(f"{len(results) - failed}/{len(results)} conformance checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
