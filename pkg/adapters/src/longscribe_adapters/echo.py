"""Deterministic test adapter: serves all four ops without any model.

Frame and segment scores come from signal RMS through a logistic squash;
recognition replays a token script (the engine's scripted-recognizer JSON
schema) or falls back to a fixed token; sequence scores count words.
Useful for wiring tests, protocol conformance runs and demos.
"""

from __future__ import annotations

import base64
import json
import math

import numpy as np

from .protocol import WIRE_SAMPLE_RATE, encode_token, frame_count

_PIVOT = 0.05
_WIDTH = 0.01


def _energy_prob(samples: np.ndarray) -> float:
    level = float(np.sqrt(np.mean(np.square(samples, dtype=np.float64)))) if len(samples) else 0.0
    return 1.0 / (1.0 + math.exp(-(level - _PIVOT) / _WIDTH))


class EchoHandler:
    def __init__(self, script_path=None):
        self.entries = []
        if script_path:
            with open(script_path, "r", encoding="utf-8") as f:
                doc = json.load(f)
            self.entries = doc["entries"] if isinstance(doc, dict) else doc

    def classify_frames(self, samples: np.ndarray, params: dict) -> dict:
        hop = float(params.get("frame_hop_s", 0.02))
        hop_n = int(round(hop * WIRE_SAMPLE_RATE))
        n = frame_count(len(samples), hop)
        probs = [_energy_prob(samples[i * hop_n : (i + 1) * hop_n]) for i in range(n)]
        return {"probs": probs, "frame_hop_s": hop}

    def classify_segment(self, samples: np.ndarray, params: dict) -> dict:
        return {"scores": {"Speech": _energy_prob(samples)}}

    def recognize(self, samples: np.ndarray, params: dict) -> dict:
        start_s = float(params.get("start_s", 0.0))
        end_s = float(params.get("end_s", start_s + len(samples) / WIRE_SAMPLE_RATE))
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
                    encode_token(
                        data,
                        tok["logprob"],
                        special=bool(tok.get("special", False)),
                        start_s=None if t0 is None else t0 - start_s,
                        end_s=None if t1 is None else t1 - start_s,
                    )
                )
        if not tokens and not self.entries:
            tokens = [encode_token(" echo".encode("utf-8"), -0.25)]
        return {"tokens": tokens}

    def score_sequence(self, text: str, params: dict) -> dict:
        return {"score": -float(len(text.split()))}
