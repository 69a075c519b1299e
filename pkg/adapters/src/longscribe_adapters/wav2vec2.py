"""Wav2Vec2 CTC adapter: frame-level speech probabilities and recognition.

Speech probability per frame is 1 - P(blank) from the CTC emissions.  The
model's native frame rate (20 ms for the standard architecture) is mapped
onto the requested hop by nearest-frame lookup.  Needs torch and
transformers plus downloadable weights; import stays lazy so the package
works without them.
"""

from __future__ import annotations

import numpy as np

from .protocol import WIRE_SAMPLE_RATE, encode_token, frame_count


class Wav2Vec2Handler:
    def __init__(self, model_id: str, device: str = "cpu"):
        import torch
        from transformers import Wav2Vec2ForCTC, Wav2Vec2Processor

        self.torch = torch
        self.processor = Wav2Vec2Processor.from_pretrained(model_id)
        self.model = Wav2Vec2ForCTC.from_pretrained(model_id).to(device).eval()
        self.device = device
        self.blank_id = self.model.config.pad_token_id or 0

    def _log_softmax_frames(self, samples: np.ndarray):
        inputs = self.processor(
            samples, sampling_rate=WIRE_SAMPLE_RATE, return_tensors="pt"
        ).input_values.to(self.device)
        with self.torch.no_grad():
            logits = self.model(inputs).logits[0]
        return self.torch.log_softmax(logits, dim=-1).cpu().numpy()

    def classify_frames(self, samples: np.ndarray, params: dict) -> dict:
        hop = float(params.get("frame_hop_s", 0.02))
        n_out = frame_count(len(samples), hop)
        if len(samples) == 0 or n_out == 0:
            return {"probs": [], "frame_hop_s": hop}
        log_probs = self._log_softmax_frames(samples)
        speech = 1.0 - np.exp(log_probs[:, self.blank_id])
        native_hop = len(samples) / WIRE_SAMPLE_RATE / max(len(speech), 1)
        idx = np.minimum(
            (np.arange(n_out) * hop / native_hop).astype(int), len(speech) - 1
        )
        probs = np.clip(speech[idx], 0.0, 1.0)
        return {"probs": probs.tolist(), "frame_hop_s": hop}

    def recognize(self, samples: np.ndarray, params: dict) -> dict:
        if len(samples) == 0:
            return {"tokens": []}
        log_probs = self._log_softmax_frames(samples)
        ids = log_probs.argmax(axis=-1)
        native_hop = len(samples) / WIRE_SAMPLE_RATE / max(len(ids), 1)
        vocab = {v: k for k, v in self.processor.tokenizer.get_vocab().items()}
        tokens = []
        prev = self.blank_id
        word_chars, word_lps, word_start = [], [], 0.0
        delimiter = self.processor.tokenizer.word_delimiter_token

        def flush(end_frame):
            if word_chars:
                tokens.append(
                    encode_token(
                        (" " + "".join(word_chars)).encode("utf-8"),
                        float(min(word_lps)),
                        start_s=word_start,
                        end_s=end_frame * native_hop,
                    )
                )
            word_chars.clear()
            word_lps.clear()

        for frame, token_id in enumerate(ids):
            if token_id == self.blank_id or token_id == prev:
                prev = token_id
                continue
            symbol = vocab.get(int(token_id), "")
            if symbol == delimiter:
                flush(frame)
            else:
                if not word_chars:
                    word_start = frame * native_hop
                word_chars.append(symbol)
                word_lps.append(float(log_probs[frame, token_id]))
            prev = token_id
        flush(len(ids))
        return {"tokens": tokens}
