"""Whisper adapter: tokens as raw byte sequences with per-token log-probs.

Whisper's vocabulary is byte-level BPE, so each generated id maps to a raw
byte sequence (possibly a partial UTF-8 code point); the engine reassembles
words byte-wise.  Special tokens (task/language/timestamps) are marked so
the engine can skip them.
"""

from __future__ import annotations

import numpy as np

from .protocol import WIRE_SAMPLE_RATE, encode_token


class WhisperHandler:
    def __init__(self, model_id: str, device: str = "cpu", language: str | None = None):
        import torch
        from transformers import WhisperForConditionalGeneration, WhisperProcessor

        self.torch = torch
        self.processor = WhisperProcessor.from_pretrained(model_id)
        self.model = WhisperForConditionalGeneration.from_pretrained(model_id).to(device).eval()
        self.device = device
        self.language = language
        tokenizer = self.processor.tokenizer
        # byte-level BPE: printable proxy char -> original byte
        self.byte_decoder = getattr(tokenizer, "byte_decoder", None)
        self.tokenizer = tokenizer

    def _token_bytes(self, token_id: int) -> bytes:
        text = self.tokenizer.convert_ids_to_tokens(int(token_id))
        if self.byte_decoder is not None:
            try:
                return bytes(self.byte_decoder[c] for c in text)
            except KeyError:
                pass
        return self.tokenizer.convert_tokens_to_string([text]).encode("utf-8")

    def recognize(self, samples: np.ndarray, params: dict) -> dict:
        if len(samples) == 0:
            return {"tokens": []}
        features = self.processor(
            samples, sampling_rate=WIRE_SAMPLE_RATE, return_tensors="pt"
        ).input_features.to(self.device)
        kwargs = {"language": self.language} if self.language else {}
        with self.torch.no_grad():
            out = self.model.generate(
                features,
                output_scores=True,
                return_dict_in_generate=True,
                **kwargs,
            )
        sequence = out.sequences[0]
        # generated ids start after the decoder prompt
        generated = sequence[len(sequence) - len(out.scores) :]
        special_ids = set(self.tokenizer.all_special_ids)
        tokens = []
        for step, token_id in zip(out.scores, generated):
            log_probs = self.torch.log_softmax(step[0], dim=-1)
            lp = float(min(log_probs[token_id].item(), 0.0))
            data = self._token_bytes(int(token_id))
            if not data:
                continue
            tokens.append(
                encode_token(data, lp, special=int(token_id) in special_ids)
            )
        return {"tokens": tokens}
