"""Audio Spectrogram Transformer adapter: Audioset label scores per segment."""

from __future__ import annotations

import numpy as np

from .protocol import WIRE_SAMPLE_RATE


class AstHandler:
    def __init__(self, model_id: str, device: str = "cpu", top_k: int = 10):
        import torch
        from transformers import ASTFeatureExtractor, ASTForAudioClassification

        self.torch = torch
        self.extractor = ASTFeatureExtractor.from_pretrained(model_id)
        self.model = ASTForAudioClassification.from_pretrained(model_id).to(device).eval()
        self.device = device
        self.top_k = top_k

    def classify_segment(self, samples: np.ndarray, params: dict) -> dict:
        inputs = self.extractor(
            samples, sampling_rate=WIRE_SAMPLE_RATE, return_tensors="pt"
        ).input_values.to(self.device)
        with self.torch.no_grad():
            logits = self.model(inputs).logits[0]
        scores = self.torch.sigmoid(logits).cpu().numpy()
        order = np.argsort(scores)[::-1][: self.top_k]
        labels = self.model.config.id2label
        return {
            "scores": {labels[int(i)]: float(np.clip(scores[i], 0.0, 1.0)) for i in order}
        }
