"""Causal language model adapter: sequence plausibility scores."""

from __future__ import annotations


class CausalLmHandler:
    def __init__(self, model_id: str, device: str = "cpu"):
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self.torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForCausalLM.from_pretrained(model_id).to(device).eval()
        self.device = device

    def score_sequence(self, text: str, params: dict) -> dict:
        if not text.strip():
            return {"score": 0.0}
        ids = self.tokenizer(text, return_tensors="pt").input_ids.to(self.device)
        with self.torch.no_grad():
            logits = self.model(ids).logits
        log_probs = self.torch.log_softmax(logits[0, :-1], dim=-1)
        chosen = log_probs.gather(1, ids[0, 1:].unsqueeze(1))
        return {"score": float(chosen.sum().item())}
