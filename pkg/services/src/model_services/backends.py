"""Embedding and toxicity backends behind one small interface.

The default ``hashed`` backend is fully deterministic and dependency-free:
token vectors are derived from SHA-256 of the token string, sentence
vectors are normalized token means, and toxicity scores hash the truncated
text into [0, 1). It satisfies every service invariant (order
preservation, truncation, determinism, unit-norm sentence vectors) without
downloading anything, which keeps the contract testable offline.

The ``transformers`` backend serves real models (configured by name) with
the same interface; it needs the optional torch/transformers extra and
local model weights.
"""

from __future__ import annotations

import hashlib
import os
import re

import numpy as np

TOKEN_TRUNCATION = 256
TOXICITY_TRUNCATION = 128

_TOKEN_RE = re.compile(r"[a-z0-9']+|[^\sa-z0-9']")


class BackendError(RuntimeError):
    pass


class HashedBackend:
    """Deterministic stand-in encoder/classifier."""

    dim = 32

    def __init__(self):
        self.models = {
            "token": f"hashed-token-{self.dim}d",
            "sentence": f"hashed-sentence-{self.dim}d",
            "toxicity": "hashed-toxicity",
        }

    # conceptual [CLS]/[SEP] markers are never emitted, so "special tokens
    # excluded" holds by construction
    def _tokenize(self, text: str, limit: int) -> list[str]:
        return _TOKEN_RE.findall(text.lower())[:limit]

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        raw = np.frombuffer(digest, dtype=np.uint8).astype(np.float64)
        centered = (raw - 127.5) / 128.0
        return centered / np.linalg.norm(centered)

    def token_embeddings(self, texts: list[str]):
        matrices, counts = [], []
        for text in texts:
            tokens = self._tokenize(text, TOKEN_TRUNCATION)
            if not tokens:
                tokens = ["[empty]"]
            matrices.append(np.stack([self._token_vector(t) for t in tokens]))
            counts.append(len(tokens))
        return self.dim, matrices, counts

    def sentence_embeddings(self, texts: list[str]):
        vectors, counts = [], []
        for text in texts:
            tokens = self._tokenize(text, TOKEN_TRUNCATION)
            if not tokens:
                tokens = ["[empty]"]
            mean = np.mean([self._token_vector(t) for t in tokens], axis=0)
            norm = np.linalg.norm(mean)
            vectors.append(mean / norm if norm > 0 else mean)
            counts.append(len(tokens))
        return self.dim, vectors, counts

    def toxicity(self, texts: list[str]) -> list[float]:
        scores = []
        for text in texts:
            tokens = self._tokenize(text, TOXICITY_TRUNCATION)
            key = " ".join(tokens).encode("utf-8")
            digest = hashlib.sha256(key).digest()
            scores.append(int.from_bytes(digest[:8], "big") / 2**64)
        return scores


class TransformersBackend:
    """Real models served by name; requires torch + transformers + weights."""

    def __init__(
        self,
        token_model: str = "bert-base-uncased",
        sentence_model: str = "sentence-transformers/all-MiniLM-L6-v2",
        toxicity_model: str = "tomh/toxigen_roberta",
        device: str = "cpu",
    ):
        try:
            import torch
            from transformers import (
                AutoModel,
                AutoModelForSequenceClassification,
                AutoTokenizer,
            )
        except ImportError as exc:
            raise BackendError(f"transformers backend unavailable: {exc}") from exc
        self._torch = torch
        self.device = device
        self.models = {
            "token": token_model,
            "sentence": sentence_model,
            "toxicity": toxicity_model,
        }
        self._tok_tokenizer = AutoTokenizer.from_pretrained(token_model)
        self._tok_model = AutoModel.from_pretrained(token_model).to(device).eval()
        self._sent_tokenizer = AutoTokenizer.from_pretrained(sentence_model)
        self._sent_model = AutoModel.from_pretrained(sentence_model).to(device).eval()
        self._tox_tokenizer = AutoTokenizer.from_pretrained(toxicity_model)
        self._tox_model = (
            AutoModelForSequenceClassification.from_pretrained(toxicity_model)
            .to(device)
            .eval()
        )

    def token_embeddings(self, texts: list[str]):
        torch = self._torch
        matrices, counts = [], []
        with torch.no_grad():
            for text in texts:
                enc = self._tok_tokenizer(
                    text, truncation=True, max_length=TOKEN_TRUNCATION, return_tensors="pt"
                ).to(self.device)
                hidden = self._tok_model(**enc).last_hidden_state[0]
                special = self._tok_tokenizer.get_special_tokens_mask(
                    enc["input_ids"][0].tolist(), already_has_special_tokens=True
                )
                keep = [i for i, s in enumerate(special) if not s]
                matrix = hidden[keep].cpu().numpy()
                if matrix.shape[0] == 0:
                    matrix = hidden.cpu().numpy()[:1]
                matrices.append(matrix[:TOKEN_TRUNCATION])
                counts.append(matrix.shape[0])
        dim = matrices[0].shape[1] if matrices else 0
        return dim, matrices, counts

    def sentence_embeddings(self, texts: list[str]):
        torch = self._torch
        vectors, counts = [], []
        with torch.no_grad():
            for text in texts:
                enc = self._sent_tokenizer(
                    text, truncation=True, max_length=TOKEN_TRUNCATION, return_tensors="pt"
                ).to(self.device)
                hidden = self._sent_model(**enc).last_hidden_state[0]
                mask = enc["attention_mask"][0].unsqueeze(-1)
                pooled = (hidden * mask).sum(0) / mask.sum()
                vector = pooled.cpu().numpy()
                norm = np.linalg.norm(vector)
                vectors.append(vector / norm if norm > 0 else vector)
                counts.append(int(enc["attention_mask"][0].sum()))
        dim = vectors[0].shape[0] if vectors else 0
        return dim, vectors, counts

    def toxicity(self, texts: list[str]) -> list[float]:
        torch = self._torch
        scores = []
        with torch.no_grad():
            for text in texts:
                enc = self._tox_tokenizer(
                    text,
                    truncation=True,
                    padding="max_length",
                    max_length=TOXICITY_TRUNCATION,
                    return_tensors="pt",
                ).to(self.device)
                logits = self._tox_model(**enc).logits[0]
                probs = torch.softmax(logits, dim=-1)
                scores.append(float(probs[-1]))
        return scores


def backend_from_env():
    kind = os.environ.get("MODELSVC_BACKEND", "hashed")
    if kind == "hashed":
        return HashedBackend()
    if kind == "transformers":
        return TransformersBackend(
            token_model=os.environ.get("MODELSVC_TOKEN_MODEL", "bert-base-uncased"),
            sentence_model=os.environ.get(
                "MODELSVC_SENTENCE_MODEL", "sentence-transformers/all-MiniLM-L6-v2"
            ),
            toxicity_model=os.environ.get("MODELSVC_TOXICITY_MODEL", "tomh/toxigen_roberta"),
            device=os.environ.get("MODELSVC_DEVICE", "cpu"),
        )
    raise BackendError(f"unknown backend {kind!r}")
