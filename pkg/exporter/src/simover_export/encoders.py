"""Text encoders behind one small interface.

The default path loads a sentence-transformers model by id. A deterministic
hashing encoder ("hashing:<dim>") exists for offline smoke runs and tests; it
is not a semantic embedding.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np


class EncoderError(RuntimeError):
    """A model id could not be resolved or loaded."""


class HashingEncoder:
    """Deterministic bag-of-words hashing vectors, L2-normalized."""

    def __init__(self, dimension: int):
        if dimension < 1:
            raise EncoderError(f"hashing encoder needs a positive dimension, got {dimension}")
        self.dimension = dimension

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension))
        for i, text in enumerate(texts):
            for token in text.split():
                digest = hashlib.sha256(token.encode("utf-8")).digest()
                index = int.from_bytes(digest[:4], "big") % self.dimension
                sign = 1.0 if digest[4] % 2 == 0 else -1.0
                out[i, index] += sign
            norm = math.sqrt(float(out[i] @ out[i]))
            if norm > 0:
                out[i] /= norm
        return out


class SentenceTransformerEncoder:
    """sentence-transformers model wrapper; deterministic for a pinned model."""

    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:  # pragma: no cover - install-time problem
            raise EncoderError("sentence-transformers is not installed") from exc
        try:
            self._model = SentenceTransformer(model_id)
        except Exception as exc:
            raise EncoderError(f"could not load model {model_id!r}: {exc}") from exc
        self.model_id = model_id
        self.dimension = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        vectors = self._model.encode(
            texts, convert_to_numpy=True, show_progress_bar=False
        )
        return np.asarray(vectors, dtype=np.float64)


def resolve_encoder(model_id: str):
    """Map a model id to an encoder: "hashing:<dim>" or a sentence-transformers id."""
    if model_id.startswith("hashing:"):
        try:
            dimension = int(model_id.split(":", 1)[1])
        except ValueError as exc:
            raise EncoderError(f"bad hashing encoder id {model_id!r}") from exc
        return HashingEncoder(dimension)
    return SentenceTransformerEncoder(model_id)


def embed(
    texts: list[str],
    model_id: str,
    batch_size: int = 32,
    encoder=None,
) -> np.ndarray:
    """One vector per text; dimension fixed by the model. Batch boundaries do
    not change the result."""
    if not texts:
        raise ValueError("embed requires a nonempty batch of texts")
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    encoder = encoder or resolve_encoder(model_id)
    chunks = [
        encoder.encode(list(texts[i : i + batch_size]))
        for i in range(0, len(texts), batch_size)
    ]
    return np.vstack(chunks)
