"""Feature vectors: 20 embedding components plus the 7 static flags."""

from __future__ import annotations

import numpy as np

from xcfuzz.analysis.features import StaticFeatures
from xcfuzz.learner.embedding import EMBEDDING_DIM, Embedding

FEATURE_DIM = EMBEDDING_DIM + 7  # 27 total


def build_feature_vector(tokens: list[str], emb: Embedding,
                         sf: StaticFeatures) -> np.ndarray:
    """Mean of token vectors, then the static flags in table order."""
    out = np.zeros(FEATURE_DIM)
    if tokens:
        head = np.zeros(emb.dim)
        for t in tokens:
            head += emb.vector(t)
        out[:EMBEDDING_DIM] = head / len(tokens)
    out[EMBEDDING_DIM:] = sf.as_tuple()
    return out


__all__ = ["FEATURE_DIM", "build_feature_vector"]
