"""Skip-gram token embedding with negative sampling, trained from scratch.

The vocabulary is the collapsed opcode alphabet (at most a few dozen
tokens), so a plain numpy SGD loop is plenty.  Training is fully
deterministic for a given seed: the vocabulary is sorted, the iteration
order is fixed, and all sampling comes from one seeded generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EMBEDDING_DIM = 20

# Defaults: standard skip-gram settings; the tiny vocabulary makes them
# uncritical.
DEFAULT_WINDOW = 5
DEFAULT_NEGATIVES = 5
DEFAULT_EPOCHS = 10
DEFAULT_LEARNING_RATE = 0.025
_MIN_LEARNING_RATE = 1e-4


@dataclass
class Embedding:
    vectors: dict[str, np.ndarray]
    dim: int = EMBEDDING_DIM
    seed: int = 0
    hyperparams: dict = field(default_factory=dict)

    def vector(self, token: str) -> np.ndarray:
        """Token vector; unknown tokens map to the zero vector."""
        v = self.vectors.get(token)
        if v is None:
            return np.zeros(self.dim)
        return v

    def to_document(self) -> dict:
        return {
            "dim": self.dim,
            "seed": self.seed,
            "hyperparams": dict(self.hyperparams),
            "vectors": {t: [float(x) for x in v]
                        for t, v in sorted(self.vectors.items())},
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Embedding":
        return cls(vectors={t: np.asarray(v, dtype=float)
                            for t, v in doc["vectors"].items()},
                   dim=int(doc["dim"]), seed=int(doc["seed"]),
                   hyperparams=dict(doc.get("hyperparams", {})))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


def train_embedding(corpus: list[list[str]], seed: int,
                    dim: int = EMBEDDING_DIM,
                    window: int = DEFAULT_WINDOW,
                    negatives: int = DEFAULT_NEGATIVES,
                    epochs: int = DEFAULT_EPOCHS,
                    learning_rate: float = DEFAULT_LEARNING_RATE) -> Embedding:
    sentences = [s for s in corpus if s]
    if not sentences:
        raise ValueError("embedding corpus is empty")

    vocab = sorted({token for s in sentences for token in s})
    index = {t: i for i, t in enumerate(vocab)}
    counts = np.zeros(len(vocab))
    for s in sentences:
        for t in s:
            counts[index[t]] += 1
    noise = counts ** 0.75
    noise /= noise.sum()

    rng = np.random.default_rng(seed)
    w_in = (rng.random((len(vocab), dim)) - 0.5) / dim
    w_out = np.zeros((len(vocab), dim))

    pairs_per_epoch = sum(
        min(i + window, len(s) - 1) - max(i - window, 0)
        for s in sentences for i in range(len(s)))
    total = max(1, pairs_per_epoch * epochs)
    labels = np.zeros(negatives + 1)
    labels[0] = 1.0

    step = 0
    for _ in range(epochs):
        for s in sentences:
            ids = [index[t] for t in s]
            for i, center in enumerate(ids):
                lo = max(i - window, 0)
                hi = min(i + window, len(ids) - 1)
                for j in range(lo, hi + 1):
                    if j == i:
                        continue
                    lr = max(_MIN_LEARNING_RATE,
                             learning_rate * (1.0 - step / total))
                    step += 1
                    targets = np.empty(negatives + 1, dtype=int)
                    targets[0] = ids[j]
                    targets[1:] = rng.choice(len(vocab), size=negatives,
                                             p=noise)
                    h = w_in[center]
                    u = w_out[targets]
                    grad = lr * (labels - _sigmoid(u @ h))
                    w_in[center] = h + grad @ u
                    np.add.at(w_out, targets, np.outer(grad, h))

    return Embedding(
        vectors={t: w_in[index[t]].copy() for t in vocab},
        dim=dim, seed=seed,
        hyperparams={"window": window, "negatives": negatives,
                     "epochs": epochs, "learning_rate": learning_rate})


__all__ = ["EMBEDDING_DIM", "Embedding", "train_embedding"]
