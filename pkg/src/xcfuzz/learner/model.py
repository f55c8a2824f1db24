"""Classifiers: a CART-style decision tree, adaptive boosting over shallow
trees, and a balanced-undersample ensemble of boosted committees.

The ensemble variant pairs all positive examples with an equal-size uniform
undersample of negatives per bag, boosts shallow trees on each bag, and
averages the bag scores; it trades precision for recall on heavily
imbalanced data.  Everything is deterministic for a given seed, and models
serialize to a versioned document with trees as nested split records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from xcfuzz.learner.embedding import Embedding
from xcfuzz.learner.vectors import FEATURE_DIM

MODEL_SCHEMA = "xcfuzz-model"
MODEL_VERSION = 1

EEC_BAGS = 10
EEC_ROUNDS = 10
EEC_TREE_DEPTH = 3
DT_DEPTH = 8
DEFAULT_THRESHOLD = 0.5

# score factor applied downstream: suspicious functions fuzz first
SUSPICIOUS_FACTOR = 0.5
BENIGN_FACTOR = 1.0


class ModelError(ValueError):
    pass


# -- CART ---------------------------------------------------------------------

def _gini_split(xs: np.ndarray, ys: np.ndarray, ws: np.ndarray):
    """Best threshold for one sorted feature column; returns (impurity, thr)."""
    wpos = np.cumsum(ws * ys)
    wneg = np.cumsum(ws * (1 - ys))
    total_pos, total_neg = wpos[-1], wneg[-1]
    lp, ln = wpos[:-1], wneg[:-1]
    rp, rn = total_pos - lp, total_neg - ln
    wl, wr = lp + ln, rp + rn
    valid = (xs[:-1] != xs[1:]) & (wl > 0) & (wr > 0)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gini_l = 1.0 - (lp / wl) ** 2 - (ln / wl) ** 2
        gini_r = 1.0 - (rp / wr) ** 2 - (rn / wr) ** 2
    impurity = np.where(valid, (wl * gini_l + wr * gini_r) / (wl + wr), np.inf)
    best = int(np.argmin(impurity))
    if not np.isfinite(impurity[best]):
        return None
    threshold = (xs[best] + xs[best + 1]) / 2.0
    return float(impurity[best]), threshold


def _leaf(ys: np.ndarray, ws: np.ndarray, majority_class: int) -> dict:
    total = ws.sum()
    score = float((ws * ys).sum() / total) if total > 0 else 0.5
    if score > 0.5:
        cls = 1
    elif score < 0.5:
        cls = 0
    else:
        cls = majority_class  # exact tie: side with the majority class
    return {"leaf": score, "cls": cls}


def _grow_tree(x: np.ndarray, y: np.ndarray, w: np.ndarray, depth: int,
               max_depth: int, majority_class: int) -> dict:
    if depth >= max_depth or len(y) < 2 or y.min() == y.max():
        return _leaf(y, w, majority_class)
    best = None  # (impurity, feature, threshold)
    for f in range(x.shape[1]):
        order = np.argsort(x[:, f], kind="stable")
        found = _gini_split(x[order, f], y[order], w[order])
        if found is None:
            continue
        impurity, threshold = found
        if best is None or impurity < best[0] - 1e-12:
            best = (impurity, f, threshold)
    if best is None:
        return _leaf(y, w, majority_class)
    _, f, threshold = best
    mask = x[:, f] <= threshold
    return {
        "feature": f,
        "threshold": float(threshold),
        "left": _grow_tree(x[mask], y[mask], w[mask], depth + 1, max_depth,
                           majority_class),
        "right": _grow_tree(x[~mask], y[~mask], w[~mask], depth + 1, max_depth,
                            majority_class),
    }


def _tree_walk(tree: dict, fv: np.ndarray) -> dict:
    node = tree
    while "leaf" not in node:
        node = node["left"] if fv[node["feature"]] <= node["threshold"] \
            else node["right"]
    return node


def tree_score(tree: dict, fv: np.ndarray) -> float:
    return float(_tree_walk(tree, fv)["leaf"])


def tree_class(tree: dict, fv: np.ndarray) -> int:
    return int(_tree_walk(tree, fv)["cls"])


# -- adaptive boosting --------------------------------------------------------

def _train_boosted(x: np.ndarray, y: np.ndarray, rounds: int,
                   max_depth: int) -> list[dict]:
    """Boosted shallow trees; each entry {alpha, tree}."""
    n = len(y)
    majority = int(y.sum() * 2 > n)
    w = np.full(n, 1.0 / n)
    committee: list[dict] = []
    for _ in range(rounds):
        tree = _grow_tree(x, y, w, 0, max_depth, majority)
        pred = np.fromiter((tree_class(tree, row) for row in x), dtype=int,
                           count=n)
        err = float(w[pred != y].sum())
        if err >= 0.5:
            break
        if err <= 1e-12:
            committee.append({"alpha": math.log(1e12), "tree": tree})
            break
        alpha = 0.5 * math.log((1.0 - err) / err)
        committee.append({"alpha": alpha, "tree": tree})
        signs = np.where(pred == y, -alpha, alpha)
        w = w * np.exp(signs)
        w /= w.sum()
    if not committee:
        committee.append({"alpha": 1.0,
                          "tree": _grow_tree(x, y, w, 0, max_depth, majority)})
    return committee


def _boosted_score(committee: list[dict], fv: np.ndarray) -> float:
    total = sum(m["alpha"] for m in committee)
    if total <= 0:
        return 0.5
    margin = sum(m["alpha"] * (2 * tree_class(m["tree"], fv) - 1)
                 for m in committee) / total
    return (margin + 1.0) / 2.0


# -- the ensemble model -------------------------------------------------------

@dataclass
class EnsembleModel:
    kind: str  # "eec" or "dt"
    bags: list[list[dict]]
    threshold: float = DEFAULT_THRESHOLD
    category: str | None = None
    feature_dim: int = FEATURE_DIM
    hyperparams: dict = field(default_factory=dict)
    bag_sizes: list[tuple[int, int]] = field(default_factory=list)

    def score(self, fv: np.ndarray) -> float:
        fv = np.asarray(fv, dtype=float)
        if fv.shape != (self.feature_dim,):
            raise ModelError(
                f"feature vector has {fv.shape} components, "
                f"expected ({self.feature_dim},)")
        if self.kind == "dt":
            return tree_score(self.bags[0][0]["tree"], fv)
        return float(np.mean([_boosted_score(bag, fv) for bag in self.bags]))


def _dedup(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse exact duplicate (vector, label) pairs, keeping first order."""
    seen: set[tuple] = set()
    keep: list[int] = []
    for i in range(len(y)):
        key = (x[i].tobytes(), int(y[i]))
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return x[keep], y[keep]


def train_classifier(data: list[tuple[np.ndarray, bool]], kind: str,
                     seed: int, n_bags: int = EEC_BAGS,
                     rounds: int = EEC_ROUNDS,
                     bag_depth: int = EEC_TREE_DEPTH,
                     dt_depth: int = DT_DEPTH,
                     threshold: float = DEFAULT_THRESHOLD,
                     category: str | None = None) -> EnsembleModel:
    if kind not in ("eec", "dt"):
        raise ModelError(f"unknown classifier kind {kind!r}")
    if not data:
        raise ModelError("empty training set")
    x = np.asarray([np.asarray(fv, dtype=float) for fv, _ in data])
    y = np.asarray([1 if flag else 0 for _, flag in data], dtype=int)
    x, y = _dedup(x, y)
    if y.min() == y.max():
        raise ModelError("training data has a single class")

    hyper = {"seed": seed, "threshold": threshold}
    if kind == "dt":
        hyper["max_depth"] = dt_depth
        majority = int(y.sum() * 2 > len(y))
        tree = _grow_tree(x, y, np.full(len(y), 1.0 / len(y)), 0, dt_depth,
                          majority)
        return EnsembleModel(kind="dt", bags=[[{"alpha": 1.0, "tree": tree}]],
                             threshold=threshold, category=category,
                             feature_dim=x.shape[1], hyperparams=hyper)

    hyper.update({"bags": n_bags, "rounds": rounds, "tree_depth": bag_depth})
    pos_idx = np.flatnonzero(y == 1)
    neg_idx = np.flatnonzero(y == 0)
    children = np.random.SeedSequence(seed).spawn(n_bags)
    bags: list[list[dict]] = []
    sizes: list[tuple[int, int]] = []
    for child in children:
        rng = np.random.default_rng(child)
        sampled = rng.choice(neg_idx, size=len(pos_idx),
                             replace=len(neg_idx) < len(pos_idx))
        rows = np.concatenate([pos_idx, sampled])
        bags.append(_train_boosted(x[rows], y[rows], rounds, bag_depth))
        sizes.append((len(pos_idx), len(sampled)))
    return EnsembleModel(kind="eec", bags=bags, threshold=threshold,
                         category=category, feature_dim=x.shape[1],
                         hyperparams=hyper, bag_sizes=sizes)


def predict_suspicious(model: EnsembleModel,
                       fv: np.ndarray) -> tuple[float, bool]:
    """Score plus the thresholded flag (score >= threshold is suspicious)."""
    score = model.score(fv)
    return score, score >= model.threshold


# -- model document (versioned, self-describing) ------------------------------

def model_document(model: EnsembleModel,
                   embedding: Embedding | None = None) -> dict:
    doc = {
        "schema": MODEL_SCHEMA,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "category": model.category,
        "threshold": model.threshold,
        "featureDim": model.feature_dim,
        "hyperparams": dict(model.hyperparams),
        "bagSizes": [list(s) for s in model.bag_sizes],
        "bags": model.bags,
    }
    if embedding is not None:
        doc["embedding"] = embedding.to_document()
    return doc


def load_model_document(doc: dict) -> tuple[EnsembleModel, Embedding | None]:
    if doc.get("schema") != MODEL_SCHEMA:
        raise ModelError(f"not a model document: schema={doc.get('schema')!r}")
    if doc.get("version") != MODEL_VERSION:
        raise ModelError(f"unsupported model version {doc.get('version')!r}")
    model = EnsembleModel(
        kind=doc["kind"], bags=doc["bags"], threshold=float(doc["threshold"]),
        category=doc.get("category"), feature_dim=int(doc["featureDim"]),
        hyperparams=dict(doc.get("hyperparams", {})),
        bag_sizes=[tuple(s) for s in doc.get("bagSizes", [])])
    embedding = None
    if "embedding" in doc:
        embedding = Embedding.from_document(doc["embedding"])
    return model, embedding


__all__ = [
    "BENIGN_FACTOR",
    "DEFAULT_THRESHOLD",
    "EnsembleModel",
    "ModelError",
    "SUSPICIOUS_FACTOR",
    "load_model_document",
    "model_document",
    "predict_suspicious",
    "train_classifier",
    "tree_class",
    "tree_score",
]
