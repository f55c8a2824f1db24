"""Evaluation: precision-recall sweeps and the coverage-rate metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from xcfuzz.learner.model import EnsembleModel


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float


def pr_curve(scores: list[float], labels: list[bool]) -> list[PRPoint]:
    """One point per distinct score threshold, descending."""
    if not scores or len(scores) != len(labels):
        raise ValueError("scores and labels must be equal-length, non-empty")
    y = np.asarray([1 if l else 0 for l in labels])
    s = np.asarray(scores, dtype=float)
    positives = int(y.sum())
    if positives == 0:
        raise ValueError("no positive labels in the test set")
    points = []
    for threshold in sorted(set(scores), reverse=True):
        pred = s >= threshold
        tp = int((pred & (y == 1)).sum())
        fp = int((pred & (y == 0)).sum())
        points.append(PRPoint(threshold=float(threshold),
                              precision=tp / (tp + fp),
                              recall=tp / positives))
    return points


def coverage_rate(model_true_positives: set,
                  tool_reports: dict[str, set]) -> dict[str, float | None]:
    """Per tool: |R_m intersect R_t| / |R_t|; None when the tool reports
    nothing (matches the published tables' N.A. entries)."""
    out: dict[str, float | None] = {}
    for tool, reported in tool_reports.items():
        if not reported:
            out[tool] = None
        else:
            out[tool] = len(model_true_positives & reported) / len(reported)
    return out


def evaluate(model: EnsembleModel,
             test: list[tuple[object, np.ndarray, bool]],
             tool_reports: dict[str, set] | None = None
             ) -> tuple[list[PRPoint], dict[str, float | None]]:
    """PR sweep over the model's scores plus coverage rates.

    ``test`` holds (item id, feature vector, label); the model's
    true-positive set at its own threshold feeds the coverage rates.
    """
    if not test:
        raise ValueError("empty test set")
    scores = [model.score(fv) for _, fv, _ in test]
    labels = [flag for _, _, flag in test]
    curve = pr_curve(scores, labels)
    true_positives = {item_id for (item_id, _, flag), score
                      in zip(test, scores)
                      if flag and score >= model.threshold}
    coverage = coverage_rate(true_positives, tool_reports or {})
    return curve, coverage


__all__ = ["PRPoint", "coverage_rate", "evaluate", "pr_curve"]
