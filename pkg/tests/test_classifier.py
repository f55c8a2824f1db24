import json

import numpy as np
import pytest

from xcfuzz.learner.metrics import coverage_rate, evaluate, pr_curve
from xcfuzz.learner.model import (
    ModelError,
    model_document,
    load_model_document,
    predict_suspicious,
    train_classifier,
)
from xcfuzz.learner.vectors import FEATURE_DIM


def separable_dataset(rng: np.ndarray, n: int = 1000, imbalance: int = 50,
                      dim: int = FEATURE_DIM):
    """Linearly separable features at roughly 1:imbalance."""
    n_pos = max(2, n // (imbalance + 1))
    n_neg = n - n_pos
    pos = rng.normal(loc=2.0, scale=0.4, size=(n_pos, dim))
    neg = rng.normal(loc=-2.0, scale=0.4, size=(n_neg, dim))
    x = np.vstack([pos, neg])
    y = np.array([True] * n_pos + [False] * n_neg)
    order = rng.permutation(n)
    return x[order], y[order]


def _split(x, y, frac=0.7):
    cut = int(len(y) * frac)
    return (x[:cut], y[:cut]), (x[cut:], y[cut:])


def test_eec_recall_on_imbalanced_separable_data():
    rng = np.random.default_rng(0)
    x, y = separable_dataset(rng)
    (xt, yt), (xv, yv) = _split(x, y)
    model = train_classifier(list(zip(xt, yt)), "eec", seed=7)
    scores = np.array([model.score(v) for v in xv])
    pred = scores >= model.threshold
    positives = yv.sum()
    assert positives > 0
    recall = (pred & yv).sum() / positives
    assert recall >= 0.9


def test_every_eec_bag_is_class_balanced():
    rng = np.random.default_rng(1)
    x, y = separable_dataset(rng, n=600)
    model = train_classifier(list(zip(x, y)), "eec", seed=3)
    assert model.bag_sizes
    for pos, neg in model.bag_sizes:
        assert pos == neg


def test_decision_tree_fits_xor_exactly():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([False, True, True, False])
    model = train_classifier(list(zip(x, y)), "dt", seed=0, dt_depth=2)
    for row, label in zip(x, y):
        score, flag = predict_suspicious(model, row)
        assert flag == label


def test_threshold_boundary_is_inclusive():
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    y = np.array([False, True])
    model = train_classifier(list(zip(x, y)), "dt", seed=0)
    model.threshold = 0.5
    score, flag = predict_suspicious(model, np.array([1.0, 1.0]))
    assert score >= 0.5
    assert flag
    # a score exactly at the threshold still counts as suspicious
    model.threshold = score
    _, flag2 = predict_suspicious(model, np.array([1.0, 1.0]))
    assert flag2


def test_dimension_mismatch_rejected():
    rng = np.random.default_rng(5)
    x, y = separable_dataset(rng, n=300)
    model = train_classifier(list(zip(x, y)), "eec", seed=1)
    with pytest.raises(ModelError, match="components"):
        model.score(np.zeros(26))


def test_single_class_data_rejected():
    x = np.random.default_rng(2).normal(size=(10, 27))
    with pytest.raises(ModelError, match="single class"):
        train_classifier([(row, True) for row in x], "eec", seed=0)


def test_training_is_deterministic_and_serializable():
    rng = np.random.default_rng(9)
    x, y = separable_dataset(rng, n=400)
    data = list(zip(x, y))
    doc_a = model_document(train_classifier(data, "eec", seed=42))
    doc_b = model_document(train_classifier(data, "eec", seed=42))
    assert json.dumps(doc_a, sort_keys=True) == json.dumps(doc_b, sort_keys=True)
    model, _ = load_model_document(json.loads(json.dumps(doc_a)))
    original = train_classifier(data, "eec", seed=42)
    probe = x[:20]
    assert [model.score(v) for v in probe] == [original.score(v) for v in probe]


def test_suspicious_factor_contract():
    from xcfuzz.learner.model import BENIGN_FACTOR, SUSPICIOUS_FACTOR

    assert SUSPICIOUS_FACTOR == 0.5
    assert BENIGN_FACTOR == 1.0


# -- metrics ------------------------------------------------------------------


def test_coverage_rate_direct_set_arithmetic():
    cr = coverage_rate({"a", "b", "c"}, {"t": {"b", "c", "d"}})
    assert cr["t"] == pytest.approx(2 / 3)


def test_coverage_rate_subset_is_one():
    cr = coverage_rate({"a", "b", "c"}, {"t": {"a", "b"}})
    assert cr["t"] == 1.0


def test_coverage_rate_absent_when_tool_reports_nothing():
    cr = coverage_rate({"a"}, {"t": set()})
    assert cr["t"] is None


def test_precision_arithmetic_fixture():
    # 26 true positives and 74 false positives at one threshold
    scores = [0.9] * 100 + [0.1] * 50
    labels = [True] * 26 + [False] * 74 + [True] * 10 + [False] * 40
    points = pr_curve(scores, labels)
    top = [p for p in points if p.threshold == 0.9][0]
    assert top.precision == pytest.approx(0.26)


def test_recall_monotone_in_threshold():
    rng = np.random.default_rng(3)
    scores = rng.random(200).tolist()
    labels = (rng.random(200) < 0.3).tolist()
    if not any(labels):
        labels[0] = True
    points = pr_curve(scores, labels)  # thresholds descending
    recalls = [p.recall for p in points]
    assert recalls == sorted(recalls)  # recall grows as threshold drops


def test_precision_monotone_on_separated_scores():
    # well-separated score distributions: precision never drops as the
    # threshold rises
    scores = [0.95, 0.9, 0.85, 0.4, 0.3, 0.2]
    labels = [True, True, True, False, False, False]
    points = pr_curve(scores, labels)
    by_thr = sorted(points, key=lambda p: p.threshold)
    precisions = [p.precision for p in by_thr]
    assert precisions == sorted(precisions)


def test_evaluate_combines_curve_and_coverage():
    rng = np.random.default_rng(11)
    x, y = separable_dataset(rng, n=300)
    model = train_classifier(list(zip(x, y)), "eec", seed=2)
    test = [(i, v, bool(flag)) for i, (v, flag) in enumerate(zip(x, y))]
    tools = {"toolA": {i for i, (_, _, f) in enumerate(test) if f},
             "toolB": set()}
    curve, coverage = evaluate(model, test, tools)
    assert curve
    assert coverage["toolB"] is None
    assert 0.0 <= coverage["toolA"] <= 1.0


def test_cr_monotone_under_model_set_growth():
    smaller = coverage_rate({"a"}, {"t": {"a", "b", "c"}})["t"]
    bigger = coverage_rate({"a", "b"}, {"t": {"a", "b", "c"}})["t"]
    assert bigger >= smaller
