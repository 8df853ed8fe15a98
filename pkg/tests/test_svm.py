"""Linear SVM training, scoring, and objective quality."""

import numpy as np
import pytest

from spvlad import (
    LinearSvmModel,
    hinge_objective,
    svm_predict,
    svm_scores,
    svm_train,
)


def cvxpy_reference(features, y, c):
    """Primal hinge QP solved by a generic convex solver; the independent
    reference for objective quality."""
    import cvxpy as cp

    n, d = features.shape
    w = cp.Variable(d)
    b = cp.Variable()
    xi = cp.Variable(n)
    problem = cp.Problem(
        cp.Minimize(0.5 * cp.sum_squares(w) + c * cp.sum(xi)),
        [xi >= 0, cp.multiply(y, features @ w + b) >= 1 - xi],
    )
    problem.solve()
    assert problem.status == "optimal"
    return float(problem.value)


def simplex_clusters(rng, n_classes=10, per_class=50, sigma=0.1):
    """Gaussian blobs on the unit-simplex vertices e_i of R^{n_classes}."""
    centers = np.eye(n_classes)
    features, labels = [], []
    for ci in range(n_classes):
        features.append(centers[ci] + rng.normal(0, sigma, size=(per_class, n_classes)))
        labels += [f"c{ci:02d}"] * per_class
    return np.concatenate(features), labels, centers


def test_two_point_max_margin():
    features = np.array([[-1.0, 0.0], [1.0, 0.0]])
    labels = ["a", "b"]
    model = svm_train(features, labels, c=1.0)
    assert model.classes == ("a", "b")
    assert svm_predict(model, features[0]) == "a"
    assert svm_predict(model, features[1]) == "b"
    # analytic solution per class: |w| = (1, 0) direction, zero bias
    assert np.allclose(model.weights[0], [-1.0, 0.0], atol=1e-3)
    assert np.allclose(model.weights[1], [1.0, 0.0], atol=1e-3)
    assert np.allclose(model.biases, 0.0, atol=1e-3)
    # the decision boundary crosses x = 0
    mid = svm_scores(model, np.zeros(2))
    assert abs(mid[0] - mid[1]) < 1e-3


def test_single_class_rejected():
    with pytest.raises(ValueError, match="single-class"):
        svm_train(np.zeros((3, 2)), ["a", "a", "a"])


def test_ten_simplex_clusters_train_accuracy():
    rng = np.random.default_rng(0)
    features, labels, centers = simplex_clusters(rng)
    # generator margin check: nearest-center rule is already perfect
    nearest = [
        f"c{int(np.argmin(((centers - f) ** 2).sum(axis=1))):02d}" for f in features
    ]
    assert nearest == labels
    model = svm_train(features, labels, c=1.0)
    correct = sum(svm_predict(model, f) == lbl for f, lbl in zip(features, labels))
    assert correct / len(labels) >= 0.99


def test_scores_at_origin_equal_biases():
    model = LinearSvmModel(
        classes=("a", "b"),
        weights=np.array([[1.0, 2.0], [3.0, 4.0]]),
        biases=np.array([0.5, -0.25]),
        regularization_c=1.0,
    )
    assert np.allclose(svm_scores(model, np.zeros(2)), [0.5, -0.25])


def test_score_linearity_in_input():
    model = LinearSvmModel(
        classes=("a", "b"),
        weights=np.array([[1.0, -2.0], [0.5, 4.0]]),
        biases=np.array([0.25, -1.0]),
        regularization_c=1.0,
    )
    x = np.array([0.3, -0.7])
    s1 = svm_scores(model, x) - model.biases
    s2 = svm_scores(model, 2.0 * x) - model.biases
    assert np.allclose(s2, 2.0 * s1, atol=1e-6)


def test_scores_match_dot_product_oracle():
    rng = np.random.default_rng(1)
    model = LinearSvmModel(
        classes=("a", "b", "c"),
        weights=rng.standard_normal((3, 5)),
        biases=rng.standard_normal(3),
        regularization_c=1.0,
    )
    x = rng.standard_normal(5)
    got = svm_scores(model, x)
    for ci in range(3):
        expected = sum(float(model.weights[ci, t]) * x[t] for t in range(5)) + float(
            model.biases[ci]
        )
        assert got[ci] == pytest.approx(expected, abs=1e-9)


def test_predict_argmax_and_tie_break():
    model = LinearSvmModel(
        classes=("bridge", "tunnel"),
        weights=np.zeros((2, 2)),
        biases=np.array([0.9, 0.1]),
        regularization_c=1.0,
    )
    assert svm_predict(model, np.zeros(2)) == "bridge"
    tie = LinearSvmModel(
        classes=("bridge", "tunnel"),
        weights=np.zeros((2, 2)),
        biases=np.array([0.4, 0.4]),
        regularization_c=1.0,
    )
    assert svm_predict(tie, np.ones(2)) == "bridge"


def test_zero_bias_scale_invariance():
    rng = np.random.default_rng(2)
    model = LinearSvmModel(
        classes=("a", "b", "c"),
        weights=rng.standard_normal((3, 4)),
        biases=np.zeros(3),
        regularization_c=1.0,
    )
    for _ in range(20):
        x = rng.standard_normal(4)
        base = svm_predict(model, x)
        for alpha in (1e-3, 0.5, 7.0, 1e3):
            assert svm_predict(model, alpha * x) == base


def test_training_is_deterministic():
    rng = np.random.default_rng(3)
    features = rng.standard_normal((60, 6))
    labels = [f"c{i % 3}" for i in range(60)]
    a = svm_train(features, labels, c=1.0, seed=1)
    b = svm_train(features, labels, c=1.0, seed=99)  # seed is inert by design
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.biases, b.biases)


@pytest.mark.parametrize("n,d,c,seed", [(40, 5, 1.0, 4), (200, 10, 1.0, 5), (60, 4, 0.3, 6)])
def test_objective_matches_reference_solve(n, d, c, seed):
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    labels = ["pos" if v > 0 else "neg" for v in rng.standard_normal(n)]
    model = svm_train(features, labels, c=c)
    y = np.where(np.asarray(labels) == model.classes[0], 1.0, -1.0)
    mine = hinge_objective(
        model.weights[0].astype(np.float64), float(model.biases[0]), features, y, c
    )
    reference = cvxpy_reference(features, y, c)
    assert mine <= reference * (1 + 1e-3) + 1e-9


def test_input_validation():
    with pytest.raises(ValueError, match="non-empty"):
        svm_train(np.zeros((0, 3)), [])
    bad = np.zeros((4, 2))
    bad[1, 1] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        svm_train(bad, ["a", "b", "a", "b"])
    model = svm_train(np.array([[-1.0, 0.0], [1.0, 0.0]]), ["a", "b"])
    with pytest.raises(ValueError, match="dimension mismatch"):
        svm_scores(model, np.zeros(3))
