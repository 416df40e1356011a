import numpy as np
import pytest

from scnn.classifier import (LinearClassifier, hinge_objective, svm_fit, svm_fit_select,
                             svm_predict)


def _clouds(rng, n=100):
    a = rng.standard_normal((n, 2)) * 0.3 + [3.0, 3.0]
    b = rng.standard_normal((n, 2)) * 0.3 - [3.0, 3.0]
    return np.vstack([a, b]), np.repeat([0, 1], n)


def test_separable_clouds_are_fit_exactly(rng):
    x, y = _clouds(rng)
    model = svm_fit(x, y, k=2, reg=1e-3, epochs=20)
    assert np.mean(svm_predict(model, x) == y) == 1.0


def test_random_labels_give_prior_accuracy(rng):
    x = rng.standard_normal((400, 2))
    y = rng.integers(0, 3, 400)
    model = svm_fit(x, y, k=3, reg=1e-2, epochs=20)
    prior = np.bincount(y).max() / y.size
    assert abs(np.mean(svm_predict(model, x) == y) - prior) <= 0.1


def test_same_seed_same_weights(rng):
    x, y = _clouds(rng, 30)
    a = svm_fit(x, y, k=2, seed=4, epochs=5)
    b = svm_fit(x, y, k=2, seed=4, epochs=5)
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.biases, b.biases)


def test_predict_ties_and_margins():
    zero = LinearClassifier(np.zeros((4, 3)), np.zeros(4), 1e-3)
    assert np.all(svm_predict(zero, np.ones((5, 3))) == 0)
    biased = LinearClassifier(np.zeros((4, 3)), np.array([0, 0, 0, 1e6]), 1e-3)
    assert np.all(svm_predict(biased, np.ones((2, 3))) == 3)
    with pytest.raises(ValueError):
        svm_predict(zero, np.ones((2, 4)))


def test_empty_class_warns(rng, caplog):
    x, y = _clouds(rng, 20)
    model = svm_fit(x, y, k=3, epochs=2)
    assert "class 2 has no training examples" in caplog.text
    assert model.weights.shape == (3, 2)


def test_input_validation(rng):
    x, y = _clouds(rng, 5)
    with pytest.raises(ValueError):
        svm_fit(x, y[:-1], k=2)
    with pytest.raises(ValueError):
        svm_fit(x, y + 5, k=2)
    with pytest.raises(ValueError):
        svm_fit(x, y, k=2, reg=0.0)


def test_objective_decreases_over_epochs(rng):
    x, y = _clouds(rng, 50)
    history = []
    svm_fit(x, y, k=2, reg=1e-2, epochs=30, history=history)
    assert history[-1] < history[0]


def test_permuting_feature_columns_permutes_weights(rng):
    x, y = _clouds(rng, 30)
    perm = [1, 0]
    a = svm_fit(x, y, k=2, epochs=5, seed=1)
    b = svm_fit(x[:, perm], y, k=2, epochs=5, seed=1)
    assert np.allclose(a.weights[:, perm], b.weights, atol=1e-12)


def test_fit_select_keeps_best(rng):
    x, y = _clouds(rng, 40)
    model, acc = svm_fit_select(x, y, x, y, k=2, epochs=5)
    assert acc == 1.0
    assert model.reg == 1e-4  # first reg wins ties
    assert hinge_objective(model, x, y) >= 0.0
