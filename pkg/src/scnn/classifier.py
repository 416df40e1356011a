"""One-vs-rest linear SVM trained by Pegasos-style subgradient steps.

Each of the K binary problems minimizes

    (reg/2)||w||^2 + mean_i max(0, 1 - y_i (w . x_i + b)),   y_i in {-1, +1}

with step 1/(reg t) at update t. The bias is handled as an extra constant
feature, so it is regularized too. All K problems share one shuffled pass
per epoch, which keeps the run deterministic for a fixed seed. The returned
weights are the mean iterate over the second half of the epochs (suffix
averaging); the last iterate of a subgradient method is too noisy to use.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .linalg import make_rng

log = logging.getLogger(__name__)

REG_GRID = (1e-4, 1e-3, 1e-2)


@dataclass(frozen=True)
class LinearClassifier:
    weights: np.ndarray  # K x m
    biases: np.ndarray  # K
    reg: float


def _signed_targets(labels, k):
    return np.where(labels[:, None] == np.arange(k)[None, :], 1.0, -1.0)


def hinge_objective(model, codes, labels):
    """Sum over classes of the regularized one-vs-rest hinge objective."""
    k = model.weights.shape[0]
    y = _signed_targets(np.asarray(labels), k)
    scores = codes @ model.weights.T + model.biases
    loss = np.maximum(0.0, 1.0 - y * scores).mean(axis=0)
    reg = 0.5 * model.reg * (np.sum(model.weights ** 2, axis=1) + model.biases ** 2)
    return float(np.sum(loss + reg))


def svm_fit(codes, labels, k=10, reg=1e-3, epochs=50, seed=0, history=None):
    """Train K one-vs-rest hinge classifiers.

    ``history`` (a list) receives the training objective after each epoch.
    """
    codes = np.asarray(codes, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, m = codes.shape
    if labels.shape != (n,):
        raise ValueError(f"{labels.shape[0]} labels for {n} rows")
    if k < 2 or labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k}) with k >= 2")
    if reg <= 0 or epochs < 1:
        raise ValueError(f"need reg > 0 and epochs >= 1, got {reg}, {epochs}")
    for cls in np.setdiff1d(np.arange(k), labels):
        log.warning("class %d has no training examples", cls)

    feats = np.hstack([codes, np.ones((n, 1))])
    y = _signed_targets(labels, k)
    w = np.zeros((k, m + 1))
    avg = np.zeros_like(w)
    averaged = 0
    rng = make_rng(seed)
    radius = 1.0 / np.sqrt(reg)
    t = 0
    for epoch in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (reg * t)
            xi = feats[i]
            active = y[i] * (w @ xi) < 1.0
            w *= 1.0 - eta * reg
            w[active] += (eta * y[i, active])[:, None] * xi[None, :]
            # Pegasos projection onto the ball that contains the optimum.
            norms = np.sqrt(np.sum(w * w, axis=1))
            over = norms > radius
            w[over] *= (radius / norms[over])[:, None]
            if 2 * epoch >= epochs - 1:
                avg += w
                averaged += 1
        if history is not None:
            cur = avg / averaged if averaged else w
            history.append(hinge_objective(
                LinearClassifier(cur[:, :m].copy(), cur[:, m].copy(), reg), codes, labels))
    w = avg / averaged
    return LinearClassifier(weights=w[:, :m].copy(), biases=w[:, m].copy(), reg=reg)


def svm_predict(model, codes):
    codes = np.asarray(codes, dtype=np.float64)
    if codes.ndim != 2 or codes.shape[1] != model.weights.shape[1]:
        raise ValueError(f"codes have shape {codes.shape}; classifier expects "
                         f"{model.weights.shape[1]} features")
    scores = codes @ model.weights.T + model.biases
    # argmax returns the first maximum, i.e. ties go to the lowest class index
    return np.argmax(scores, axis=1)


def svm_fit_select(train_codes, train_labels, val_codes, val_labels, k=10,
                   regs=REG_GRID, epochs=50, seed=0):
    """Fit one classifier per reg value and keep the best on validation accuracy."""
    best = None
    for reg in regs:
        model = svm_fit(train_codes, train_labels, k, reg, epochs, seed)
        acc = float(np.mean(svm_predict(model, val_codes) == val_labels))
        if best is None or acc > best[1]:
            best = (model, acc)
    return best
