"""Reference methods: PCA, a Sparsenet-style learner, and a tiny lasso solver.

The Sparsenet learner minimizes

    (1/2)||X - U D^T||_F^2 + lam * sum log(1 + (u / sigma)^2)

by alternating gradient descent on U (with backtracking) and projected
gradient descent on D. Unlike the SCNN encoder it has to re-run the U
optimization for every new input.
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, make_rng, spectral_norm, uniform_init
from .model import NumericalError, project_columns_unit_ball, soft_threshold


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # p
    components: np.ndarray  # p x k, orthonormal columns


def pca_fit(x, k):
    """Top-k principal directions of the mean-centered rows of ``x``.

    Sign convention: the largest-magnitude entry of every component is
    positive.
    """
    x = as_matrix(x, "X")
    n, p = x.shape
    if not 1 <= k <= p:
        raise ValueError(f"k must lie in [1, {p}], got {k}")
    if n < 2:
        raise ValueError("pca_fit needs at least 2 rows")
    mean = x.mean(axis=0)
    xc = x - mean
    vals, vecs = np.linalg.eigh(xc.T @ xc / (n - 1))
    order = np.argsort(vals, kind="stable")[::-1][:k]
    comps = vecs[:, order]
    peak = np.argmax(np.abs(comps), axis=0)
    signs = np.sign(comps[peak, np.arange(k)])
    comps = comps * np.where(signs == 0, 1.0, signs)
    return PcaModel(mean=mean, components=comps)


def pca_reconstruct(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.mean.shape[0]:
        raise ValueError(f"data has shape {x.shape}; PCA model expects {model.mean.shape[0]} columns")
    v = model.components
    return model.mean + ((x - model.mean) @ v) @ v.T


@dataclass(frozen=True)
class SparsenetModel:
    d: np.ndarray  # p x m
    sigma: float
    lam: float


def sparsity_penalty(u, lam, sigma):
    return lam * float(np.sum(np.log1p((u / sigma) ** 2)))


def sparsity_penalty_grad(u, lam, sigma):
    return lam * 2.0 * u / (sigma * sigma + u * u)


def sparsenet_energy(x, u, d, lam, sigma):
    r = x - u @ d.T
    return 0.5 * float(np.sum(r * r)) + sparsity_penalty(u, lam, sigma)


def _infer_codes(x, d, u, lam, sigma, max_iter, rtol, trace=None):
    """Gradient descent on U with halving backtracking; D fixed."""
    gram = d.T @ d
    xd = x @ d
    step0 = 1.0 / max(spectral_norm(gram), 1e-12)
    obj = sparsenet_energy(x, u, d, lam, sigma)
    for _ in range(max_iter):
        g = u @ gram - xd + sparsity_penalty_grad(u, lam, sigma)
        step = step0
        for _ in range(60):
            cand = u - step * g
            new = sparsenet_energy(x, cand, d, lam, sigma)
            if new <= obj:
                break
            step *= 0.5
        else:
            break
        if not math.isfinite(new):
            raise NumericalError("non-finite Sparsenet energy during code inference")
        u = cand
        if trace is not None:
            trace.append(new)
        done = abs(obj - new) / max(abs(obj), 1e-12) < rtol
        obj = new
        if done:
            break
    return u


def sparsenet_fit(x, m, lam, sigma=0.316, outer=30, inner_u=200, inner_d=100,
                  rtol=1e-6, seed=0, trace=None):
    """Alternate code inference and projected dictionary descent.

    ``trace`` (a list) receives the energy after every alternation.
    """
    x = as_matrix(x, "X")
    if lam < 0 or sigma <= 0:
        raise ValueError("need lam >= 0 and sigma > 0")
    n, p = x.shape
    rng = make_rng(seed)
    d = project_columns_unit_ball(uniform_init(p, m, rng))
    u = np.zeros((n, m))
    prev = sparsenet_energy(x, u, d, lam, sigma)
    for _ in range(outer):
        u = _infer_codes(x, d, u, lam, sigma, inner_u, rtol)
        utu = u.T @ u
        xtu = x.T @ u
        eta = 1.0 / max(spectral_norm(utu), 1e-12)
        for _ in range(inner_d):
            d_new = project_columns_unit_ball(d - eta * (d @ utu - xtu))
            if np.max(np.abs(d_new - d)) < 1e-12:
                d = d_new
                break
            d = d_new
        cur = sparsenet_energy(x, u, d, lam, sigma)
        if not math.isfinite(cur):
            raise NumericalError("non-finite Sparsenet energy during training")
        if trace is not None:
            trace.append(cur)
        done = abs(prev - cur) / max(abs(prev), 1e-12) < rtol
        prev = cur
        if done:
            break
    return SparsenetModel(d=d, sigma=sigma, lam=lam)


def sparsenet_infer(model, x, max_iter=500, rtol=1e-6, trace=None):
    """Codes for new data; requires a fresh optimization per call."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.d.shape[0]:
        raise ValueError(f"data has shape {x.shape}; model expects {model.d.shape[0]} columns")
    u = np.zeros((x.shape[0], model.d.shape[1]))
    return _infer_codes(x, model.d, u, model.lam, model.sigma, max_iter, rtol, trace)


def lasso_oracle(x_row, d, target, lam, tol=1e-12, max_sweeps=200000):
    """Exact coordinate descent for one row of the code subproblem.

    Minimizes (1/p)||x - D u||^2 + (1/m)||u - t||^2 + (2 lam/m)||u||_1.
    Test helper only: at most 10 atoms.
    """
    x_row = np.asarray(x_row, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    p, m = d.shape
    if m > 10:
        raise ValueError(f"lasso_oracle is limited to m <= 10, got {m}")
    a = np.sum(d * d, axis=0)
    u = np.zeros(m)
    r = x_row.copy()  # x - D u
    for _ in range(max_sweeps):
        biggest = 0.0
        for k in range(m):
            rk = d[:, k] @ r + a[k] * u[k]
            new = soft_threshold(rk / p + t[k] / m, lam / m) / (a[k] / p + 1.0 / m)
            delta = new - u[k]
            if delta != 0.0:
                r -= delta * d[:, k]
                u[k] = new
                biggest = max(biggest, abs(delta))
        if biggest < tol:
            break
    return u


def code_objective(x, u, d, target, lam):
    """(1/p)||X - U D^T||^2 + (1/m)||U - T||^2 + (2 lam/m)||U||_1, rows as codes."""
    x = np.atleast_2d(x)
    u = np.atleast_2d(u)
    target = np.atleast_2d(target)
    p, m = d.shape
    rec = x - u @ d.T
    diff = u - target
    return (float(np.sum(rec * rec)) / p + float(np.sum(diff * diff)) / m
            + 2.0 * lam / m * float(np.sum(np.abs(u))))
