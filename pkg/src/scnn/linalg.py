"""Dense matrix helpers shared by every other module.

Matrices are plain 2-D float64 numpy arrays with signals stored as rows.
"""

import math

import numpy as np


def as_matrix(a, name="matrix"):
    """Return `a` as a 2-D float64 array, rejecting NaN/Inf."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def make_rng(seed):
    """PCG64 generator; identical across platforms for the same seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def frobenius_norm(a):
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


def _rayleigh(v, w):
    return math.fsum(v * w) / math.fsum(v * v)


def _power_iterate(a, v, tol, max_iter):
    # v is scaled to unit max-norm so an all-ones start stays exact.
    lam = 0.0
    for it in range(max_iter):
        w = a @ v
        peak = np.max(np.abs(w))
        if peak == 0.0:
            return 0.0
        p = int(np.argmax(np.abs(v)))
        ratio = w[p] / v[p]
        if np.array_equal(w, ratio * v):
            return float(ratio)
        new = _rayleigh(v, w)
        if it > 0 and abs(new - lam) <= tol * abs(new):
            return new
        lam = new
        v = w / peak
    return lam


def spectral_norm(a, tol=1e-12, max_iter=1000):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Starts from the all-ones vector. If that start is orthogonal to the
    leading eigenvector the iteration stalls on a smaller eigenvalue, so a
    second deterministic start (alternating-sign ramp) is also run and the
    larger estimate wins; Rayleigh quotients never exceed the top eigenvalue.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"spectral_norm needs a square matrix, got {a.shape}")
    n = a.shape[0]
    lam0 = _power_iterate(a, np.ones(n), tol, max_iter)
    alt = np.where(np.arange(n) % 2 == 0, 1.0, -1.0) * (1.0 + np.arange(n) / n)
    lam1 = _power_iterate(a, alt / np.max(np.abs(alt)), tol, max_iter)
    return max(lam0, lam1)


def uniform_init(rows, cols, rng):
    """Entries drawn uniformly from [-1, 1]."""
    if rows < 1 or cols < 1:
        raise ValueError(f"dimensions must be positive, got {rows}x{cols}")
    return rng.uniform(-1.0, 1.0, size=(rows, cols))
