import numpy as np
import pytest

from scnn.baselines import (code_objective, lasso_oracle, pca_fit, pca_reconstruct,
                            sparsenet_energy, sparsenet_fit, sparsenet_infer,
                            sparsity_penalty, sparsity_penalty_grad)
from scnn.metrics import rms_error
from scnn.model import project_columns_unit_ball, soft_threshold

from oracles import central_difference, relative_error


def test_pca_matches_truncated_svd(rng):
    x = rng.standard_normal((20, 5))
    model = pca_fit(x, 3)
    xc = x - x.mean(axis=0)
    u, s, vt = np.linalg.svd(xc, full_matrices=False)
    svd_rec = x.mean(axis=0) + (u[:, :3] * s[:3]) @ vt[:3]
    assert abs(rms_error(x, pca_reconstruct(model, x)) - rms_error(x, svd_rec)) < 1e-10


def test_pca_rank_one_and_full_rank(rng):
    t = rng.standard_normal((30, 1))
    line = t @ np.array([[1.0, -2.0, 0.5]])
    assert rms_error(line, pca_reconstruct(pca_fit(line, 1), line)) < 1e-12
    x = rng.standard_normal((30, 4))
    assert rms_error(x, pca_reconstruct(pca_fit(x, 4), x)) < 1e-12


def test_pca_properties(rng):
    x = rng.standard_normal((50, 6))
    model = pca_fit(x, 3)
    v = model.components
    assert np.allclose(v.T @ v, np.eye(3), atol=1e-12)
    peak = np.argmax(np.abs(v), axis=0)
    assert np.all(v[peak, np.arange(3)] > 0)
    once = pca_reconstruct(model, x)
    assert np.allclose(pca_reconstruct(model, once), once, atol=1e-12)
    mean_rows = np.tile(model.mean, (4, 1))
    assert np.allclose(pca_reconstruct(model, mean_rows), mean_rows, atol=1e-14)


def test_pca_errors(rng):
    with pytest.raises(ValueError):
        pca_fit(rng.standard_normal((10, 3)), 4)
    with pytest.raises(ValueError):
        pca_reconstruct(pca_fit(rng.standard_normal((10, 3)), 2), np.ones((2, 4)))


def test_sparsity_penalty_gradient(rng):
    u = rng.standard_normal((3, 4))
    num = central_difference(lambda a: sparsity_penalty(a, 0.7, 0.316), u)
    assert relative_error(sparsity_penalty_grad(u, 0.7, 0.316), num) < 1e-6


def test_sparsenet_descends_at_zero_lambda(rng):
    x = rng.standard_normal((40, 6))
    trace = []
    sparsenet_fit(x, 4, 0.0, outer=10, trace=trace, seed=2)
    assert trace[-1] <= trace[0]
    assert np.all(np.diff(trace) <= 1e-9 * abs(trace[0]))


def test_sparsenet_large_lambda_shrinks_codes(rng):
    x = rng.standard_normal((40, 6))
    small = sparsenet_fit(x, 4, 0.0, outer=5, seed=1)
    large = sparsenet_fit(x, 4, 50.0, outer=5, seed=1)
    assert np.mean(np.abs(sparsenet_infer(large, x))) < np.mean(np.abs(sparsenet_infer(small, x)))


def test_sparsenet_infer_exact_atom(rng):
    from scnn.baselines import SparsenetModel
    d = project_columns_unit_ball(rng.standard_normal((8, 4)))
    d /= np.linalg.norm(d, axis=0)
    model = SparsenetModel(d=d, sigma=0.316, lam=0.0)
    x = d[:, [1]].T
    u = sparsenet_infer(model, x, max_iter=20000, rtol=0.0)
    assert np.sum((x - u @ d.T) ** 2) < 1e-6
    assert np.allclose(u, [[0.0, 1.0, 0.0, 0.0]], atol=1e-3)


def test_sparsenet_infer_huge_lambda_gives_zero(rng):
    from scnn.baselines import SparsenetModel
    d = project_columns_unit_ball(rng.standard_normal((8, 4)))
    u = sparsenet_infer(SparsenetModel(d, 0.316, 1e12), rng.standard_normal((3, 8)))
    assert np.max(np.abs(u)) < 1e-6


def test_lasso_oracle_ridge_case(rng):
    d = rng.standard_normal((6, 3))
    x = rng.standard_normal(6)
    t = rng.standard_normal(3)
    p, m = d.shape
    expected = np.linalg.solve(d.T @ d / p + np.eye(m) / m, d.T @ x / p + t / m)
    assert np.allclose(lasso_oracle(x, d, t, 0.0), expected, atol=1e-8)


def test_lasso_oracle_decoupled_case(rng):
    t = rng.standard_normal(4)
    got = lasso_oracle(rng.standard_normal(5), np.zeros((5, 4)), t, 0.4)
    assert np.allclose(got, soft_threshold(t, 0.4), atol=1e-15)


def test_lasso_oracle_is_a_minimum(rng):
    d = rng.standard_normal((5, 3))
    x = rng.standard_normal(5)
    t = rng.standard_normal(3)
    u = lasso_oracle(x, d, t, 0.3)
    best = code_objective(x, u, d, t, 0.3)
    for _ in range(200):
        assert code_objective(x, u + 1e-3 * rng.standard_normal(3), d, t, 0.3) >= best


def test_lasso_oracle_size_limit():
    with pytest.raises(ValueError):
        lasso_oracle(np.ones(3), np.ones((3, 11)), np.ones(11), 0.1)


def test_sparsenet_energy_zero_codes(rng):
    x = rng.standard_normal((3, 4))
    assert sparsenet_energy(x, np.zeros((3, 2)), np.ones((4, 2)), 5.0, 0.3) == \
        pytest.approx(0.5 * np.sum(x * x))
