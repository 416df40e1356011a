"""Experiment runners behind the CLI: PCA comparison, missing pixels, digits, noise.

Every runner returns a list of row dicts; :func:`write_csv` writes them with
the resolved configuration echoed as leading ``#`` comment lines. Grid points
are independent and can run in a process pool; results always come back in
task order.
"""

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines
from .classifier import REG_GRID, svm_fit_select, svm_predict
from .data import (center_rows, corrupt_missing, downsample, load_idx, load_matrix, load_pgm,
                   patches_from_images, remap_pixels, add_gaussian_noise)
from .linalg import make_rng
from .metrics import (accuracy, rms_error, sparsity_area, sparsity_area_raw, sparsity_curve,
                      sparsity_value)
from .model import Hyperparams, decode, encode, fit, relearn_codes

log = logging.getLogger(__name__)


def lambda_grid(lo, hi, n):
    """``n`` equispaced values from ``lo`` to ``hi``, both ends included."""
    if n < 1:
        raise ValueError(f"grid size must be >= 1, got {n}")
    if n == 1:
        return [float(lo)]
    return [float(v) for v in np.linspace(lo, hi, n)]


def parse_grid(spec):
    """Parse ``lo:hi:n`` into a lambda grid."""
    try:
        lo, hi, n = spec.split(":")
        return lambda_grid(float(lo), float(hi), int(n))
    except ValueError:
        raise ValueError(f"grid must look like lo:hi:n, got {spec!r}") from None


def task_seed(seed, index):
    return int(seed) ^ int(index)


def run_tasks(fn, tasks, threads=1):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def write_csv(path, rows, columns, config):
    """Write rows with the config as ``# key: value`` lines; byte-stable."""
    lines = [f"# {k}: {json.dumps(config[k], sort_keys=True)}" for k in sorted(config)]
    with open(path, "w", newline="") as f:
        for line in lines:
            f.write(line + "\n")
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n",
                                extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


# -- patch sources ---------------------------------------------------------

def load_images(source):
    """A PGM file or every ``*.pgm`` in a directory, sorted by name."""
    source = Path(source)
    paths = sorted(source.glob("*.pgm")) if source.is_dir() else [source]
    if not paths:
        raise FileNotFoundError(f"no .pgm images under {source}")
    return [load_pgm(p) for p in paths]


def load_patches(source, count, side=8, seed=0, center=True):
    """Patches from images (file or directory) or rows of a stored matrix."""
    source = Path(source)
    if source.is_dir() or source.suffix == ".pgm":
        x = patches_from_images(load_images(source), side, count, make_rng(seed)).x
    else:
        x = load_matrix(source)
        if count:
            x = x[:count]
    return center_rows(x) if center else x


# -- PCA comparison --------------------------------------------------------

@dataclass(frozen=True)
class _ScnnTask:
    x: np.ndarray
    hp: Hyperparams


def _fit_rms(task):
    model, _ = fit(task.x, task.hp)
    return rms_error(task.x, decode(model, encode(model, task.x, apply_threshold=False)))


def exp_pca(x, ks=(10, 30, 50), repeats=20, base=Hyperparams(), threads=1):
    """PCA versus SCNN(lam = 0) reconstruction RMS for each k."""
    rows = []
    for k in ks:
        pca = baselines.pca_fit(x, k)
        rows.append(dict(k=k, method="pca", rms_mean=rms_error(x, baselines.pca_reconstruct(pca, x)),
                         rms_std=0.0))
        tasks = [_ScnnTask(x, replace(base, lam=0.0, atoms=k, seed=task_seed(base.seed, r)))
                 for r in range(repeats)]
        errs = np.array(run_tasks(_fit_rms, tasks, threads))
        rows.append(dict(k=k, method="scnn", rms_mean=float(errs.mean()),
                         rms_std=float(errs.std())))
    return rows


PCA_COLUMNS = ["k", "method", "rms_mean", "rms_std"]


# -- missing pixels ----------------------------------------------------------

@dataclass
class MissingPixelsConfig:
    noise_levels: tuple = (0.1, 0.2, 0.3, 0.4, 0.5)
    lambdas: tuple = tuple(lambda_grid(0.01, 1.0, 40))
    sparsenet_lambdas: tuple = tuple(lambda_grid(0.01, 20.0, 40))
    pca_ks: tuple = (4, 8, 16, 24, 32, 40, 48, 56)
    atoms: int = 64
    methods: tuple = ("scnn", "sparsenet", "pca")
    apply_threshold: bool = True
    sparsenet_sigma: float = 0.316
    seed: int = 0
    hp: Hyperparams = field(default_factory=Hyperparams)


def _fit_model(task):
    return fit(task.x, task.hp)[0]


@dataclass(frozen=True)
class _SparsenetTask:
    x: np.ndarray
    m: int
    lam: float
    sigma: float
    seed: int


def _fit_sparsenet(task):
    return baselines.sparsenet_fit(task.x, task.m, task.lam, task.sigma, seed=task.seed)


def exp_missing(x_train, x_val, x_test, cfg, threads=1):
    """Select each method's parameter on corrupted validation patches, score on test."""
    rows = []
    corrupted = {}
    for i, noise in enumerate(cfg.noise_levels):
        xv, _ = corrupt_missing(x_val, noise, make_rng(task_seed(cfg.seed, 2 * i + 1)))
        xt, _ = corrupt_missing(x_test, noise, make_rng(task_seed(cfg.seed, 2 * i + 2)))
        corrupted[noise] = (xv, xt)

    def emit(method, noise, lam, k, codes, rec):
        curve = sparsity_curve(codes)
        rows.append(dict(method=method, noise=noise, best_lambda=lam, best_k=k,
                         test_rms=rms_error(x_test, rec), sparsity_area=sparsity_area(curve),
                         sparsity_area_raw=sparsity_area_raw(curve),
                         sparsity_at_0_1=sparsity_value(codes, 0.1)))

    if "scnn" in cfg.methods:
        tasks = [_ScnnTask(x_train, replace(cfg.hp, lam=lam, atoms=cfg.atoms, seed=cfg.seed))
                 for lam in cfg.lambdas]
        models = run_tasks(_fit_model, tasks, threads)
        for noise, (xv, xt) in corrupted.items():
            errs = [rms_error(x_val, decode(m, encode(m, xv, cfg.apply_threshold)))
                    for m in models]
            best = int(np.argmin(errs))
            codes = encode(models[best], xt, cfg.apply_threshold)
            emit("scnn", noise, cfg.lambdas[best], cfg.atoms, codes, decode(models[best], codes))

    if "sparsenet" in cfg.methods:
        tasks = [_SparsenetTask(x_train, cfg.atoms, lam, cfg.sparsenet_sigma, cfg.seed)
                 for lam in cfg.sparsenet_lambdas]
        models = run_tasks(_fit_sparsenet, tasks, threads)
        for noise, (xv, xt) in corrupted.items():
            errs = [rms_error(x_val, baselines.sparsenet_infer(m, xv) @ m.d.T) for m in models]
            best = int(np.argmin(errs))
            codes = baselines.sparsenet_infer(models[best], xt)
            emit("sparsenet", noise, cfg.sparsenet_lambdas[best], cfg.atoms, codes,
                 codes @ models[best].d.T)

    if "pca" in cfg.methods:
        fits = [baselines.pca_fit(x_train, k) for k in cfg.pca_ks]
        for noise, (xv, xt) in corrupted.items():
            errs = [rms_error(x_val, baselines.pca_reconstruct(m, xv)) for m in fits]
            best = int(np.argmin(errs))
            m = fits[best]
            codes = (xt - m.mean) @ m.components
            emit("pca", noise, "", cfg.pca_ks[best], codes, baselines.pca_reconstruct(m, xt))
    return rows


MISSING_COLUMNS = ["method", "noise", "best_lambda", "best_k", "test_rms", "sparsity_area",
                   "sparsity_area_raw", "sparsity_at_0_1"]


# -- digits -------------------------------------------------------------------

MODES = {
    # train, val, test sizes; atoms grid; lambda grid
    "small": dict(sizes=(500, 500, 500), atoms=(25, 50, 75, 100, 125, 150),
                  lambdas=tuple(lambda_grid(0.01, 1.0, 40)), side=14),
    "full": dict(sizes=(50000, 10000, 10000), atoms=(400, 800, 1200, 1600),
                 lambdas=tuple(lambda_grid(0.02, 0.2, 10)), side=28),
}


@dataclass
class DigitSplits:
    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray


def load_digit_splits(images, labels, sizes, side=14, test_images=None, test_labels=None):
    """Sequential train/val/test split, remapped to [-1, 1], block-averaged to ``side``."""
    ds = load_idx(images, labels)
    n_tr, n_va, n_te = sizes
    rows, cols = ds.shape

    def prep(x):
        if side != rows:
            x = downsample(x, (rows, cols), rows // side)
        return remap_pixels(x, in_lo=0.0, in_hi=255.0)

    if test_images is not None:
        test = load_idx(test_images, test_labels)
        need = n_tr + n_va
        x_te, y_te = test.x[:n_te], test.labels[:n_te]
    else:
        need = n_tr + n_va + n_te
        x_te, y_te = ds.x[n_tr + n_va:need], ds.labels[n_tr + n_va:need]
    if ds.x.shape[0] < need or len(y_te) < n_te:
        raise ValueError(f"not enough digits for split {sizes}: file holds {ds.x.shape[0]}")
    return DigitSplits(prep(ds.x[:n_tr]), ds.labels[:n_tr],
                       prep(ds.x[n_tr:n_tr + n_va]), ds.labels[n_tr:n_tr + n_va],
                       prep(x_te), y_te)


@dataclass(frozen=True)
class _DigitTask:
    splits: DigitSplits
    hp: Hyperparams
    apply_threshold: bool
    regs: tuple
    epochs: int


def _digit_point(task):
    s = task.splits
    t0 = time.monotonic()
    model, report = fit(s.x_train, task.hp)
    learn = time.monotonic() - t0
    t0 = time.monotonic()
    codes = [encode(model, x, task.apply_threshold) for x in (s.x_train, s.x_val, s.x_test)]
    clf, val_acc = svm_fit_select(codes[0], s.y_train, codes[1], s.y_val, 10, task.regs,
                                  task.epochs, task.hp.seed)
    validate = time.monotonic() - t0
    test_pred = svm_predict(clf, codes[2])
    curve = sparsity_curve(codes[2])
    test_acc = accuracy(test_pred, s.y_test)
    return dict(atoms=task.hp.atoms, **{"lambda": task.hp.lam}, val_accuracy=val_acc,
                test_accuracy=test_acc, error_rate=1.0 - test_acc, svm_reg=clf.reg,
                sparsity_area=sparsity_area(curve), sparsity_area_raw=sparsity_area_raw(curve),
                zero_fraction=float(np.mean(codes[2] == 0.0)),
                outer_steps=report.outer_steps_run, learn_seconds=round(learn, 3),
                validation_seconds=round(validate, 3))


def exp_digits(splits, atoms_list, lambdas, base=Hyperparams(), apply_threshold=True,
               regs=REG_GRID, epochs=50, threads=1):
    """One row per (atoms, lambda); ``selected`` marks the best validation accuracy."""
    tasks = [_DigitTask(splits, replace(base, atoms=a, lam=lam), apply_threshold, regs, epochs)
             for a in atoms_list for lam in lambdas]
    rows = run_tasks(_digit_point, tasks, threads)
    for a in atoms_list:
        group = [r for r in rows if r["atoms"] == a]
        best = max(group, key=lambda r: r["val_accuracy"])  # first maximum wins ties
        for r in group:
            r["selected"] = int(r is best)
    return rows


DIGIT_COLUMNS = ["atoms", "lambda", "selected", "val_accuracy", "test_accuracy", "error_rate",
                 "svm_reg", "sparsity_area", "sparsity_area_raw", "zero_fraction", "outer_steps"]
TIMING_COLUMNS = ["learn_seconds", "validation_seconds"]


# -- noise robustness -------------------------------------------------------------

def exp_noise(splits, sigmas, atoms, lambdas, base=Hyperparams(), regs=REG_GRID, epochs=50,
              threads=1):
    """Error rates for raw pixels, encoder codes and re-learned codes under Gaussian noise."""
    rows = []
    for i, sigma in enumerate(sigmas):
        rng = make_rng(task_seed(base.seed, 1000 + i))
        noisy = DigitSplits(add_gaussian_noise(splits.x_train, sigma, rng), splits.y_train,
                            add_gaussian_noise(splits.x_val, sigma, rng), splits.y_val,
                            add_gaussian_noise(splits.x_test, sigma, rng), splits.y_test)
        clf, _ = svm_fit_select(noisy.x_train, noisy.y_train, noisy.x_val, noisy.y_val, 10,
                                regs, epochs, base.seed)
        raw_err = 1.0 - accuracy(svm_predict(clf, noisy.x_test), noisy.y_test)
        rows.append(dict(method="raw", sigma=sigma, error_rate=raw_err))

        tasks = [_ScnnTask(noisy.x_train, replace(base, atoms=atoms, lam=lam)) for lam in lambdas]
        models = run_tasks(_fit_model, tasks, threads)
        best = None
        for m in models:
            codes = [encode(m, x) for x in (noisy.x_train, noisy.x_val, noisy.x_test)]
            clf, val = svm_fit_select(codes[0], noisy.y_train, codes[1], noisy.y_val, 10,
                                      regs, epochs, base.seed)
            if best is None or val > best[0]:
                best = (val, m, clf, codes)
        _, model, clf, codes = best
        rows.append(dict(method="scnn-encode", sigma=sigma, best_lambda=model.lam,
                         error_rate=1.0 - accuracy(svm_predict(clf, codes[2]), noisy.y_test)))

        relearned = [relearn_codes(model, x, base.inner_u_max, base.inner_rtol,
                                   base.threshold_mode)
                     for x in (noisy.x_train, noisy.x_val, noisy.x_test)]
        clf, _ = svm_fit_select(relearned[0], noisy.y_train, relearned[1], noisy.y_val, 10,
                                regs, epochs, base.seed)
        rows.append(dict(method="scnn-relearn", sigma=sigma, best_lambda=model.lam,
                         error_rate=1.0 - accuracy(svm_predict(clf, relearned[2]),
                                                   noisy.y_test)))
    return rows


NOISE_COLUMNS = ["method", "sigma", "best_lambda", "error_rate"]


def hp_config(hp):
    return {f"hp.{k}": v for k, v in asdict(hp).items()}
