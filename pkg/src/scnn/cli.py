"""Command-line entry point.

    scnn train --input X.npy --atoms 10 --lambda 0.1 --out model.scnn
    scnn encode --model model.scnn --input X.npy --out codes.csv
    scnn reconstruct --model model.scnn --input X.npy --out rec.npy
    scnn exp-pca --input data/images/train --out pca.csv
    scnn exp-missing --input data/images/train --test data/images/test --out missing.csv
    scnn exp-digits --input IMAGES.idx3-ubyte --labels LABELS.idx1-ubyte --out digits.csv
    scnn exp-noise --input IMAGES.idx3-ubyte --labels LABELS.idx1-ubyte --out noise.csv

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .data import DataFormatError, center_rows, load_matrix, load_model, remap_pixels, save_matrix, save_model
from .experiments import write_csv
from .model import Hyperparams, NumericalError, decode, encode, fit

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

log = logging.getLogger("scnn")


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _grid(text):
    try:
        return tuple(ex.parse_grid(text))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_hp(p, atoms=True):
    if atoms:
        p.add_argument("--atoms", type=int, default=10, help="hidden units (dictionary atoms)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rtol", type=float, default=1e-4, help="outer stop tolerance")
    p.add_argument("--tmax", type=int, default=50, help="maximum outer iterations")
    p.add_argument("--inner-u-max", type=int, default=1000)
    p.add_argument("--inner-d-max", type=int, default=500)
    p.add_argument("--inner-c-max", type=int, default=500)
    p.add_argument("--inner-rtol", type=float, default=1e-6)
    p.add_argument("--threshold-mode", choices=("scaled", "literal"), default="scaled")
    p.add_argument("--rate-mode", choices=("lipschitz", "frobenius"), default="lipschitz")
    p.add_argument("--eta-u-norm", choices=("spectral", "frobenius"), default="spectral")
    p.add_argument("--threads", type=int, default=1, help="worker processes for grid points")


def _hp(args, lam=0.0, atoms=None):
    return Hyperparams(lam=lam, atoms=atoms or getattr(args, "atoms", 10), t_max=args.tmax,
                       inner_u_max=args.inner_u_max, inner_d_max=args.inner_d_max,
                       inner_c_max=args.inner_c_max, rtol=args.rtol,
                       inner_rtol=args.inner_rtol, seed=args.seed,
                       threshold_mode=args.threshold_mode, rate_mode=args.rate_mode,
                       eta_u_norm=args.eta_u_norm)


def _config(args, **extra):
    cfg = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items()
           if k not in ("func", "verbose")}
    cfg.update(extra)
    return cfg


def _preprocess(x, how):
    if how == "center":
        return center_rows(x)
    if how == "remap":
        return remap_pixels(x)
    return x


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): "
                         + ", ".join("--" + n.replace("_", "-") for n in missing))


# -- commands ------------------------------------------------------------------------

def cmd_train(args):
    _require(args, "input", "out")
    x = _preprocess(load_matrix(args.input), args.preprocess)
    hp = _hp(args, lam=args.lam)
    model, report = fit(x, hp)
    save_model(args.out, model)
    report_path = args.report or str(args.out) + ".csv"
    rows = [dict(step=r.step, e1=r.e1, e2=r.e2, total=r.total,
                 feedforward_error=r.feedforward_error) for r in report.records]
    write_csv(report_path, rows, ["step", "e1", "e2", "total", "feedforward_error"],
              _config(args, stopped_by=report.stopped_by, rows=x.shape[0], cols=x.shape[1]))
    log.info("trained %d outer steps (%s); model -> %s, report -> %s",
             report.outer_steps_run, report.stopped_by, args.out, report_path)


def _load_for_model(args):
    model = load_model(args.model)
    x = _preprocess(load_matrix(args.input), args.preprocess)
    if x.shape[1] != model.signal_dim:
        raise DataFormatError(f"data has {x.shape[1]} columns but the model expects "
                              f"{model.signal_dim}")
    return model, x


def cmd_encode(args):
    _require(args, "model", "input", "out")
    model, x = _load_for_model(args)
    save_matrix(args.out, encode(model, x, apply_threshold=not args.no_threshold))


def cmd_reconstruct(args):
    _require(args, "model", "input", "out")
    model, x = _load_for_model(args)
    save_matrix(args.out, decode(model, encode(model, x, apply_threshold=not args.no_threshold)))


def cmd_exp_pca(args):
    _require(args, "input", "out")
    x = ex.load_patches(args.input, args.patches, args.side, args.seed, center=not args.no_center)
    rows = ex.exp_pca(x, args.atoms_list, args.repeats, _hp(args), args.threads)
    write_csv(args.out, rows, ex.PCA_COLUMNS, _config(args))


def cmd_exp_missing(args):
    _require(args, "input", "test", "out")
    center = not args.no_center
    if args.val is None:
        both = ex.load_patches(args.input, 2 * args.patches, args.side, args.seed, center)
        x_train, x_val = both[:args.patches], both[args.patches:]
    else:
        x_train = ex.load_patches(args.input, args.patches, args.side, args.seed, center)
        x_val = ex.load_patches(args.val, args.patches, args.side, args.seed + 1, center)
    x_test = ex.load_patches(args.test, args.patches, args.side, args.seed + 2, center)
    cfg = ex.MissingPixelsConfig(noise_levels=args.noise_levels, lambdas=args.lambda_grid,
                                 sparsenet_lambdas=args.sparsenet_lambda_grid,
                                 atoms=args.atoms, methods=args.methods,
                                 apply_threshold=not args.no_threshold,
                                 sparsenet_sigma=args.sigma, seed=args.seed, hp=_hp(args))
    rows = ex.exp_missing(x_train, x_val, x_test, cfg, args.threads)
    write_csv(args.out, rows, ex.MISSING_COLUMNS, _config(args))


def _mode_settings(args):
    if args.mode == "full" and not args.allow_long:
        raise UsageError("--mode full trains on 50000 digits and can take many hours; "
                         "pass --allow-long to run it")
    mode = ex.MODES[args.mode]
    sizes = tuple(args.sizes) if args.sizes else mode["sizes"]
    if len(sizes) != 3:
        raise UsageError("--sizes needs three integers: train,val,test")
    side = args.side or mode["side"]
    lambdas = args.lambda_grid or mode["lambdas"]
    splits = ex.load_digit_splits(args.input, args.labels, sizes, side,
                                  args.test, args.test_labels)
    return mode, sizes, side, lambdas, splits


def cmd_exp_digits(args):
    _require(args, "input", "labels", "out")
    mode, sizes, side, lambdas, splits = _mode_settings(args)
    atoms = args.atoms_list or mode["atoms"]
    rows = ex.exp_digits(splits, atoms, lambdas, _hp(args), not args.no_threshold,
                         epochs=args.epochs, threads=args.threads)
    cols = ex.DIGIT_COLUMNS + (ex.TIMING_COLUMNS if args.timings else [])
    write_csv(args.out, rows, cols, _config(args, resolved_sizes=list(sizes), resolved_side=side,
                                           resolved_atoms=list(atoms),
                                           resolved_lambdas=list(lambdas)))


def cmd_exp_noise(args):
    _require(args, "input", "labels", "out")
    mode, sizes, side, lambdas, splits = _mode_settings(args)
    atoms = args.atoms or (400 if args.mode == "full" else 100)
    rows = ex.exp_noise(splits, args.noise_levels, atoms, lambdas, _hp(args, atoms=atoms),
                        epochs=args.epochs, threads=args.threads)
    write_csv(args.out, rows, ex.NOISE_COLUMNS,
              _config(args, resolved_sizes=list(sizes), resolved_side=side,
                      resolved_atoms=atoms, resolved_lambdas=list(lambdas)))


# -- parser ------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="scnn", description="Linear sparse coding network tools.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a data matrix")
    p.add_argument("--input", help="data matrix (.npy, .csv or IDX images)")
    p.add_argument("--out", help="model file to write")
    p.add_argument("--report", help="per-step energy CSV (default: <out>.csv)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="sparsity weight")
    p.add_argument("--preprocess", choices=("none", "center", "remap"), default="none")
    _add_hp(p)
    p.set_defaults(func=cmd_train)

    for name, func, what in (("encode", cmd_encode, "codes"),
                             ("reconstruct", cmd_reconstruct, "reconstructions")):
        p = sub.add_parser(name, help=f"write {what} for a data matrix")
        p.add_argument("--model")
        p.add_argument("--input")
        p.add_argument("--out", help=".csv or .npy")
        p.add_argument("--no-threshold", action="store_true",
                       help="skip soft-thresholding of the linear codes")
        p.add_argument("--preprocess", choices=("none", "center", "remap"), default="none")
        p.set_defaults(func=func)

    p = sub.add_parser("exp-pca", help="PCA versus SCNN(lambda=0) reconstruction")
    p.add_argument("--input", help="PGM image, directory of PGMs, or patch matrix")
    p.add_argument("--out")
    p.add_argument("--atoms-list", type=_int_list, default=(10, 30, 50))
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--patches", type=int, default=2000)
    p.add_argument("--side", type=int, default=8)
    p.add_argument("--no-center", action="store_true")
    _add_hp(p, atoms=False)
    p.set_defaults(func=cmd_exp_pca)

    p = sub.add_parser("exp-missing", help="missing-pixels reconstruction study")
    p.add_argument("--input", help="training images (PGM file/directory) or patch matrix")
    p.add_argument("--val", help="validation source (default: more patches from --input)")
    p.add_argument("--test", help="test images or patch matrix")
    p.add_argument("--out")
    p.add_argument("--patches", type=int, default=2000, help="patches per split")
    p.add_argument("--side", type=int, default=8)
    p.add_argument("--noise-levels", type=_float_list, default=(0.1, 0.2, 0.3, 0.4, 0.5))
    p.add_argument("--lambda-grid", type=_grid, default=tuple(ex.lambda_grid(0.01, 1.0, 40)))
    p.add_argument("--sparsenet-lambda-grid", type=_grid,
                   default=tuple(ex.lambda_grid(0.01, 20.0, 40)))
    p.add_argument("--methods", type=lambda s: tuple(s.split(",")),
                   default=("scnn", "sparsenet", "pca"))
    p.add_argument("--sigma", type=float, default=0.316, help="Sparsenet scaling constant")
    p.add_argument("--no-threshold", action="store_true")
    p.add_argument("--no-center", action="store_true")
    _add_hp(p)
    p.set_defaults(func=cmd_exp_missing, atoms=64)

    for name, func in (("exp-digits", cmd_exp_digits), ("exp-noise", cmd_exp_noise)):
        p = sub.add_parser(name, help="MNIST classification study" if name == "exp-digits"
                           else "MNIST noise-robustness study")
        p.add_argument("--input", help="IDX image file (may be .gz)")
        p.add_argument("--labels", help="IDX label file")
        p.add_argument("--test", help="separate IDX test images (optional)")
        p.add_argument("--test-labels")
        p.add_argument("--out")
        p.add_argument("--mode", choices=("small", "full"), default="small")
        p.add_argument("--allow-long", action="store_true")
        p.add_argument("--sizes", type=_int_list, help="train,val,test sizes")
        p.add_argument("--side", type=int, help="digit side after block averaging")
        p.add_argument("--lambda-grid", type=_grid)
        p.add_argument("--epochs", type=int, default=50, help="SVM epochs")
        p.add_argument("--no-threshold", action="store_true")
        if name == "exp-digits":
            p.add_argument("--atoms-list", type=_int_list)
            p.add_argument("--timings", action="store_true",
                           help="add wall-clock columns (makes output machine-dependent)")
            _add_hp(p, atoms=False)
        else:
            p.add_argument("--noise-levels", type=_float_list, default=(0.02, 0.04, 0.06, 0.08))
            _add_hp(p)
            p.set_defaults(atoms=None)
        p.set_defaults(func=func)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"scnn: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as e:
        print(f"scnn: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, FileNotFoundError, ValueError) as e:
        print(f"scnn: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
