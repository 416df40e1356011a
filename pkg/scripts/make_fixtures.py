"""Rebuild the bundled data under data/.

* data/images/{train,test}/*.pgm: 256x256 grayscale center crops of the
  photographs shipped with scikit-image.
* data/mnist/mnist5k-*-idx?-ubyte.gz: the 5000-digit MNIST sample shipped
  with mlxtend (BSD-3), shuffled with a fixed seed and written as IDX.

Usage:
    python scripts/make_fixtures.py --mnist-csv path/to/mnist_5k.csv.gz
"""

import argparse
import zipfile
from pathlib import Path

import numpy as np

from scnn.data import save_pgm, write_idx

ROOT = Path(__file__).resolve().parent.parent
TRAIN_IMAGES = ["camera", "astronaut", "coffee", "grass", "brick", "coins"]
TEST_IMAGES = ["moon", "chelsea", "rocket", "gravel"]
CROP = 256


def _gray(img):
    if img.ndim == 3:
        img = img[..., :3] @ np.array([0.2125, 0.7154, 0.0721])
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def _crop(img, size):
    h, w = img.shape
    top, left = (h - size) // 2, (w - size) // 2
    return img[top:top + size, left:left + size]


def build_images(out):
    import skimage.data

    for split, names in (("train", TRAIN_IMAGES), ("test", TEST_IMAGES)):
        folder = out / split
        folder.mkdir(parents=True, exist_ok=True)
        for name in names:
            img = _crop(_gray(getattr(skimage.data, name)()), CROP)
            save_pgm(folder / f"{name}.pgm", img)
            print(f"wrote {folder / name}.pgm {img.shape}")


def _read_mnist_csv(path):
    path = Path(path)
    if path.suffix == ".whl":
        with zipfile.ZipFile(path) as z:
            member = next(n for n in z.namelist() if n.endswith("mnist_5k.csv.gz"))
            tmp = ROOT / "build" / "mnist_5k.csv.gz"
            tmp.parent.mkdir(exist_ok=True)
            tmp.write_bytes(z.read(member))
            path = tmp
    table = np.loadtxt(path, delimiter=",")
    return table[:, :-1].astype(np.uint8), table[:, -1].astype(np.uint8)


def build_mnist(csv, out, seed):
    x, y = _read_mnist_csv(csv)
    order = np.random.default_rng(seed).permutation(len(y))
    x, y = x[order], y[order]
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "mnist5k-images-idx3-ubyte.gz", out / "mnist5k-labels-idx1-ubyte.gz",
              x.reshape(-1, 28, 28), y)
    print(f"wrote {len(y)} digits to {out}")


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--mnist-csv", help="mlxtend mnist_5k.csv.gz, or the mlxtend wheel")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    build_images(ROOT / "data" / "images")
    if args.mnist_csv:
        build_mnist(args.mnist_csv, ROOT / "data" / "mnist", args.seed)


if __name__ == "__main__":
    main()
