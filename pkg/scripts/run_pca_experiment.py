"""PCA versus SCNN(lambda = 0) on 8x8 patches from the bundled training images.

    python scripts/run_pca_experiment.py [--out results/pca.csv] [--repeats 20]

Extra flags are passed through to ``scnn exp-pca``.
"""

import argparse
import sys
from pathlib import Path

from scnn.cli import main

ROOT = Path(__file__).resolve().parent.parent


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "results" / "pca.csv"))
    ap.add_argument("--repeats", type=int, default=20)
    args, rest = ap.parse_known_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    return main(["exp-pca", "--input", str(ROOT / "data" / "images" / "train"),
                 "--out", args.out, "--atoms-list", "10,30,50", "--repeats", str(args.repeats),
                 *rest])


if __name__ == "__main__":
    sys.exit(run())
