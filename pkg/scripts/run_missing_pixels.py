"""Missing-pixels study: SCNN, Sparsenet and PCA on corrupted test patches.

    python scripts/run_missing_pixels.py [--out results/missing.csv] [--patches 2000]

Training and validation patches come from data/images/train, test patches
from the disjoint data/images/test. Extra flags go to ``scnn exp-missing``.
"""

import argparse
import sys
from pathlib import Path

from scnn.cli import main

ROOT = Path(__file__).resolve().parent.parent


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "results" / "missing.csv"))
    ap.add_argument("--patches", type=int, default=2000)
    args, rest = ap.parse_known_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    images = ROOT / "data" / "images"
    return main(["exp-missing", "--input", str(images / "train"), "--test", str(images / "test"),
                 "--out", args.out, "--patches", str(args.patches), *rest])


if __name__ == "__main__":
    sys.exit(run())
