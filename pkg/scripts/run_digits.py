"""Digit classification and noise robustness on the bundled MNIST sample.

    python scripts/run_digits.py [--outdir results] [--skip-noise]

Runs ``scnn exp-digits`` in small mode (500/500/500 digits at 14x14) and
then ``scnn exp-noise``. For the 50k-digit setting pass full IDX files with
``--images/--labels/--test-images/--test-labels`` plus ``--mode full --allow-long``.
"""

import argparse
import sys
from pathlib import Path

from scnn.cli import main

ROOT = Path(__file__).resolve().parent.parent
MNIST = ROOT / "data" / "mnist"


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default=str(ROOT / "results"))
    ap.add_argument("--images", default=str(MNIST / "mnist5k-images-idx3-ubyte.gz"))
    ap.add_argument("--labels", default=str(MNIST / "mnist5k-labels-idx1-ubyte.gz"))
    ap.add_argument("--test-images")
    ap.add_argument("--test-labels")
    ap.add_argument("--skip-noise", action="store_true")
    args, rest = ap.parse_known_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    common = ["--input", args.images, "--labels", args.labels]
    if args.test_images:
        common += ["--test", args.test_images, "--test-labels", args.test_labels]
    code = main(["exp-digits", *common, "--out", str(out / "digits.csv"), "--timings", *rest])
    if code or args.skip_noise:
        return code
    return main(["exp-noise", *common, "--out", str(out / "noise.csv"), *rest])


if __name__ == "__main__":
    sys.exit(run())
