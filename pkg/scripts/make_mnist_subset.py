"""Convert a CSV of MNIST digits (784 pixel columns, then the label) to gzip IDX files.

Usage: python3 scripts/make_mnist_subset.py mnist_5k.csv.gz data/mnist5k

The bundled subset was built from ``mlxtend/data/data/mnist_5k.csv.gz`` in
the mlxtend 0.24.0 wheel (first 5000 MNIST training digits).
"""

import gzip
import sys
from pathlib import Path

import numpy as np

from prfsnn.cli.data import write_idx


def main(src, out):
    opener = gzip.open if str(src).endswith(".gz") else open
    with opener(src, "rt") as fh:
        table = np.loadtxt(fh, delimiter=",", dtype=np.int64)
    images = table[:, :784].reshape(-1, 28, 28)
    labels = table[:, 784]
    if images.min() < 0 or images.max() > 255 or labels.min() < 0 or labels.max() > 9:
        raise SystemExit("unexpected value range in CSV")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "train-images-idx3-ubyte.gz", images)
    write_idx(out / "train-labels-idx1-ubyte.gz", labels)
    print(f"wrote {len(labels)} digits to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
