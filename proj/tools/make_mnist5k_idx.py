#!/usr/bin/env python3
"""Convert the 5,000-image MNIST subset bundled with mlxtend into IDX files.

Writes a stratified 4,000 / 1,000 train/test split (400 / 100 per class),
shuffled with a fixed seed, as big-endian IDX (magic 0x803 / 0x801).

    pip download mlxtend --no-deps -d /tmp/mlx
    python3 tools/make_mnist5k_idx.py /tmp/mlx/mlxtend-*.whl data/mnist5k
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def write_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    wheel, out = Path(sys.argv[1]), Path(sys.argv[2])
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read(MEMBER))
    table = np.genfromtxt(io.BytesIO(raw), delimiter=",")
    x = table[:, :-1].reshape(-1, 28, 28)
    y = table[:, -1].astype(int)

    rng = np.random.default_rng(20240101)
    train_idx, test_idx = [], []
    for c in range(10):
        idx = rng.permutation(np.flatnonzero(y == c))
        test_idx.extend(idx[:100])
        train_idx.extend(idx[100:])
    train_idx = rng.permutation(train_idx)
    test_idx = rng.permutation(test_idx)

    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", x[train_idx])
    write_labels(out / "train-labels-idx1-ubyte", y[train_idx])
    write_images(out / "t10k-images-idx3-ubyte", x[test_idx])
    write_labels(out / "t10k-labels-idx1-ubyte", y[test_idx])


if __name__ == "__main__":
    main()
