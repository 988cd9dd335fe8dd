"""Rebuild data/mnist10k-*.gz from the `mnist` npm package (10,000 MNIST digits).

    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python tools/build_mnist_subset.py package/src/digits data/

Pixels in the package are stored as v/255 rounded to three decimals, which
is fine enough to recover the original uint8 values exactly.
"""
import gzip
import json
import struct
import sys
from pathlib import Path

import numpy as np


def main(digits_dir, out_dir):
    images, labels = [], []
    for digit in range(10):
        flat = np.asarray(json.loads(Path(digits_dir, f"{digit}.json").read_text())["data"])
        pixels = np.rint(flat * 255).astype(np.uint8).reshape(-1, 28, 28)
        images.append(pixels)
        labels.append(np.full(len(pixels), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    # fixed interleaving so the stream is not sorted by class
    order = np.random.default_rng(20211012).permutation(len(labels))
    images, labels = images[order], labels[order]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(out / "mnist10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">iiii", 2051, len(images), 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(out / "mnist10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">ii", 2049, len(labels)))
        f.write(labels.tobytes())
    print(f"wrote {len(labels)} samples to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
