#!/usr/bin/env python3
"""Build IDX-format MNIST files from the digit set bundled in the `mnist` npm package.

The package ships 10000 MNIST digits as per-class JSON arrays of 28x28 floats in
[0, 1] (pixel / 255, rounded to three decimals). This script converts them back
to 8-bit pixels and writes standard IDX files:

    train-images-idx3-ubyte / train-labels-idx1-ubyte   (first N_TRAIN after shuffling)
    t10k-images-idx3-ubyte  / t10k-labels-idx1-ubyte    (the rest)

Usage:
    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 tools/make_mnist_idx.py package/src/digits data/mnist
"""
import json
import random
import struct
import sys
from pathlib import Path

N_TRAIN = 8000
SEED = 20180101


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    dst.mkdir(parents=True, exist_ok=True)
    samples = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        assert len(data) % 784 == 0
        for k in range(len(data) // 784):
            px = [min(255, max(0, round(v * 255))) for v in data[k * 784:(k + 1) * 784]]
            samples.append((px, digit))
    random.Random(SEED).shuffle(samples)
    train, test = samples[:N_TRAIN], samples[N_TRAIN:]
    write_images(dst / "train-images-idx3-ubyte", [s[0] for s in train])
    write_labels(dst / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_images(dst / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_labels(dst / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"wrote {len(train)} train / {len(test)} test images to {dst}")


if __name__ == "__main__":
    main()
