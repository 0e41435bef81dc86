#!/usr/bin/env python3
"""Write a small MNIST subset in IDX format.

The 5,000-sample MNIST extract shipped inside the mlxtend wheel is the source
(pip download --no-deps mlxtend). Samples are shuffled with a fixed seed and
split into disjoint train/test sets.
"""
import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel", required=True)
    ap.add_argument("--out", default="data/mnist")
    ap.add_argument("--train", type=int, default=1000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20210301)
    args = ap.parse_args()

    with zipfile.ZipFile(args.wheel) as z:
        raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz"))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    pixels, labels = table[:, :-1], table[:, -1]

    order = np.random.default_rng(args.seed).permutation(len(labels))
    train = order[: args.train]
    test = order[args.train : args.train + args.test]

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "train-images-idx3-ubyte", pixels[train])
    write_idx_labels(out / "train-labels-idx1-ubyte", labels[train])
    write_idx_images(out / "t10k-images-idx3-ubyte", pixels[test])
    write_idx_labels(out / "t10k-labels-idx1-ubyte", labels[test])


if __name__ == "__main__":
    main()
