"""Build the bundled MNIST subset as gzipped IDX files.

Source: the 5,000-image MNIST sample shipped with mlxtend
(`mlxtend/data/data/mnist_5k.csv.gz`, 500 images per digit, 784 pixel
columns followed by the label). The images are shuffled with a fixed seed
and split per class into 400 train / 100 test images.

    pip download --no-deps mlxtend
    python3 scripts/make_mnist_subset.py mlxtend-*.whl crates/core/data/mnist-subset
"""

import gzip
import io
import struct
import sys
import zipfile

import numpy as np


def write_idx_images(path, images):
    header = struct.pack(">IIII", 0x00000803, len(images), 28, 28)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    header = struct.pack(">II", 0x00000801, len(labels))
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + labels.astype(np.uint8).tobytes())


def main(wheel, out_dir):
    raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",").astype(np.uint8)
    images, labels = table[:, :-1], table[:, -1]

    rng = np.random.default_rng(20240101)
    train_idx, test_idx = [], []
    for c in range(10):
        idx = rng.permutation(np.flatnonzero(labels == c))
        train_idx.extend(idx[:400])
        test_idx.extend(idx[400:])
    train_idx = rng.permutation(train_idx)
    test_idx = rng.permutation(test_idx)

    write_idx_images(f"{out_dir}/train-images-idx3-ubyte.gz", images[train_idx])
    write_idx_labels(f"{out_dir}/train-labels-idx1-ubyte.gz", labels[train_idx])
    write_idx_images(f"{out_dir}/t10k-images-idx3-ubyte.gz", images[test_idx])
    write_idx_labels(f"{out_dir}/t10k-labels-idx1-ubyte.gz", labels[test_idx])


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
