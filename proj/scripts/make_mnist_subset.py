#!/usr/bin/env python3
"""Convert the 5000-image MNIST subset shipped inside the mlxtend wheel to IDX.

Usage:
    pip download --no-deps mlxtend -d /tmp/mlx
    python3 scripts/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/

The subset holds 500 images per digit in the original 28x28 uint8 layout.
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path


def main():
    wheel, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    rows = gzip.decompress(raw).decode().strip().splitlines()
    pixels, labels = bytearray(), bytearray()
    for line in rows:
        cells = [int(c) for c in line.split(",")]
        pixels.extend(cells[:784])
        labels.append(cells[784])
    n = len(rows)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "mnist5k-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(pixels)
    with open(out_dir / "mnist5k-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels)


if __name__ == "__main__":
    main()
