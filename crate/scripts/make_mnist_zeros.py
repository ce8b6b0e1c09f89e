#!/usr/bin/env python3
"""Extract the handwritten zeros from the MNIST IDX files (train then test)
into a single gzipped IDX3 file.

    python3 scripts/make_mnist_zeros.py <dir-with-idx-files> data/mnist-zeros-idx3-ubyte.gz

The IDX files can be obtained e.g. with `npm pack mnist-data` (see data/README.md).
"""
import gzip
import struct
import sys
from pathlib import Path


def read_idx(path):
    raw = Path(path).read_bytes()
    if raw[:2] != b"\x00\x00":
        raw = gzip.decompress(raw)
    dims = raw[3]
    shape = struct.unpack(">" + "I" * dims, raw[4 : 4 + 4 * dims])
    return shape, raw[4 + 4 * dims :]


def main():
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    rows = []
    for split in ("train", "t10k"):
        (n, h, w), pixels = read_idx(src / f"{split}-images-idx3-ubyte")
        (m,), labels = read_idx(src / f"{split}-labels-idx1-ubyte")
        assert n == m
        stride = h * w
        rows += [pixels[k * stride : (k + 1) * stride] for k in range(n) if labels[k] == 0]
    header = struct.pack(">BBBBIII", 0, 0, 0x08, 3, len(rows), h, w)
    with open(dst, "wb") as raw, gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as f:
        f.write(header + b"".join(rows))
    print(f"wrote {len(rows)} images to {dst}")


if __name__ == "__main__":
    main()
