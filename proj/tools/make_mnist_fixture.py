#!/usr/bin/env python3
"""Convert the digit JSON files shipped with the npm `mnist` package into
gzip-compressed IDX files (images + labels).

Digits are interleaved round-robin by class so any prefix of the file is
class-balanced.

usage: make_mnist_fixture.py <package>/src/digits <out_dir>
"""
import gzip
import json
import struct
import sys
from pathlib import Path


def main() -> int:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    per_class = []
    for d in range(10):
        data = json.loads((src / f"{d}.json").read_text())["data"]
        count = len(data) // 784
        per_class.append([data[i * 784:(i + 1) * 784] for i in range(count)])

    images, labels = [], []
    cursor = [0] * 10
    while any(cursor[d] < len(per_class[d]) for d in range(10)):
        for d in range(10):
            if cursor[d] < len(per_class[d]):
                images.append(per_class[d][cursor[d]])
                labels.append(d)
                cursor[d] += 1

    n = len(images)
    pix = bytearray()
    for img in images:
        pix.extend(min(255, max(0, round(v * 255))) for v in img)
    out.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(out / "digits-images-idx3-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">IIII", 0x803, n, 28, 28))
        fh.write(pix)
    with gzip.GzipFile(out / "digits-labels-idx1-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">II", 0x801, n))
        fh.write(bytes(labels))
    print(f"wrote {n} digits")
    return 0


if __name__ == "__main__":
    sys.exit(main())
