#!/usr/bin/env python3
"""Build a small MNIST subset in IDX format from the digit JSON files shipped
with the `mnist` npm package (10,000 real MNIST digits, pixel values in [0,1]).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/mnist-subset

Writes gzipped IDX files: train (6,000 samples) and test (2,000 samples).
"""
import argparse
import gzip
import json
import random
import struct
from pathlib import Path


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--train", type=int, default=6000)
    ap.add_argument("--test", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20231)
    args = ap.parse_args()

    samples = []
    for digit in range(10):
        data = json.loads(Path(args.digits_dir, f"{digit}.json").read_text())["data"]
        assert len(data) % 784 == 0
        for k in range(len(data) // 784):
            px = bytes(max(0, min(255, round(v * 255))) for v in data[k * 784:(k + 1) * 784])
            samples.append((px, digit))

    random.Random(args.seed).shuffle(samples)
    if args.train + args.test > len(samples):
        raise SystemExit(f"only {len(samples)} samples available")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    splits = {"train": samples[:args.train],
              "t10k": samples[args.train:args.train + args.test]}
    for name, rows in splits.items():
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x00000803, (len(rows), 28, 28),
                  b"".join(px for px, _ in rows))
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x00000801, (len(rows),),
                  bytes(lbl for _, lbl in rows))
        print(name, len(rows))


if __name__ == "__main__":
    main()
