#!/usr/bin/env python3
# Copyright 2026 The AdLM Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds gzipped IDX files for a desk-scale MNIST subset.

Train split: the 10,000 digits bundled in the npm package `mnist` (1.1.0),
stored as pixel/255 rounded to three decimals, which round-trips exactly to
the original uint8 pixels.
Test split: the 5,000 digits bundled in the PyPI package `mlxtend`
(mlxtend/data/data/mnist_5k.csv.gz). The two sets share no images.

Usage:
  npm pack mnist && tar xzf mnist-1.1.0.tgz
  pip download --no-deps mlxtend
  make_mnist_subset.py --npm-package package --mlxtend-wheel mlxtend-*.whl \
      --out data/mnist
"""

import argparse
import gzip
import io
import json
import os
import struct
import zipfile

import numpy as np


def write_idx(path, magic, array):
  with gzip.GzipFile(path, "wb", mtime=0) as f:
    f.write(struct.pack(">I", magic))
    for dim in array.shape:
      f.write(struct.pack(">I", dim))
    f.write(array.astype(np.uint8).tobytes())


def main():
  parser = argparse.ArgumentParser()
  parser.add_argument("--npm-package", required=True)
  parser.add_argument("--mlxtend-wheel", required=True)
  parser.add_argument("--out", required=True)
  args = parser.parse_args()

  images, labels = [], []
  for digit in range(10):
    path = os.path.join(args.npm_package, "src", "digits", f"{digit}.json")
    with open(path) as f:
      raw = np.array(json.load(f)["data"], dtype=np.float64).reshape(-1, 784)
    images.append(np.rint(raw * 255.0))
    labels.append(np.full(raw.shape[0], digit))
  train_x = np.concatenate(images)
  train_y = np.concatenate(labels)
  # Interleave classes with a fixed permutation so prefixes stay balanced.
  order = np.random.RandomState(20170918).permutation(train_x.shape[0])
  train_x, train_y = train_x[order], train_y[order]

  with zipfile.ZipFile(args.mlxtend_wheel) as wheel:
    csv = gzip.decompress(wheel.read("mlxtend/data/data/mnist_5k.csv.gz"))
  table = np.loadtxt(io.StringIO(csv.decode()), delimiter=",")
  test_x, test_y = table[:, :-1], table[:, -1]
  order = np.random.RandomState(20170919).permutation(test_x.shape[0])
  test_x, test_y = test_x[order], test_y[order]

  os.makedirs(args.out, exist_ok=True)
  write_idx(os.path.join(args.out, "train-images-idx3-ubyte.gz"), 0x803,
            train_x.reshape(-1, 28, 28))
  write_idx(os.path.join(args.out, "train-labels-idx1-ubyte.gz"), 0x801,
            train_y)
  write_idx(os.path.join(args.out, "t10k-images-idx3-ubyte.gz"), 0x803,
            test_x.reshape(-1, 28, 28))
  write_idx(os.path.join(args.out, "t10k-labels-idx1-ubyte.gz"), 0x801,
            test_y)
  print(f"train {train_x.shape[0]} test {test_x.shape[0]}")


if __name__ == "__main__":
  main()
