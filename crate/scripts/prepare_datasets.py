#!/usr/bin/env python3
"""Build the bundled datasets under data/ from locally available sources.

  iris.csv                     <- scikit-learn's bundled iris.csv
  breast_cancer_wisconsin.csv  <- MASS::biopsy (699 rows, 16 with missing
                                  bare nuclei dropped -> 683), as shipped in the
                                  `pydataset` sdist resources archive
  mnist/*-ubyte                <- the `mnist` npm package (10k digits stored as
                                  pixel/255 rounded to 3 decimals); the first 500
                                  digits of each class go to train, the next 100
                                  to test

Usage:
  prepare_datasets.py --pydataset-resources DIR --mnist-npm DIR [--out data]
"""
import argparse
import csv
import json
import os
import struct

import sklearn


def write_iris(out):
    src = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data", "iris.csv")
    names = ["setosa", "versicolor", "virginica"]
    with open(src) as f, open(os.path.join(out, "iris.csv"), "w", newline="") as g:
        rows = list(csv.reader(f))[1:]
        w = csv.writer(g)
        w.writerow(["sepal_length", "sepal_width", "petal_length", "petal_width", "species"])
        for r in rows:
            w.writerow(r[:4] + [names[int(r[4])]])


def write_wbc(resources, out):
    src = os.path.join(resources, "rdata", "csv", "MASS", "biopsy.csv")
    with open(src) as f, open(os.path.join(out, "breast_cancer_wisconsin.csv"), "w", newline="") as g:
        rows = list(csv.reader(f))
        w = csv.writer(g)
        w.writerow([
            "clump_thickness", "cell_size_uniformity", "cell_shape_uniformity",
            "marginal_adhesion", "epithelial_cell_size", "bare_nuclei",
            "bland_chromatin", "normal_nucleoli", "mitoses", "class",
        ])
        for r in rows[1:]:
            vals = r[2:11]
            if "NA" in vals:
                continue
            w.writerow(vals + [r[11]])


def write_idx(images, labels, prefix):
    with open(prefix + "-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(prefix + "-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(bytes(labels))


def write_mnist(npm_dir, out, n_train=500, n_test=100):
    train, test = [], []
    for d in range(10):
        with open(os.path.join(npm_dir, "src", "digits", f"{d}.json")) as f:
            raw = json.load(f)["data"]
        n = len(raw) // 784
        imgs = [[int(round(v * 255)) for v in raw[k * 784:(k + 1) * 784]] for k in range(n)]
        train += [(img, d) for img in imgs[:n_train]]
        test += [(img, d) for img in imgs[n_train:n_train + n_test]]
    # interleave classes so file order is not sorted by label
    def interleave(items, per):
        return [items[c * per + k] for k in range(per) for c in range(10)]
    train = interleave(train, n_train)
    test = interleave(test, n_test)
    os.makedirs(os.path.join(out, "mnist"), exist_ok=True)
    write_idx([i for i, _ in train], [l for _, l in train], os.path.join(out, "mnist", "train"))
    write_idx([i for i, _ in test], [l for _, l in test], os.path.join(out, "mnist", "t10k"))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pydataset-resources", required=True)
    ap.add_argument("--mnist-npm", required=True)
    ap.add_argument("--out", default="data")
    a = ap.parse_args()
    os.makedirs(a.out, exist_ok=True)
    write_iris(a.out)
    write_wbc(a.pydataset_resources, a.out)
    write_mnist(a.mnist_npm, a.out)


if __name__ == "__main__":
    main()
