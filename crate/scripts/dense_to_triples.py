#!/usr/bin/env python3
"""Convert a dense N x N x T array into the pltf triple format.

Reads `.npy` files, or `.mat` files (MATLAB, via scipy) with `--key` naming
the variable; the Kinship data is usually distributed as a 104x104x26
array in this form. Nonzero entries become 1, zeros become 0 and NaN
entries are left unobserved. `--relation-axis 0` handles arrays stored
as T x N x N.
"""

import argparse
import sys

import numpy as np


def load(path, key):
    if path.endswith(".npy"):
        return np.load(path)
    if path.endswith(".mat"):
        from scipy.io import loadmat

        data = loadmat(path)
        if key is None:
            names = [k for k in data if not k.startswith("__")]
            if len(names) != 1:
                sys.exit(f"{path}: pass --key, variables are {', '.join(names)}")
            key = names[0]
        return np.asarray(data[key], dtype=float)
    sys.exit(f"{path}: expected a .npy or .mat file")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--key")
    p.add_argument("--relation-axis", type=int, choices=[0, 2], default=2)
    args = p.parse_args()

    y = np.asarray(load(args.input, args.key), dtype=float)
    if y.ndim != 3:
        sys.exit(f"{args.input}: expected a 3-way array, got shape {y.shape}")
    if args.relation_axis == 0:
        y = np.moveaxis(y, 0, 2)
    n, n2, t_count = y.shape
    if n != n2:
        sys.exit(f"{args.input}: object axes differ ({n} vs {n2})")

    observed = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as out:
        out.write(f"{n} {t_count}\n")
        for i, j, t in zip(*np.nonzero(~np.isnan(y))):
            out.write(f"{i} {j} {t} {int(y[i, j, t] != 0)}\n")
            observed += 1
    print(f"{n} objects, {t_count} relations, {observed} observed entries", file=sys.stderr)


if __name__ == "__main__":
    main()
