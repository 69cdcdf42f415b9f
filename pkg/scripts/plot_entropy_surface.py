#!/usr/bin/env python3
"""Render the entropy-surface CSV produced by `lhv entropy-surface`.

Usage:
    lhv entropy-surface --out surface.csv
    python scripts/plot_entropy_surface.py surface.csv surface.png
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main(argv):
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    with open(argv[1]) as f:
        rows = [line for line in f if not line.startswith("#")]
    data = np.loadtxt(rows[1:], delimiter=",")
    # row-major with the imaginary axis fastest
    re = np.unique(data[:, 0])
    im = np.unique(data[:, 1])
    surface = data[:, 2].reshape(len(re), len(im))

    fig = plt.figure(figsize=(7, 5))
    ax = fig.add_subplot(projection="3d")
    re_grid, im_grid = np.meshgrid(re, im, indexing="ij")
    ax.plot_surface(re_grid, im_grid, surface, cmap="viridis", linewidth=0)
    ax.set_xlabel("Re of K_L K_L admixture")
    ax.set_ylabel("Im of K_L K_L admixture")
    ax.set_zlabel("entanglement entropy")
    fig.tight_layout()
    fig.savefig(argv[2], dpi=150)
    print(f"wrote {argv[2]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
