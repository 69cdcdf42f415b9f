#!/usr/bin/env python3
"""Render the contamination histogram CSV produced by `lhv fig2`.

Usage:
    lhv fig2 --out fig2.csv
    python scripts/plot_contamination.py fig2.csv fig2.png
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
    starts, ends, ratios = data[:, 0], data[:, 1], data[:, 2]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(starts, ratios, width=ends - starts, align="edge",
           edgecolor="black", color="steelblue")
    ax.set_xlabel("decay time (K_S lifetimes)")
    ax.set_ylabel("K_L two-pion over K_S two-pion decays")
    ax.axhline(0.5, color="gray", linestyle="--", linewidth=0.8)
    fig.tight_layout()
    fig.savefig(argv[2], dpi=150)
    print(f"wrote {argv[2]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
