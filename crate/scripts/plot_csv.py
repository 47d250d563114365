#!/usr/bin/env python3
"""Plot columns of a qutrit-floquet CSV against the first column.

    python scripts/plot_csv.py out/fig2/series.csv [--y overlap mean_Sz] [--save fig.png]
"""
import argparse

import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("--x", help="x column (default: first)")
    ap.add_argument("--y", nargs="*", help="y columns (default: all numeric others)")
    ap.add_argument("--save")
    args = ap.parse_args()

    df = pd.read_csv(args.csv)
    x = args.x or df.columns[0]
    ys = args.y or [c for c in df.select_dtypes("number").columns if c != x]
    ax = df.plot(x=x, y=ys, marker=".")
    ax.set_title(args.csv)
    if args.save:
        plt.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
