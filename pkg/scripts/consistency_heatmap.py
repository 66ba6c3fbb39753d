#!/usr/bin/env python3
"""ARI-vs-(N, T) grid on the convergence-study preset.

Writes heatmap-ready CSV rows (N, T, mean_ari) for the preset-G family,
clustering with hc-average on the theta=0.5 distance.
"""

import argparse
import sys

from gnpr.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="consistency.csv")
    parser.add_argument("--N-list", default="32,64,128")
    parser.add_argument("--T-list", default="10,50,200,500,2000")
    parser.add_argument("--seeds", default="0,1,2,3,4")
    parser.add_argument("--theta", default="0.5")
    args = parser.parse_args()

    return cli_main(["consistency",
                     "--N-list", args.N_list,
                     "--T-list", args.T_list,
                     "--seeds", args.seeds,
                     "--theta", args.theta,
                     "--algo", "hc-average",
                     "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
