#!/usr/bin/env python3
"""Plot density CSVs emitted by `gpexact scenario` (outside the artifact
contract; needs matplotlib).

Usage: python docs/plot_density.py results/density_t0.csv [more.csv ...]
"""

import csv
import sys


def main(paths):
    try:
        import matplotlib.pyplot as plt
    except ImportError:
        sys.exit("matplotlib is required for plotting")
    if not paths:
        sys.exit(__doc__)
    for path in paths:
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        x = [float(r["x"]) for r in rows]
        dens = [float(r["density"]) for r in rows]
        plt.plot(x, dens, label=path)
    plt.xlabel("x")
    plt.ylabel(r"$|\Psi|^2$")
    plt.legend()
    plt.tight_layout()
    plt.show()


if __name__ == "__main__":
    main(sys.argv[1:])
