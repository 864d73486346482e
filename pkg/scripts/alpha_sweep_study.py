#!/usr/bin/env python3
"""Step-size boundary study on the desk instance.

Sweeps theta multiples of alpha_max (including values above 1, where the
stability guarantee no longer applies and the divergence guard usually
trips) with seeded random initialization. Rows land in
out/alpha_sweep/alpha_sweep.csv.
"""

import sys

from dkoopman.cli import main

if __name__ == "__main__":
    sys.exit(main(["alpha-sweep", "--config", "configs/sweep.json"]))
