#!/usr/bin/env python3
"""Desk-scale experiment (4x4 grid, N=24, full-row-rank regime).

Runs in seconds; every agent converges to the centralized pseudoinverse
solution. Figure data lands in out/desk.
"""

import sys

from dkoopman.cli import main

if __name__ == "__main__":
    sys.exit(main(["experiment", "--config", "configs/desk.json"]))
