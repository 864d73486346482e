#!/usr/bin/env python3
"""Wall-clock medians: centralized solve vs distributed iteration and run.

Timings are hardware-dependent and informational only; correctness outputs
are identical across repeats. JSON lands in out/bench/benchmark.json.
"""

import sys

from dkoopman.cli import main

if __name__ == "__main__":
    sys.exit(main(["benchmark", "--scale", "desk", "--out", "out/bench"]))
