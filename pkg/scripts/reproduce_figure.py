#!/usr/bin/env python3
"""One-command reproduction of the two-spike outlier figure.

Draws one spiked elliptic matrix at N=2500 (a size-5 Jordan block at
1.5+2.625i and a size-3 block at 1.5-1.5i), writes spectrum.svg with the bulk
as dots, detected outliers as crosses forming a regular pentagon and an
equilateral triangle, and the predicted locations as filled discs.

Usage: python scripts/reproduce_figure.py [outdir] [N] [seed]
"""

import sys

from ellipticlab.cli import main

outdir = sys.argv[1] if len(sys.argv) > 1 else "figure_out"
N = sys.argv[2] if len(sys.argv) > 2 else "2500"
seed = sys.argv[3] if len(sys.argv) > 3 else "7"

sys.exit(main([
    "outliers", "--preset", "figure1", "--N", N, "--replicas", "20",
    "--eps", "0.1", "--seed", seed, "--out", outdir, "--plot",
]))
