#!/usr/bin/env python3
"""Convergence-rate sweep: regress log median |outlier - hat| on log N.

Runs both the two-spike figure preset (expected slopes -1/10 and -1/6) and a
scalar spike (expected -1/2). Heavy: hundreds of eigenproblem solves up to
N=3200. Trim --Ns / --replicas for a quick look.

Usage: python scripts/rate_sweep.py [outdir] [replicas]
"""

import sys

from ellipticlab.cli import main

outdir = sys.argv[1] if len(sys.argv) > 1 else "rates_out"
replicas = sys.argv[2] if len(sys.argv) > 2 else "200"

code = main([
    "rates", "--preset", "figure1", "--Ns", "400,800,1600,3200",
    "--replicas", replicas, "--eps", "0.1", "--seed", "404",
    "--out", f"{outdir}/figure1",
])
code |= main([
    "rates", "--preset", "scalar-spike", "--Ns", "400,800,1600,3200",
    "--replicas", replicas, "--seed", "405", "--out", f"{outdir}/scalar",
])
sys.exit(code)
