#!/usr/bin/env python3
"""Entry-CLT spot checks at moderate scale: resolvent entries of the elliptic
model, conjugated fixed matrices, permutation matrices in a random basis, and
the bi-invariant ensemble with its exact finite-N Weingarten value.

Usage: python scripts/clt_suite.py [outdir]
"""

import sys

from ellipticlab.cli import main

outdir = sys.argv[1] if len(sys.argv) > 1 else "clt_out"

code = main([
    "clt", "--kind", "resolvent", "--rho", "0", "--z", "2", "--N", "400",
    "--replicas", "1000", "--seed", "11", "--independence",
    "--out", f"{outdir}/resolvent",
])
code |= main([
    "clt", "--kind", "conjugated", "--N", "400", "--replicas", "1000",
    "--seed", "12", "--out", f"{outdir}/conjugated",
])
code |= main([
    "permutation", "--N", "200", "--ks", "1,2", "--replicas", "2000",
    "--entries", "--seed", "13", "--out", f"{outdir}/permutation",
])
code |= main([
    "biinvariant", "--N", "400", "--replicas", "1000", "--seed", "14",
    "--out", f"{outdir}/biinvariant",
])
sys.exit(code)
