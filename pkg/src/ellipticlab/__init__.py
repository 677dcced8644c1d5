"""ellipticlab: spiked Gaussian elliptic ensembles, spectral outlier laws,
and exact Weingarten-calculus oracles."""

__version__ = "0.1.0"

from . import (  # noqa: F401
    cli,
    elliptic_law,
    ensembles,
    experiments,
    linalg,
    spike,
    symgroup,
    weingarten,
)
