"""Seeded samplers for every random-matrix law the laboratory uses.

Streams come from a counter-based Philox generator keyed by (seed, stream),
so replica r of a Monte Carlo run draws from stream r and reruns are
bit-identical regardless of scheduling. Normals are produced by Box-Muller
on the counter stream; a complex standard normal is (g1 + i*g2)/sqrt(2),
normalized so E|z|^2 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symgroup import Permutation

KINDS = ("gue", "ginibre", "elliptic", "haar_unitary", "permutation")


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    dim: int
    rho: float | None = None
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown ensemble kind {self.kind!r}")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        if self.kind == "elliptic":
            if self.rho is None:
                raise ParameterError("elliptic ensemble needs rho")
            if abs(self.rho) > 1:
                raise ParameterError(f"|rho| <= 1 required, got {self.rho}")
        elif self.rho is not None:
            raise ParameterError(f"rho only applies to the elliptic ensemble, not {self.kind!r}")


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent counter-based stream keyed by (seed, stream)."""
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF) << 64 | (int(stream) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Box-Muller standard normals."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(shape)) if shape else 1
    half = (count + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 in (0, 1], so the log is finite
    angle = 2.0 * np.pi * u2
    g = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:count]
    return g.reshape(shape)


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Complex Gaussian with E z = 0, E z^2 = 0, E |z|^2 = 1."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    g = standard_normal(rng, (2,) + shape)
    return (g[0] + 1j * g[1]) / np.sqrt(2.0)


def sample_gue(N: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian draw with E|h_ij|^2 = 1, E h_ij^2 = 0 off the diagonal and
    real N(0,1) diagonal."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    G = complex_normal(rng, (N, N))
    return (G + G.conj().T) / np.sqrt(2.0)


def sample_ginibre(N: int, rng: np.random.Generator) -> np.ndarray:
    """Entrywise i.i.d. complex Gaussian, E|y_ij|^2 = 1."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    return complex_normal(rng, (N, N))


def sample_elliptic(N: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Unnormalized Gaussian elliptic draw Y with E y_ij y_ji = rho.

    Y = sqrt((1+rho)/2) H1 + i sqrt((1-rho)/2) H2 for independent GUE draws
    H1, H2. Divide by sqrt(N) to obtain the matrix whose spectrum fills the
    ellipse. The construction is unitarily invariant by construction, which is
    what licenses the CLT machinery on this ensemble.
    """
    if abs(rho) > 1:
        raise ParameterError(f"|rho| <= 1 required, got {rho}")
    H1 = sample_gue(N, rng)
    H2 = sample_gue(N, rng)
    return np.sqrt((1.0 + rho) / 2.0) * H1 + 1j * np.sqrt((1.0 - rho) / 2.0) * H2


def sample_haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Exactly Haar on U(N): QR of a Ginibre draw with the R-diagonal phases
    absorbed into Q so the R-diagonal is positive."""
    G = sample_ginibre(N, rng)
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R).copy()
    d[d == 0] = 1.0
    return Q * (d / np.abs(d))


def sample_haar_unitary_batch(N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of `count` independent Haar unitaries, shape (count, N, N)."""
    G = complex_normal(rng, (count, N, N))
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R, axis1=-2, axis2=-1).copy()
    d[d == 0] = 1.0
    return Q * (d / np.abs(d))[:, None, :]


def sample_permutation(N: int, rng: np.random.Generator) -> Permutation:
    """Uniform permutation (Fisher-Yates shuffle)."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    return Permutation(tuple(int(i) for i in rng.permutation(N)))


def cycle_counts(p: Permutation) -> dict[int, int]:
    """Cycle-type census: d -> number of d-cycles; sum of d*T_d is n."""
    counts: dict[int, int] = {}
    for cycle in p.cycles():
        counts[len(cycle)] = counts.get(len(cycle), 0) + 1
    return counts


def sample(spec: EnsembleSpec):
    """Draw from an EnsembleSpec; identical specs give bit-identical output."""
    rng = make_rng(spec.seed, spec.stream)
    if spec.kind == "gue":
        return sample_gue(spec.dim, rng)
    if spec.kind == "ginibre":
        return sample_ginibre(spec.dim, rng)
    if spec.kind == "elliptic":
        return sample_elliptic(spec.dim, spec.rho, rng)
    if spec.kind == "haar_unitary":
        return sample_haar_unitary(spec.dim, rng)
    return sample_permutation(spec.dim, rng)
