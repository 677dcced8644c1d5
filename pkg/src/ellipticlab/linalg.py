"""Dense complex linear algebra.

An in-house nonsymmetric eigensolver (Hessenberg reduction plus shifted QR),
permutation-indexed trace products, PSD factorization for Gaussian sampling,
and resolvent entries via partial-pivot LU. Everything here is a pure function
of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as _sla

from .symgroup import Permutation


class DimensionError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


class NearEigenvalueError(RuntimeError):
    """z is numerically an eigenvalue; carries the offending pivot magnitude."""

    def __init__(self, message: str, pivot: float):
        super().__init__(message)
        self.pivot = pivot


def as_square(M) -> np.ndarray:
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    return A


def is_hermitian(M, rtol: float = 1e-12) -> bool:
    A = as_square(M)
    scale = np.abs(A).max()
    if scale == 0.0:
        return True
    return np.abs(A - A.conj().T).max() <= rtol * scale


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    converged: bool
    iterations: int

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


def _hessenberg(A: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity transform)."""
    H = A.copy()
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            continue
        v = x.copy()
        # phase-matched sign choice avoids cancellation
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v[0] += phase * normx
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _trailing_eigs_2x2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]], cancellation-safe."""
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c + 0j)
    s1, s2 = half + disc, half - disc
    big = s1 if abs(s1) >= abs(s2) else s2
    if big == 0.0:
        return d, a
    lam1 = d - b * c / big
    lam2 = a + d - lam1
    return lam1, lam2


def _wilkinson_shift(H, hi):
    a, b = H[hi - 1, hi - 1], H[hi - 1, hi]
    c, d = H[hi, hi - 1], H[hi, hi]
    lam1, lam2 = _trailing_eigs_2x2(a, b, c, d)
    return lam1 if abs(lam1 - d) <= abs(lam2 - d) else lam2


def eigenvalues(M, tol: float = 1e-13, max_iter: int | None = None) -> Spectrum:
    """All eigenvalues of a general complex matrix.

    Hessenberg reduction followed by shifted QR with Wilkinson shifts;
    a subdiagonal entry deflates when |h_{k+1,k}| <= tol*(|h_kk| + |h_{k+1,k+1}|).
    If max_iter (default 40*N) QR steps do not converge the whole spectrum the
    best iterate's diagonal is returned with converged=False. Returned
    eigenvalues are unordered; treat the result as a multiset.
    """
    A = as_square(M)
    n = A.shape[0]
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n == 0:
        return Spectrum(np.zeros(0, dtype=complex), True, 0)
    if max_iter is None:
        max_iter = 40 * n

    H = _hessenberg(A)
    eigs: list[complex] = []
    hi = n - 1
    total_iter = 0
    stall = 0
    converged = True

    while hi >= 0:
        if hi == 0:
            eigs.append(H[0, 0])
            hi -= 1
            continue
        # deflate converged subdiagonals at the bottom of the active region
        lo = hi
        while lo > 0 and abs(H[lo, lo - 1]) > tol * (abs(H[lo - 1, lo - 1]) + abs(H[lo, lo])):
            lo -= 1
        if lo == hi:
            eigs.append(H[hi, hi])
            H[hi, hi - 1] = 0.0
            hi -= 1
            stall = 0
            continue
        if lo == hi - 1:
            lam1, lam2 = _trailing_eigs_2x2(
                H[lo, lo], H[lo, hi], H[hi, lo], H[hi, hi]
            )
            eigs.extend([lam1, lam2])
            if lo > 0:
                H[lo, lo - 1] = 0.0
            hi -= 2
            stall = 0
            continue

        if total_iter >= max_iter:
            converged = False
            eigs.extend(H[k, k] for k in range(hi + 1))
            break
        total_iter += 1
        stall += 1

        if stall % 10 == 0:
            # exceptional shift breaks rotational stagnation (e.g. cyclic permutations)
            shift = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            shift = _wilkinson_shift(H, hi)

        # explicit single-shift QR sweep restricted to the active diagonal block
        B = H[lo:hi + 1, lo:hi + 1]
        m = B.shape[0]
        idx = np.arange(m)
        B[idx, idx] -= shift
        rotations = []
        for k in range(m - 1):
            a, b = B[k, k], B[k + 1, k]
            r = np.hypot(abs(a), abs(b))
            if r == 0.0:
                rotations.append((1.0 + 0j, 0.0 + 0j))
                continue
            c, s = a / r, b / r
            rotations.append((c, s))
            rowk = B[k, k:].copy()
            rowk1 = B[k + 1, k:]
            B[k, k:] = np.conj(c) * rowk + np.conj(s) * rowk1
            B[k + 1, k:] = -s * rowk + c * rowk1
        for k, (c, s) in enumerate(rotations):
            top = min(k + 2, m - 1)
            colk = B[:top + 1, k].copy()
            colk1 = B[:top + 1, k + 1]
            B[:top + 1, k] = c * colk + s * colk1
            B[:top + 1, k + 1] = -np.conj(s) * colk + np.conj(c) * colk1
        B[idx, idx] += shift

    return Spectrum(np.array(eigs, dtype=complex), converged, total_iter)


def eigenvalues_lapack(M) -> Spectrum:
    """LAPACK-backed spectrum with the same Spectrum contract (fast path for
    the large Monte Carlo sweeps; cross-checked against `eigenvalues`)."""
    A = as_square(M)
    return Spectrum(np.linalg.eigvals(A), True, 0)


def top_eigenvalues(M, k: int, v0: np.ndarray | None = None, tol: float = 1e-9) -> np.ndarray:
    """The k largest-modulus eigenvalues via Arnoldi, falling back to LAPACK.

    Intended for spiked matrices whose k outliers are well separated from the
    bulk; deterministic for a fixed start vector.
    """
    A = as_square(M)
    n = A.shape[0]
    if k <= 0:
        raise ValueError("k must be positive")
    if k >= n - 1:
        return eigenvalues_lapack(A).eigenvalues
    if v0 is None:
        v0 = np.ones(n) / np.sqrt(n)
    try:
        return _sla.eigs(A, k=k, which="LM", v0=v0, tol=tol, return_eigenvectors=False)
    except _sla.ArpackNoConvergence:
        return eigenvalues_lapack(A).eigenvalues


def tr_sigma(sigma: Permutation, mats) -> complex:
    """Product over the cycles (t1 ... tm) of sigma of Tr(N_{t1} N_{t2} ... N_{tm})."""
    mats = [np.asarray(M, dtype=complex) for M in mats]
    if len(mats) != sigma.n:
        raise DimensionError(f"{sigma.n}-permutation needs {sigma.n} matrices, got {len(mats)}")
    if not mats:
        return 1.0 + 0j
    dim = mats[0].shape
    for M in mats:
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape != dim:
            raise DimensionError("all matrices must be square with equal dimension")
    total = 1.0 + 0j
    for cycle in sigma.cycles():
        prod = mats[cycle[0]]
        for t in cycle[1:]:
            prod = prod @ mats[t]
        total *= np.trace(prod)
    return complex(total)


def cholesky_psd(K, jitter: float = 0.0, max_jitter: float = 1e-6) -> np.ndarray:
    """Lower factor L with L L^T = K + jitter*I for real symmetric K.

    On failure the jitter escalates by factors of 10 up to max_jitter before
    giving up with NotPSDError.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionError(f"expected square matrix, got {K.shape}")
    scale = max(np.abs(K).max(), 1.0)
    if np.abs(K - K.T).max() > 1e-10 * scale:
        raise NotPSDError("matrix is not symmetric")
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    n = K.shape[0]
    current = jitter
    while True:
        try:
            return np.linalg.cholesky(K + current * np.eye(n))
        except np.linalg.LinAlgError:
            nxt = 1e-14 * scale if current == 0.0 else current * 10.0
            if nxt > max_jitter:
                raise NotPSDError(
                    f"not positive semidefinite even with jitter {current:g}"
                ) from None
            current = nxt


def resolvent_entry(z: complex, X, i: int, j: int) -> complex:
    """Entry (i, j) of (zI - X)^{-1}, via partial-pivot LU on (zI - X) e = e_j.

    Indices are 0-based. Raises NearEigenvalueError when z is numerically in
    the spectrum (detected through the LU pivots).
    """
    A = as_square(X)
    n = A.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise DimensionError(f"indices ({i}, {j}) out of range for dimension {n}")
    system = z * np.eye(n, dtype=complex) - A
    import warnings

    with warnings.catch_warnings():
        # singularity is detected through the pivots below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(system)
    pivots = np.abs(np.diag(lu))
    floor = 1e-14 * max(np.abs(system).max(), 1.0)
    if pivots.min() <= floor:
        raise NearEigenvalueError(
            f"z={z} is within pivot tolerance of an eigenvalue", pivot=float(pivots.min())
        )
    e = np.zeros(n, dtype=complex)
    e[j] = 1.0
    col = scipy.linalg.lu_solve((lu, piv), e)
    return complex(col[i])
