"""Exact Weingarten calculus on the unitary group.

The Weingarten function is defined through the Gram matrix
G_{sigma,tau} = N^{#(sigma tau^{-1})} over the symmetric group: Wg is the
id-row of G^{-1}, equivalently the unique solution of

    sum_tau Wg(tau) N^{#(tau^{-1} sigma)} = [sigma == id]   for all sigma.

Everything is computed in exact rational arithmetic. Since the Gram matrix
commutes with simultaneous conjugation and the right-hand side is a class
vector, the solution is a class function, and the system is solved exactly
on cycle types (a partitions(n)-sized system) rather than on all n! group
elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import DimensionError, as_square, tr_sigma
from .symgroup import (
    Permutation,
    enumerate_group,
    pairings,
    partitions,
    permutation_with_type,
)

MAX_ORDER = 6  # group order 6! = 720 keeps exact trace sums instant


class OrderError(ValueError):
    pass


class RegimeError(ValueError):
    """N < n: the Gram matrix is no longer invertible-safe."""


@dataclass(frozen=True)
class WeingartenTable:
    n: int
    N: int
    values: dict[tuple[int, ...], Fraction]

    @property
    def float_values(self) -> dict[tuple[int, ...], float]:
        return {t: float(v) for t, v in self.values.items()}

    def wg(self, sigma: Permutation) -> Fraction:
        return self.values[sigma.cycle_type()]

    def wg_float(self, sigma: Permutation) -> float:
        return float(self.values[sigma.cycle_type()])


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over the rationals with partial (nonzero) pivoting."""
    m = len(A)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(m):
        pivot_row = next((r for r in range(col, m) if M[r][col] != 0), None)
        if pivot_row is None:
            raise RegimeError("singular Gram system")
        M[col], M[pivot_row] = M[pivot_row], M[col]
        pivot = M[col][col]
        M[col] = [x / pivot for x in M[col]]
        for r in range(m):
            if r != col and M[r][col] != 0:
                factor = M[r][col]
                M[r] = [x - factor * y for x, y in zip(M[r], M[col])]
    return [M[i][m] for i in range(m)]


def weingarten_table(n: int, N: int) -> WeingartenTable:
    """Exact Weingarten table for S_n at dimension N (requires N >= n, n <= 6)."""
    if not 1 <= n <= MAX_ORDER:
        raise OrderError(f"n={n} outside [1, {MAX_ORDER}]")
    if N < n:
        raise RegimeError(f"need N >= n, got N={N}, n={n}")
    types = partitions(n)
    type_index = {t: i for i, t in enumerate(types)}
    group = enumerate_group(n)
    tau_data = [(tau.inverse(), type_index[tau.cycle_type()]) for tau in group]

    A = [[Fraction(0)] * len(types) for _ in types]
    for i, ctype in enumerate(types):
        sigma = permutation_with_type(ctype)
        row = A[i]
        for tau_inv, j in tau_data:
            row[j] += Fraction(N) ** len((tau_inv * sigma).cycles())
    identity_type = tuple([1] * n)
    b = [Fraction(1) if t == identity_type else Fraction(0) for t in types]
    solution = _solve_exact(A, b)
    return WeingartenTable(n=n, N=N, values=dict(zip(types, solution)))


def haar_moment(Bs, Ms, N: int, table: WeingartenTable | None = None) -> complex:
    """Exact E_U prod_i Tr(U B_i U^* M_i) over the Haar measure on U(N).

    Evaluates sum_{sigma,gamma} Wg(sigma gamma^{-1}) Tr_sigma(B) Tr_gamma(M)
    with the exact table and floating trace products.
    """
    n = len(Bs)
    if len(Ms) != n:
        raise DimensionError(f"need equally many B and M matrices, got {n} and {len(Ms)}")
    if n == 0:
        return 1.0 + 0j
    if n > MAX_ORDER:
        raise OrderError(f"n={n} exceeds {MAX_ORDER}")
    Bs = [as_square(B) for B in Bs]
    Ms = [as_square(M) for M in Ms]
    dims = {M.shape[0] for M in Bs + Ms}
    if dims != {N}:
        raise DimensionError(f"all matrices must be {N}x{N}, saw dimensions {sorted(dims)}")
    if table is None:
        table = weingarten_table(n, N)
    elif (table.n, table.N) != (n, N):
        raise ValueError("table does not match (n, N)")

    group = enumerate_group(n)
    tr_b = [tr_sigma(sigma, Bs) for sigma in group]
    tr_m = [tr_sigma(gamma, Ms) for gamma in group]
    inverses = [gamma.inverse() for gamma in group]
    wg = table.float_values

    total = 0.0 + 0j
    for s, sigma in enumerate(group):
        for g in range(len(group)):
            total += wg[(sigma * inverses[g]).cycle_type()] * tr_b[s] * tr_m[g]
    return complex(total)


def haar_trace_pair_moment(A, C, N: int) -> complex:
    """Exact E_U Tr(U A) Tr(U^* C) = Wg(id_1; N) Tr(A C).

    The n=1 entry moment E[u_{ij} conj(u_{kl})] = delta delta Wg(id_1) is all
    that survives; products of one-sided traces are not expressible through
    haar_moment's conjugation form.
    """
    A = as_square(A)
    C = as_square(C)
    if A.shape != C.shape or A.shape[0] != N:
        raise DimensionError("A and C must both be N x N")
    wg1 = weingarten_table(1, N).values[(1,)]
    return complex(float(wg1) * np.trace(A @ C))


def pairing_limit_moment(ks, ls, tau, eta) -> complex:
    """Wick sum over perfect pairings: the limiting mixed moment E prod_i G_i.

    Each item i carries indices (ks[i], ls[i]); a pairing contributes
    prod tau(k_i, k_j) * eta(l_i, l_j) over its 2-cycles. Odd counts give 0.
    """
    if len(ks) != len(ls):
        raise DimensionError("ks and ls must have equal length")
    n = len(ks)
    if n % 2 == 1:
        return 0.0 + 0j
    total = 0.0 + 0j
    for sigma in pairings(n):
        prod = 1.0 + 0j
        for cycle in sigma.cycles():
            i, j = cycle
            prod *= tau(ks[i], ks[j]) * eta(ls[i], ls[j])
        total += prod
    return complex(total)
