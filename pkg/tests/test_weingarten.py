from fractions import Fraction

import numpy as np
import pytest

from ellipticlab.ensembles import complex_normal, make_rng, sample_gue, sample_haar_unitary_batch
from ellipticlab.linalg import tr_sigma
from ellipticlab.symgroup import Permutation, enumerate_group
from ellipticlab.weingarten import (
    OrderError,
    RegimeError,
    haar_moment,
    haar_trace_pair_moment,
    pairing_limit_moment,
    weingarten_table,
)


def test_wg_n1():
    for N in (1, 2, 7, 100):
        table = weingarten_table(1, N)
        assert table.values[(1,)] == Fraction(1, N)


@pytest.mark.parametrize("N", range(2, 11))
def test_wg_n2_closed_form(N):
    table = weingarten_table(2, N)
    assert table.values[(1, 1)] == Fraction(1, N * N - 1)
    assert table.values[(2,)] == Fraction(-1, N * (N * N - 1))


@pytest.mark.parametrize("N", [3, 5, 9])
def test_wg_n3_closed_form(N):
    # published n=3 values
    table = weingarten_table(3, N)
    d = N
    assert table.values[(1, 1, 1)] == Fraction(d * d - 2, d * (d * d - 1) * (d * d - 4))
    assert table.values[(2, 1)] == Fraction(-1, (d * d - 1) * (d * d - 4))
    assert table.values[(3,)] == Fraction(2, d * (d * d - 1) * (d * d - 4))


def test_wg_asymptotics_n3():
    N = 50
    table = weingarten_table(3, N)
    value = float(table.values[(1, 1, 1)])
    assert abs(N**3 * value - 1.0) < 10.0 / N**2


def test_defining_property_exact():
    # sum_tau Wg(tau) N^{#(tau^-1 sigma)} = [sigma == id], exactly, all sigma
    for n in range(1, 6):
        group = enumerate_group(n)
        identity = Permutation.identity(n)
        for N in range(n, n + 4):
            table = weingarten_table(n, N)
            for sigma in group:
                total = sum(
                    table.wg(tau) * Fraction(N) ** len((tau.inverse() * sigma).cycles())
                    for tau in group
                )
                assert total == (1 if sigma == identity else 0)


def test_wg_regime_and_order_errors():
    with pytest.raises(RegimeError):
        weingarten_table(3, 2)
    with pytest.raises(OrderError):
        weingarten_table(7, 10)


def test_haar_moment_n1_exact():
    rng = make_rng(11, 0)
    N = 6
    B = complex_normal(rng, (N, N))
    M = complex_normal(rng, (N, N))
    value = haar_moment([B], [M], N)
    expected = np.trace(B) * np.trace(M) / N
    assert abs(value - expected) < 1e-12 * max(1.0, abs(expected))


def test_haar_moment_factorizes_when_m2_identity():
    rng = make_rng(12, 0)
    N = 5
    B1, B2 = complex_normal(rng, (N, N)), complex_normal(rng, (N, N))
    M1 = complex_normal(rng, (N, N))
    value = haar_moment([B1, B2], [M1, np.eye(N)], N)
    # Tr(U B2 U^* I) = Tr B2 is U-independent, so the moment factorizes
    expected = np.trace(B2) * haar_moment([B1], [M1], N)
    assert abs(value - expected) < 1e-10 * max(1.0, abs(expected))


def _traceless(M):
    return M - np.trace(M) / M.shape[0] * np.eye(M.shape[0])


@pytest.mark.slow
def test_haar_moment_n2_against_monte_carlo():
    rng = make_rng(13, 0)
    N = 8
    B = _traceless(complex_normal(rng, (N, N)))
    M = _traceless(complex_normal(rng, (N, N)))
    exact = haar_moment([B, B], [M, M], N)

    draws = 30_000
    vals = np.empty(draws, dtype=complex)
    done = 0
    while done < draws:
        batch = min(5000, draws - done)
        U = sample_haar_unitary_batch(N, batch, rng)
        UBUs = U @ B @ U.conj().transpose(0, 2, 1)
        tr = np.einsum("bij,ji->b", UBUs, M)
        vals[done:done + batch] = tr * tr
        done += batch
    err = abs(vals.mean() - exact)
    se = vals.std() / np.sqrt(draws)
    assert err < 5.0 * se, f"haar_moment off by {err:.3e} vs MC se {se:.3e}"


@pytest.mark.slow
def test_haar_moment_n3_against_monte_carlo():
    rng = make_rng(17, 0)
    N = 6
    Bs = [_traceless(complex_normal(rng, (N, N))) for _ in range(3)]
    Ms = [_traceless(complex_normal(rng, (N, N))) for _ in range(3)]
    exact = haar_moment(Bs, Ms, N)
    draws = 40_000
    vals = np.empty(draws, dtype=complex)
    done = 0
    while done < draws:
        batch = min(5000, draws - done)
        U = sample_haar_unitary_batch(N, batch, rng)
        Ustar = U.conj().transpose(0, 2, 1)
        prod = np.ones(batch, dtype=complex)
        for B, M in zip(Bs, Ms):
            prod *= np.einsum("bij,ji->b", U @ B @ Ustar, M)
        vals[done:done + batch] = prod
        done += batch
    err = abs(vals.mean() - exact)
    se = np.abs(vals - vals.mean()).std() / np.sqrt(draws)
    assert err < 5.0 * se, f"n=3 haar_moment off by {err:.3e} vs MC se {se:.3e}"


def test_haar_trace_pair_moment_matches_mc():
    rng = make_rng(14, 0)
    N = 6
    A = complex_normal(rng, (N, N))
    C = complex_normal(rng, (N, N))
    exact = haar_trace_pair_moment(A, C, N)
    draws = 40_000
    U = sample_haar_unitary_batch(N, draws, rng)
    vals = np.einsum("bij,ji->b", U, A) * np.einsum("bij,ji->b", U.conj().transpose(0, 2, 1), C)
    se = vals.std() / np.sqrt(draws)
    assert abs(vals.mean() - exact) < 5.0 * se


def test_pairing_limit_moment_small_cases():
    tau = lambda a, b: 0.5
    eta = lambda a, b: 3.0
    assert pairing_limit_moment([0, 1], [0, 1], tau, eta) == pytest.approx(1.5)
    assert pairing_limit_moment([0, 1, 2], [0, 1, 2], tau, eta) == 0
    ones = lambda a, b: 1.0
    # Wick count for E G^4 of a standard Gaussian: 3 pairings
    assert pairing_limit_moment([0] * 4, [0] * 4, ones, ones) == pytest.approx(3.0)


@pytest.mark.slow
def test_trace_product_scaling_of_centered_matrices():
    # E Tr_sigma(B,...) / N^{n/2}: bounded for pairings, decaying when a cycle
    # has length >= 3 (n = 4 here)
    pairing = Permutation.from_cycles(4, (0, 1), (2, 3))
    four_cycle = Permutation.from_cycles(4, (0, 1, 2, 3))
    replicas = 300
    paired_means, cycle_means = [], []
    for idx, N in enumerate((20, 40, 80)):
        acc_pair = 0.0 + 0j
        acc_cycle = 0.0 + 0j
        for r in range(replicas):
            rng = make_rng(1000 + idx, r)
            H = sample_gue(N, rng) / np.sqrt(N)
            B = _traceless(H)
            mats = [B] * 4
            acc_pair += tr_sigma(pairing, mats)
            acc_cycle += tr_sigma(four_cycle, mats)
        paired_means.append(abs(acc_pair / replicas) / N**2)
        cycle_means.append(abs(acc_cycle / replicas) / N**2)
    # bounded: stays within a factor 2 of the first value
    assert max(paired_means) < 2.0 * paired_means[0]
    assert min(paired_means) > 0.5 * paired_means[0]
    # decaying: roughly like 1/N
    assert cycle_means[-1] < 0.5 * cycle_means[0]
