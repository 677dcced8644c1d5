"""Monte Carlo harness tying the samplers to the analytic predictions.

Each replica owns a dedicated RNG stream (stream = offset + replica index),
so runs are reproducible and order-independent. Heavy spectra go through a
top-k Arnoldi path sized to the predicted outlier count, with a full-LAPACK
fallback whenever detection and prediction disagree; unresolvable replicas
are discarded and counted.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.stats

from . import elliptic_law, spike as spike_mod, weingarten
from .ensembles import (
    cycle_counts,
    make_rng,
    sample_elliptic,
    sample_haar_unitary,
    sample_permutation,
)
from .linalg import eigenvalues_lapack, top_eigenvalues
from .spike import FluctuationModel, JordanSpec, sample_limit_matrices


class ExperimentError(RuntimeError):
    pass


class MatchingError(ExperimentError):
    pass


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# detection and matching

def detect_outliers(eigs: np.ndarray, rho: float, eps: float) -> np.ndarray:
    """Eigenvalues beyond the detection radius 1 + |rho| + 2 eps."""
    eigs = np.asarray(eigs, dtype=complex)
    return eigs[np.abs(eigs) > 1.0 + abs(rho) + 2.0 * eps]


def match_outliers(outliers, predictions) -> list[np.ndarray]:
    """Assign each outlier to the nearest predicted location.

    Raises MatchingError when any group size disagrees with its predicted
    multiplicity or an outlier sits farther from its prediction than half the
    minimum distance between predictions.
    """
    outliers = np.asarray(outliers, dtype=complex)
    if not predictions:
        if len(outliers):
            raise MatchingError(f"{len(outliers)} outliers but no predictions")
        return []
    hats = np.array([h for h, _ in predictions], dtype=complex)
    counts = [c for _, c in predictions]
    if len(outliers) != sum(counts):
        raise MatchingError(f"detected {len(outliers)} outliers, predicted {sum(counts)}")
    if len(hats) > 1:
        sep = min(
            abs(hats[a] - hats[b]) for a in range(len(hats)) for b in range(a + 1, len(hats))
        )
        radius_cap = 0.5 * sep
    else:
        radius_cap = np.inf
    groups: list[list[complex]] = [[] for _ in hats]
    for lam in outliers:
        dists = np.abs(lam - hats)
        nearest = int(np.argmin(dists))
        if dists[nearest] > radius_cap:
            raise MatchingError(
                f"outlier {lam} is {dists[nearest]:.3f} from its nearest prediction "
                f"(cap {radius_cap:.3f})"
            )
        groups[nearest].append(lam)
    for g, c in zip(groups, counts):
        if len(g) != c:
            raise MatchingError(f"group sizes {[len(g) for g in groups]} != predicted {counts}")
    return [np.array(g, dtype=complex) for g in groups]


# ---------------------------------------------------------------------------
# fluctuation collection

@dataclass
class BlockSamples:
    spike_index: int
    block_index: int
    p: int
    beta: int
    theta: complex
    hat_theta: complex
    scaled: np.ndarray      # (n_kept, p*beta), N^{1/(2p)} (lambda - hat)
    deviations: np.ndarray  # (n_kept, p*beta), lambda - hat

    @property
    def powers(self) -> np.ndarray:
        """p-th powers N^{1/2} (lambda - hat)^p; root-labeling free."""
        return self.scaled ** self.p


@dataclass
class FluctuationSamples:
    spec: JordanSpec
    rho: float
    N: int
    replicas: int
    eps: float
    blocks: dict[tuple[int, int], BlockSamples]
    counts: np.ndarray       # detected outliers per replica (before matching)
    kept_replicas: list[int]
    discarded: int


def collect_fluctuations(
    spec: JordanSpec,
    rho: float,
    N: int,
    replicas: int,
    seed: int,
    eps: float | None = None,
    solver: str = "arnoldi",
    stream_offset: int = 0,
    discard_cap: float = 0.2,
) -> FluctuationSamples:
    """Sample X + P, detect and match outliers, and rescale per block.

    Within one spike the p-block attribution is modulus-ranked: the largest
    deviations go to the largest block size, since the scales N^{-1/(2p)}
    separate asymptotically. Mismatched replicas are re-verified with a full
    eigendecomposition before being discarded; the experiment aborts if more
    than discard_cap of the replicas are discarded.
    """
    if eps is None:
        eps = spike_mod.default_eps(spec, rho)
    predictions = spike_mod.predicted_outliers(spec, rho, eps)
    retained = spike_mod.retained_spike_ids(spec, rho, eps)
    k_total = sum(c for _, c in predictions)
    if k_total == 0:
        raise ExperimentError("spec predicts no outliers")
    core = spike_mod.core_matrix(spec)
    d = core.shape[0]

    per_block: dict[tuple[int, int], list[np.ndarray]] = {}
    per_block_dev: dict[tuple[int, int], list[np.ndarray]] = {}
    meta: dict[tuple[int, int], tuple[int, int, complex, complex]] = {}
    counts = np.zeros(replicas, dtype=int)
    kept: list[int] = []
    discarded = 0

    for r in range(replicas):
        rng = make_rng(seed, stream_offset + r)
        X = sample_elliptic(N, rho, rng)
        X /= np.sqrt(N)
        X[:d, :d] += core

        groups = None
        for attempt in ("fast", "full"):
            if attempt == "fast" and solver == "arnoldi":
                evs = top_eigenvalues(X, k_total)
            else:
                evs = eigenvalues_lapack(X).eigenvalues
            outs = detect_outliers(evs, rho, eps)
            counts[r] = len(outs)
            try:
                groups = match_outliers(outs, predictions)
                break
            except MatchingError:
                groups = None
                if solver != "arnoldi":
                    break
        if groups is None:
            discarded += 1
            continue
        kept.append(r)

        for g_idx, (spike_id, group) in enumerate(zip(retained, groups)):
            spk = spec.spikes[spike_id]
            theta = complex(spk.theta)
            hat = predictions[g_idx][0]
            dev = group - hat
            order = np.argsort(-np.abs(dev))
            dev = dev[order]
            offset = 0
            for j, (p, beta) in enumerate(spk.blocks):
                chunk = dev[offset:offset + p * beta]
                offset += p * beta
                key = (spike_id, j)
                meta[key] = (p, beta, theta, hat)
                per_block_dev.setdefault(key, []).append(chunk)
                per_block.setdefault(key, []).append(N ** (1.0 / (2.0 * p)) * chunk)

    if replicas and discarded > discard_cap * replicas:
        raise ExperimentError(
            f"{discarded}/{replicas} replicas discarded (cap {discard_cap:.0%})"
        )

    blocks = {}
    for key, rows in per_block.items():
        p, beta, theta, hat = meta[key]
        blocks[key] = BlockSamples(
            spike_index=key[0],
            block_index=key[1],
            p=p,
            beta=beta,
            theta=theta,
            hat_theta=hat,
            scaled=np.array(rows),
            deviations=np.array(per_block_dev[key]),
        )
    return FluctuationSamples(
        spec=spec,
        rho=rho,
        N=N,
        replicas=replicas,
        eps=eps,
        blocks=blocks,
        counts=counts,
        kept_replicas=kept,
        discarded=discarded,
    )


# ---------------------------------------------------------------------------
# two-sample energy test

@dataclass
class EnergyTestResult:
    statistic: float
    p_value: float
    n_x: int
    n_y: int
    n_permutations: int


def energy_distance_test(x, y, n_permutations: int = 200, rng=None) -> EnergyTestResult:
    """Two-sample energy test for complex samples, permutation-calibrated."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if len(x) == 0 or len(y) == 0:
        raise ExperimentError("both samples must be non-empty")
    if rng is None:
        rng = make_rng(0, 0)
    pooled = np.concatenate([x, y])
    tot = len(pooled)
    D = np.empty((tot, tot))
    step = 1024
    for i in range(0, tot, step):
        D[i:i + step] = np.abs(pooled[i:i + step, None] - pooled[None, :])
    rowsum = D.sum(axis=1)
    total = rowsum.sum()
    n1, n2 = len(x), len(y)

    def stat(g: np.ndarray) -> float:
        v = D @ g
        s11 = g @ v
        gr = g @ rowsum
        cross = gr - s11
        s22 = total - 2.0 * gr + s11
        return 2.0 * cross / (n1 * n2) - s11 / (n1 * n1) - s22 / (n2 * n2)

    g0 = np.zeros(tot)
    g0[:n1] = 1.0
    observed = stat(g0)
    exceed = 0
    for _ in range(n_permutations):
        g = np.zeros(tot)
        g[rng.permutation(tot)[:n1]] = 1.0
        if stat(g) >= observed:
            exceed += 1
    p = (1.0 + exceed) / (n_permutations + 1.0)
    return EnergyTestResult(float(observed), float(p), n1, n2, n_permutations)


def fluctuation_test(
    block: BlockSamples,
    model: FluctuationModel,
    rng,
    limit_draws: int = 2000,
    n_permutations: int = 200,
) -> EnergyTestResult:
    """Empirical p-th powers of the rescaled outliers against eigenvalues of
    drawn limit matrices; comparing p-th powers sidesteps the root labeling."""
    pos = model.spike_ids.index(block.spike_index)
    limit_eigs = []
    for _ in range(limit_draws):
        mats = sample_limit_matrices(model, rng)
        M = mats[(pos, block.block_index)]
        limit_eigs.extend(np.linalg.eigvals(M))
    return energy_distance_test(
        block.powers.ravel(), np.array(limit_eigs), n_permutations=n_permutations, rng=rng
    )


# ---------------------------------------------------------------------------
# polygon geometry

def polygon_gaps(points: np.ndarray) -> np.ndarray:
    """Consecutive angular gaps (with wraparound) around the centroid."""
    points = np.asarray(points, dtype=complex)
    centered = points - points.mean()
    args = np.sort(np.angle(centered))
    return np.diff(np.concatenate([args, [args[0] + 2.0 * np.pi]]))


def max_gap_deviation(points: np.ndarray, p: int) -> float:
    """Largest relative deviation of the angular gaps from 2 pi / p."""
    target = 2.0 * np.pi / p
    return float(np.abs(polygon_gaps(points) - target).max() / target)


def spacing_pvalue(points: np.ndarray, p: int, rng, n_mc: int = 2000) -> float:
    """Parametric bootstrap for 'equally spaced modulo noise'.

    Vertex angles are modeled as a regular p-gon plus wrapped Gaussian noise
    whose scale is estimated from the dispersion of p*angle mod 2 pi; the
    p-value is the chance of a gap deviation at least as large as observed.
    """
    points = np.asarray(points, dtype=complex)
    if len(points) != p:
        raise ExperimentError(f"need exactly p={p} points, got {len(points)}")
    psi = p * np.angle(points - points.mean())
    resultant = abs(np.exp(1j * psi).mean())
    resultant = min(max(resultant, 1e-12), 1.0 - 1e-12)
    sigma = np.sqrt(-2.0 * np.log(resultant)) / p
    observed = max_gap_deviation(points, p)
    base = 2.0 * np.pi * np.arange(p) / p
    hits = 0
    for _ in range(n_mc):
        angles = base + sigma * rng.standard_normal(p)
        sim = np.exp(1j * angles)
        if max_gap_deviation(sim, p) >= observed:
            hits += 1
    return (1.0 + hits) / (n_mc + 1.0)


# ---------------------------------------------------------------------------
# rate regression

@dataclass
class RateFit:
    slope: float
    stderr: float
    log_n: np.ndarray
    log_median: np.ndarray

    @property
    def medians(self) -> np.ndarray:
        return np.exp(self.log_median)


def rate_regression(
    spec: JordanSpec,
    rho: float,
    Ns,
    replicas: int,
    seed: int,
    eps: float | None = None,
    solver: str = "arnoldi",
) -> dict[tuple[int, int], RateFit]:
    """Regress log(median |lambda - hat|) on log N, per block.

    The expected slope is -1/(2p). Medians rather than means keep matching
    outliers from contaminating the fit.
    """
    Ns = list(Ns)
    if len(Ns) < 3:
        raise ExperimentError("need at least 3 distinct N values")
    med: dict[tuple[int, int], list[float]] = {}
    for n_idx, N in enumerate(Ns):
        samples = collect_fluctuations(
            spec, rho, N, replicas, seed,
            eps=eps, solver=solver, stream_offset=n_idx * replicas,
        )
        for key, block in samples.blocks.items():
            med.setdefault(key, []).append(float(np.median(np.abs(block.deviations))))
    fits = {}
    logn = np.log(np.asarray(Ns, dtype=float))
    for key, medians in med.items():
        logm = np.log(np.asarray(medians))
        res = scipy.stats.linregress(logn, logm)
        fits[key] = RateFit(
            slope=float(res.slope), stderr=float(res.stderr),
            log_n=logn, log_median=logm,
        )
    return fits


# ---------------------------------------------------------------------------
# moment bookkeeping

@dataclass
class ComplexMoments:
    n: int
    mean: complex
    variance: float          # E|x - mean|^2
    variance_se: float
    pseudo: complex          # E (x - mean)^2
    pseudo_se: float


def complex_moments(samples) -> ComplexMoments:
    x = np.asarray(samples, dtype=complex).ravel()
    n = len(x)
    mu = x.mean()
    centered = x - mu
    sq = np.abs(centered) ** 2
    pseudo_terms = centered ** 2
    return ComplexMoments(
        n=n,
        mean=complex(mu),
        variance=float(sq.mean()),
        variance_se=float(sq.std() / np.sqrt(n)),
        pseudo=complex(pseudo_terms.mean()),
        pseudo_se=float(np.abs(pseudo_terms - pseudo_terms.mean()).std() / np.sqrt(n))
        if n > 1 else 0.0,
    )


def cross_moment(u, v) -> tuple[complex, float]:
    """Covariance E[(u - Eu) conj(v - Ev)] with its Monte Carlo standard error."""
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    terms = (u - u.mean()) * np.conj(v - v.mean())
    se = float(np.abs(terms - terms.mean()).std() / np.sqrt(len(terms)))
    return complex(terms.mean()), se


def cross_pseudo_moment(u, v) -> tuple[complex, float]:
    """Relation E[(u - Eu)(v - Ev)] with its Monte Carlo standard error."""
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    terms = (u - u.mean()) * (v - v.mean())
    se = float(np.abs(terms - terms.mean()).std() / np.sqrt(len(terms)))
    return complex(terms.mean()), se


# ---------------------------------------------------------------------------
# entry CLT experiments

@dataclass
class ResolventCLTSamples:
    rho: float
    z: complex
    N: int
    entry: tuple[int, int]
    G_ij: np.ndarray          # sqrt(N) R_ij(z)
    G_ji: np.ndarray          # sqrt(N) R_ji(z)
    traces: np.ndarray | None  # Tr R(z) when collected

    @property
    def predicted_variance(self) -> float:
        return float(elliptic_law.phi(self.z, self.z, self.rho).real)

    @property
    def predicted_transposed_pseudo(self) -> complex:
        theta = elliptic_law.theta_of(self.z, self.rho)
        return elliptic_law.phi_same(theta, theta, self.rho)


def resolvent_entry_clt(
    rho: float,
    z: complex,
    N: int,
    replicas: int,
    seed: int,
    entry: tuple[int, int] = (0, 1),
    collect_trace: bool = False,
    stream_offset: int = 0,
) -> ResolventCLTSamples:
    """Fluctuations of off-diagonal resolvent entries of the elliptic model.

    Per replica, solve (zI - X) column systems for both (i, j) and (j, i);
    optionally accumulate Tr (zI - X)^{-1} for independence checks.
    """
    i, j = entry
    if i == j:
        raise DomainError("use an off-diagonal entry")
    if abs(z) <= 1.0 + abs(rho) + 0.05:
        raise DomainError(f"z={z} is too close to the bulk")
    G_ij = np.empty(replicas, dtype=complex)
    G_ji = np.empty(replicas, dtype=complex)
    traces = np.empty(replicas, dtype=complex) if collect_trace else None
    eye = np.eye(N, dtype=complex)
    root_n = np.sqrt(N)
    for r in range(replicas):
        rng = make_rng(seed, stream_offset + r)
        X = sample_elliptic(N, rho, rng)
        X /= root_n
        lu, piv = scipy.linalg.lu_factor(z * eye - X)
        e = np.zeros(N, dtype=complex)
        e[j] = 1.0
        col_j = scipy.linalg.lu_solve((lu, piv), e)
        e[j] = 0.0
        e[i] = 1.0
        col_i = scipy.linalg.lu_solve((lu, piv), e)
        G_ij[r] = root_n * col_j[i]
        G_ji[r] = root_n * col_i[j]
        if collect_trace:
            inv = scipy.linalg.lu_solve((lu, piv), eye)
            traces[r] = np.trace(inv)
    return ResolventCLTSamples(
        rho=rho, z=complex(z), N=N, entry=entry, G_ij=G_ij, G_ji=G_ji, traces=traces
    )


@dataclass
class ConjugatedCLTSamples:
    N: int
    entry: tuple[int, int]
    tau: float                # lim (1/N) Tr B B^*
    beta: float               # lim (1/N) Tr M M^* for M = sqrt(N) E_{ji}
    G: np.ndarray


def conjugated_clt(
    B: np.ndarray,
    N: int,
    replicas: int,
    seed: int,
    entry: tuple[int, int] = (0, 1),
    stream_offset: int = 0,
) -> ConjugatedCLTSamples:
    """Tr(U B U^* M) for fixed traceless B and M = sqrt(N) x elementary matrix,
    i.e. sqrt(N) (U B U^*)_{ij}."""
    B = np.asarray(B, dtype=complex)
    i, j = entry
    if abs(np.trace(B)) > 1e-9 * max(1.0, np.abs(B).max()) * N:
        raise DomainError("B must be traceless")
    G = np.empty(replicas, dtype=complex)
    root_n = np.sqrt(N)
    for r in range(replicas):
        rng = make_rng(seed, stream_offset + r)
        U = sample_haar_unitary(N, rng)
        G[r] = root_n * (U[i, :] @ B @ U[j, :].conj())
    tau = float(np.trace(B @ B.conj().T).real / N)
    return ConjugatedCLTSamples(N=N, entry=entry, tau=tau, beta=1.0, G=G)


@dataclass
class IndependenceResult:
    covariance: complex
    covariance_se: float
    pseudo: complex
    pseudo_se: float
    degenerate: bool


def independence_experiment(
    rho: float, z: complex, N: int, replicas: int, seed: int,
    entry: tuple[int, int] = (0, 1),
) -> IndependenceResult:
    """Correlation between a traceless-projection observable sqrt(N) R_ij(z)
    and the centered trace of the resolvent; both limits exist and the
    asymptotic correlation is zero."""
    res = resolvent_entry_clt(rho, z, N, replicas, seed, entry=entry, collect_trace=True)
    return independence_check(res.G_ij, res.traces)


def independence_check(G, T) -> IndependenceResult:
    """Empirical covariance between Tr(A M) samples and centered traces of A;
    degenerate when the traces do not fluctuate."""
    T = np.asarray(T, dtype=complex).ravel()
    spread = float(np.abs(T - T.mean()).std())
    if spread < 1e-12 * (1.0 + abs(T.mean())):
        return IndependenceResult(0.0, 0.0, 0.0, 0.0, degenerate=True)
    cov, cov_se = cross_moment(G, T)
    pse, pse_se = cross_pseudo_moment(G, T)
    return IndependenceResult(cov, cov_se, pse, pse_se, degenerate=False)


# ---------------------------------------------------------------------------
# permutation-matrix experiments

def compound_poisson_pmf(k: int, size: int) -> np.ndarray:
    """pmf of sum_{d | k} d Z_d with Z_d ~ Poisson(1/d), on 0..size-1."""
    pmf = np.zeros(size)
    pmf[0] = 1.0
    for d in range(1, k + 1):
        if k % d:
            continue
        zd = scipy.stats.poisson.pmf(np.arange(size // d + 1), 1.0 / d)
        lifted = np.zeros(size)
        lifted[::d] = zd[: len(lifted[::d])]
        pmf = np.convolve(pmf, lifted)[:size]
    return pmf


def chisquare_vs_pmf(samples, pmf: np.ndarray, min_expected: float = 5.0):
    """Chi-square goodness of fit of integer samples against a fully
    specified pmf, merging the tail until expected counts clear min_expected."""
    samples = np.asarray(samples, dtype=int)
    n = len(samples)
    expected_full = pmf * n
    # merge the tail into the last healthy bin
    upper = len(pmf)
    while upper > 1 and expected_full[:upper].sum() > 0 and expected_full[upper - 1] < min_expected:
        upper -= 1
    observed = np.array(
        [(samples == v).sum() for v in range(upper)] + [(samples >= upper).sum()],
        dtype=float,
    )
    expected = np.concatenate([expected_full[:upper], [n - expected_full[:upper].sum()]])
    keep = expected > 0
    observed, expected = observed[keep], expected[keep]
    expected *= observed.sum() / expected.sum()
    stat, p = scipy.stats.chisquare(observed, expected)
    return float(stat), float(p), int(len(observed) - 1)


@dataclass
class PermutationCLTSamples:
    N: int
    ks: tuple[int, ...]
    traces: dict[int, np.ndarray]       # Tr S^k per replica (integers)
    entries: dict[int, np.ndarray]      # sqrt(N) (U S^k U^*)_{ij} per replica


def permutation_clt_experiment(
    N: int,
    ks,
    replicas: int,
    seed: int,
    entry: tuple[int, int] | None = (0, 1),
    stream_offset: int = 0,
) -> PermutationCLTSamples:
    """Conjugated permutation matrices: integer traces Tr S^k (compound
    Poisson limit) and, when entry is given, the Gaussian entry process."""
    ks = tuple(ks)
    traces = {k: np.empty(replicas, dtype=int) for k in ks}
    entries = {k: np.empty(replicas, dtype=complex) for k in ks} if entry else {}
    root_n = np.sqrt(N)
    for r in range(replicas):
        rng = make_rng(seed, stream_offset + r)
        sigma = sample_permutation(N, rng)
        counts = cycle_counts(sigma)
        for k in ks:
            traces[k][r] = sum(d * t for d, t in counts.items() if k % d == 0)
        if entry:
            i, j = entry
            U = sample_haar_unitary(N, rng)
            row_i = U[i, :]
            col_j = U[j, :].conj()
            images = np.asarray(sigma.images)
            for k in ks:
                # w = S^k col_j via k scatter steps: (S w)[sigma(t)] = w[t]
                w = col_j
                for _ in range(k):
                    nxt = np.empty_like(w)
                    nxt[images] = w
                    w = nxt
                entries[k][r] = root_n * (row_i @ w)
    return PermutationCLTSamples(N=N, ks=ks, traces=traces, entries=entries)


# ---------------------------------------------------------------------------
# bi-invariant ensemble

@dataclass
class BiinvariantSamples:
    N: int
    tau: float
    G: np.ndarray
    exact_variance: float     # finite-N Weingarten value (D = I)


def biinvariant_experiment(
    N: int,
    replicas: int,
    seed: int,
    D: np.ndarray | None = None,
    entry: tuple[int, int] = (0, 1),
    stream_offset: int = 0,
) -> BiinvariantSamples:
    """A = U diag(D) V^* with independent Haar factors (A = U when D is None);
    invariant under left and right unitary multiplication by construction."""
    i, j = entry
    root_n = np.sqrt(N)
    diag = None if D is None else np.asarray(D, dtype=float)
    if diag is not None and (diag.ndim != 1 or len(diag) != N or (diag <= 0).any()):
        raise DomainError("D must be a positive diagonal of length N")
    G = np.empty(replicas, dtype=complex)
    for r in range(replicas):
        rng = make_rng(seed, stream_offset + r)
        U = sample_haar_unitary(N, rng)
        if diag is None:
            A = U
        else:
            V = sample_haar_unitary(N, rng)
            A = (U * diag) @ V.conj().T
        G[r] = root_n * A[i, j]
    tau = 1.0 if diag is None else float((diag ** 2).sum() / N)
    # E Tr(UM) Tr(U^* M^*) = Wg(id_1) Tr(M M^*) with M = sqrt(N) E_{ji}
    M = np.zeros((N, N), dtype=complex)
    M[j, i] = root_n
    exact = weingarten.haar_trace_pair_moment(M, M.conj().T, N).real if diag is None else np.nan
    return BiinvariantSamples(N=N, tau=tau, G=G, exact_variance=float(exact))


# ---------------------------------------------------------------------------
# spectral radius

def spectral_radius_experiment(
    rho: float, N: int, replicas: int, seed: int, stream_offset: int = 0
) -> np.ndarray:
    """max |eigenvalue| of the unperturbed normalized elliptic matrix."""
    radii = np.empty(replicas)
    for r in range(replicas):
        rng = make_rng(seed, stream_offset + r)
        X = sample_elliptic(N, rho, rng)
        X /= np.sqrt(N)
        radii[r] = np.abs(eigenvalues_lapack(X).eigenvalues).max()
    return radii


# ---------------------------------------------------------------------------
# report plumbing

class Stopwatch:
    def __init__(self):
        self.marks: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def lap(self, label: str) -> None:
        now = time.perf_counter()
        self.marks[label] = round(now - self._t0, 6)
        self._t0 = now


@dataclass
class ExperimentReport:
    command: str
    config: dict
    statistics: dict
    samples: list = field(default_factory=list)  # rows (replica, N, spike, block, re, im)
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "statistics": self.statistics,
            "timestamps": self.timings,  # the only run-dependent block
        }

    def json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)

    def csv(self) -> str:
        lines = ["replica,N,spike_index,block_index,re,im"]
        for replica, N, spike_idx, block_idx, re, im in self.samples:
            lines.append(f"{replica},{N},{spike_idx},{block_idx},{re!r},{im!r}")
        return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")
