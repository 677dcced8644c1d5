"""The low-rank perturbation and its predicted consequences.

A perturbation is specified by its Jordan data: eigenvalues theta_i, for each
a strictly decreasing list of block sizes p_{i,j} with multiplicities
beta_{i,j}, an invertible conjugator Q, and an optional residual matrix for
the non-outlier part. From that this module builds the embedded N x N
perturbation, predicts which eigenvalues escape the bulk and where, assembles
the limiting Gaussian vector of resolvent entries (covariances from the
elliptic kernels), and samples the limit matrices whose eigenvalue p-th roots
are the limiting rescaled outlier clouds.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import elliptic_law
from .linalg import DimensionError, as_square, cholesky_psd, eigenvalues

COND_GUARD = 1e12  # a.s.-invertible corner block; redraw on numerical freak draws


class SpecError(ValueError):
    pass


class AnnulusError(SpecError):
    """An eigenvalue of P falls in the forbidden annulus between the
    detection threshold and the outlier condition."""


class CovarianceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Spike:
    theta: complex
    blocks: tuple[tuple[int, int], ...]  # (p, beta), p strictly decreasing

    def __post_init__(self):
        if not self.blocks:
            raise SpecError("spike needs at least one (p, beta) block")
        ps = [p for p, _ in self.blocks]
        if any(p < 1 for p in ps) or any(b < 1 for _, b in self.blocks):
            raise SpecError("block sizes and multiplicities must be >= 1")
        if list(ps) != sorted(set(ps), reverse=True):
            raise SpecError(f"block sizes must be strictly decreasing, got {ps}")

    @property
    def dim(self) -> int:
        return sum(p * b for p, b in self.blocks)

    @property
    def count(self) -> int:
        """Predicted number of outliers attached to this spike."""
        return self.dim


@dataclass(frozen=True)
class JordanSpec:
    spikes: tuple[Spike, ...]
    Q: np.ndarray | None = None          # core-dim conjugator; None means identity
    residual: np.ndarray | None = None   # the non-outlier part, eigenvalues below threshold
    rank_bound: int | None = None

    def __post_init__(self):
        if not self.spikes:
            raise SpecError("need at least one spike")
        thetas = [s.theta for s in self.spikes]
        if len(set(thetas)) != len(thetas):
            raise SpecError("spike eigenvalues must be distinct")
        if self.residual is not None:
            object.__setattr__(self, "residual", as_square(self.residual))
        if self.Q is not None:
            Q = as_square(self.Q)
            if Q.shape[0] != self.core_dim:
                raise SpecError(
                    f"Q must be {self.core_dim}x{self.core_dim} (the Jordan core), got {Q.shape}"
                )
            _check_invertible(Q)
            object.__setattr__(self, "Q", Q)
        if self.rank_bound is not None and 2 * self.rank_bound < self.core_dim:
            raise SpecError(
                f"core dimension {self.core_dim} exceeds 2r = {2 * self.rank_bound}"
            )

    @property
    def jordan_dim(self) -> int:
        return sum(s.dim for s in self.spikes)

    @property
    def residual_dim(self) -> int:
        return 0 if self.residual is None else self.residual.shape[0]

    @property
    def core_dim(self) -> int:
        return self.jordan_dim + self.residual_dim

    @property
    def r(self) -> int:
        """Rank bound; the embedded perturbation lives in a 2r x 2r corner."""
        return self.rank_bound if self.rank_bound is not None else self.core_dim


def _check_invertible(Q: np.ndarray, floor: float = 1e-10) -> None:
    import scipy.linalg

    lu, _ = scipy.linalg.lu_factor(Q)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= floor * max(np.abs(Q).max(), 1.0):
        raise SpecError(f"conjugator is numerically singular (pivot {pivots.min():.2e})")


def jordan_block(p: int, theta: complex) -> np.ndarray:
    R = np.eye(p, k=1, dtype=complex)
    R[np.arange(p), np.arange(p)] = theta
    return R


@dataclass(frozen=True)
class SpikeLayout:
    """Column bookkeeping for one spike inside the Jordan core."""

    theta: complex
    first_cols: tuple[int, ...]   # first column of each Jordan block (the set I)
    last_cols: tuple[int, ...]    # last column of each Jordan block (the set J)
    block_sizes: tuple[int, ...]  # p for each block, in layout order
    sizes: tuple[int, ...]        # distinct p_{i,j}, decreasing
    multiplicities: tuple[int, ...]


def _layout(spec: JordanSpec) -> list[SpikeLayout]:
    layouts = []
    offset = 0
    for spike in spec.spikes:
        first, last, per_block = [], [], []
        for p, beta in spike.blocks:
            for _ in range(beta):
                first.append(offset)
                last.append(offset + p - 1)
                per_block.append(p)
                offset += p
        layouts.append(
            SpikeLayout(
                theta=complex(spike.theta),
                first_cols=tuple(first),
                last_cols=tuple(last),
                block_sizes=tuple(per_block),
                sizes=tuple(p for p, _ in spike.blocks),
                multiplicities=tuple(b for _, b in spike.blocks),
            )
        )
    return layouts


def build_jordan(spec: JordanSpec) -> np.ndarray:
    """The Jordan core J = (direct sum of R_p(theta) blocks) + residual."""
    d = spec.core_dim
    J = np.zeros((d, d), dtype=complex)
    offset = 0
    for spike in spec.spikes:
        for p, beta in spike.blocks:
            for _ in range(beta):
                J[offset:offset + p, offset:offset + p] = jordan_block(p, spike.theta)
                offset += p
    if spec.residual is not None:
        k = spec.residual.shape[0]
        J[offset:offset + k, offset:offset + k] = spec.residual
    return J


def core_matrix(spec: JordanSpec) -> np.ndarray:
    """P restricted to the core: Q J Q^{-1}."""
    J = build_jordan(spec)
    if spec.Q is None:
        return J
    return spec.Q @ J @ np.linalg.inv(spec.Q)


def build_perturbation(spec: JordanSpec, N: int) -> np.ndarray:
    """The N x N perturbation: Q J Q^{-1} embedded in the top-left corner."""
    if N < 2 * spec.r:
        raise DimensionError(f"need N >= 2r = {2 * spec.r}, got {N}")
    P = np.zeros((N, N), dtype=complex)
    d = spec.core_dim
    P[:d, :d] = core_matrix(spec)
    return P


def default_eps(spec: JordanSpec, rho: float) -> float:
    """Slack-by-construction epsilon: min over retained spikes of
    (|hat_theta| - 1 - |rho|)/4."""
    gaps = []
    for spike in spec.spikes:
        theta = complex(spike.theta)
        if abs(theta) <= 1.0:
            continue
        hat = theta + rho / theta
        gap = abs(hat) - 1.0 - abs(rho)
        if gap > 0:
            gaps.append(gap / 4.0)
    if not gaps:
        raise SpecError("no spike produces an outlier; cannot derive eps")
    return min(gaps)


def predicted_outliers(spec: JordanSpec, rho: float, eps: float) -> list[tuple[complex, int]]:
    """Predicted outlier locations hat_theta = theta + rho/theta with their
    multiplicities sum_j p_{i,j} beta_{i,j}.

    A spike qualifies when |theta| > 1 and |hat_theta| > 1 + |rho| + 3 eps.
    The whole spec is rejected if any eigenvalue of P (spikes or residual)
    lands in the forbidden annulus 1+|rho|+eps < |hat| < 1+|rho|+3 eps
    while |theta| > 1.
    """
    if eps <= 0:
        raise SpecError("eps must be positive")
    lo = 1.0 + abs(rho) + eps
    hi = 1.0 + abs(rho) + 3.0 * eps

    lam_sources: list[complex] = [complex(s.theta) for s in spec.spikes]
    if spec.residual is not None:
        lam_sources.extend(eigenvalues(spec.residual).eigenvalues.tolist())
    for lam in lam_sources:
        if abs(lam) > 1.0:
            hat = lam + rho / lam
            if lo < abs(hat) < hi:
                raise AnnulusError(
                    f"eigenvalue theta={lam} maps into the forbidden annulus "
                    f"({lo:g}, {hi:g}) at |hat_theta|={abs(hat):g}"
                )

    out = []
    for spike in spec.spikes:
        theta = complex(spike.theta)
        if abs(theta) <= 1.0:
            continue
        hat = theta + rho / theta
        if abs(hat) > hi:
            out.append((hat, spike.count))
    return out


def retained_spike_ids(spec: JordanSpec, rho: float, eps: float) -> list[int]:
    """Indices of spikes that qualify as outlier sources at this eps."""
    hi = 1.0 + abs(rho) + 3.0 * eps
    out = []
    for idx, spike in enumerate(spec.spikes):
        theta = complex(spike.theta)
        if abs(theta) > 1.0 and abs(theta + rho / theta) > hi:
            out.append(idx)
    return out


@dataclass
class FluctuationModel:
    """The limiting Gaussian vector of corner resolvent entries.

    Coordinates are (spike_index, k, l) for k in J(theta_i), l in I(theta_i);
    C holds E[m conj(m')] - assembled from the mixed kernel and the Q Gram
    factors - and R holds E[m m'] from the same-orientation kernel.
    """

    rho: float
    layouts: list[SpikeLayout]
    thetas: list[complex]
    hat_thetas: list[complex]
    spike_ids: list[int]   # positions in the originating JordanSpec
    coords: list[tuple[int, int, int]]
    C: np.ndarray
    R: np.ndarray
    _chol: np.ndarray | None = field(default=None, repr=False)
    _index: dict | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def coord_index(self) -> dict[tuple[int, int, int], int]:
        if self._index is None:
            self._index = {c: a for a, c in enumerate(self.coords)}
        return self._index

    def composite_covariance(self) -> np.ndarray:
        """Real 2n x 2n covariance of (Re m, Im m); PSD iff (C, R) is a valid
        complex covariance pair."""
        C, R = self.C, self.R
        vxx = 0.5 * (C.real + R.real)
        vyy = 0.5 * (C.real - R.real)
        vxy = 0.5 * (R.imag - C.imag)
        vyx = 0.5 * (C.imag + R.imag)
        return np.block([[vxx, vxy], [vyx, vyy]])

    def draw(self, rng: np.random.Generator, count: int = 1) -> np.ndarray:
        """Draw `count` samples of the complex Gaussian vector, shape (count, dim)."""
        from .ensembles import standard_normal

        if self._chol is None:
            sigma = self.composite_covariance()
            floor = np.linalg.eigvalsh(0.5 * (sigma + sigma.T)).min()
            if floor < -1e-10 * max(1.0, np.abs(sigma).max()):
                raise CovarianceError(f"composite covariance indefinite (min eig {floor:.2e})")
            self._chol = cholesky_psd(sigma, jitter=0.0)
        g = standard_normal(rng, (count, 2 * self.dim))
        xy = g @ self._chol.T
        return xy[:, : self.dim] + 1j * xy[:, self.dim:]


def limit_gaussian_covariance(spec: JordanSpec, rho: float) -> FluctuationModel:
    """Assemble the joint covariance of the limiting Gaussian vector:
    E[m m'] = phi_same(theta_i, theta_i') delta_{k,l'} delta_{k',l} and
    E[m conj(m')] = phi(hat_i, hat_i') [Q^{-1}Q^{-*}]_{kk'} [Q^*Q]_{l'l}."""
    layouts = _layout(spec)
    retained = []
    for idx, (spike, lay) in enumerate(zip(spec.spikes, layouts)):
        theta = complex(spike.theta)
        if abs(theta) <= 1.0:
            continue
        hat = theta + rho / theta
        if abs(hat) <= 1.0 + abs(rho):
            continue
        retained.append((idx, lay, hat))
    if not retained:
        raise SpecError("no spike survives the outlier condition")

    d = spec.core_dim
    if spec.Q is None:
        gram_inv = np.eye(d)   # Q^{-1} (Q^{-1})^*
        gram = np.eye(d)       # Q^* Q
    else:
        Qinv = np.linalg.inv(spec.Q)
        gram_inv = Qinv @ Qinv.conj().T
        gram = spec.Q.conj().T @ spec.Q

    coords = []
    for pos, (idx, lay, hat) in enumerate(retained):
        for k in lay.last_cols:
            for l in lay.first_cols:
                coords.append((pos, k, l))
    n = len(coords)
    C = np.zeros((n, n), dtype=complex)
    R = np.zeros((n, n), dtype=complex)
    thetas = {pos: complex(spec.spikes[idx].theta) for pos, (idx, _, _) in enumerate(retained)}
    hats = {pos: hat for pos, (_, _, hat) in enumerate(retained)}
    for a, (i, k, l) in enumerate(coords):
        for b, (ip, kp, lp) in enumerate(coords):
            C[a, b] = (
                elliptic_law.phi(hats[i], hats[ip], rho)
                * gram_inv[k, kp]
                * gram[lp, l]
            )
            if k == lp and kp == l:
                R[a, b] = elliptic_law.phi_same(thetas[i], thetas[ip], rho)
    return FluctuationModel(
        rho=rho,
        layouts=[lay for _, lay, _ in retained],
        thetas=[thetas[pos] for pos in range(len(retained))],
        hat_thetas=[hats[pos] for pos in range(len(retained))],
        spike_ids=[idx for idx, _, _ in retained],
        coords=coords,
        C=C,
        R=R,
    )


def _spike_matrix(model: FluctuationModel, draw: np.ndarray, pos: int) -> np.ndarray:
    """Arrange one draw into the matrix [m_{k,l}] for spike `pos`."""
    lay = model.layouts[pos]
    index = model.coord_index()
    rows, cols = lay.last_cols, lay.first_cols
    M = np.empty((len(rows), len(cols)), dtype=complex)
    for a, k in enumerate(rows):
        for b, l in enumerate(cols):
            M[a, b] = draw[index[(pos, k, l)]]
    return M


def block_scale(theta: complex, rho: float, p: int) -> complex:
    """Leading coefficient of the outlier equation for a size-p block.

    The p-th powers of the rescaled outliers converge to
    (theta^2 - rho)^p / theta^(2p-2) times the corner Gaussian data: expanding
    det(I - m(lambda) J - N^(-1/2) G J) = 0 around m(hat) = 1/theta turns
    each unit of m(lambda) - 1/theta into -1/m'(hat) = theta^2 - rho units of
    lambda - hat, and the block contributes p of them against theta^(2p-2)
    from the superdiagonal chain. Equals theta^2 (1 - rho/theta^2)^p; reduces
    to theta^2 for every p when rho = 0, and at rho = 1 reproduces the
    classical Hermitian outlier variance (theta^2-1)/theta^2 via
    |block_scale|^2 Phi_1.
    """
    theta = complex(theta)
    return (theta * theta - rho) ** p / theta ** (2 * p - 2)


def sample_limit_matrices(
    model: FluctuationModel,
    rng: np.random.Generator,
    max_retries: int = 8,
    prefactor: str = "slope",
) -> dict[tuple[int, int], np.ndarray]:
    """One draw of every corner limit matrix M^theta_j.

    For each spike and each distinct block size (indexed j = 0, 1, ... from
    the largest), M^theta_j = scale * (M_IV - M_III M_I^{-1} M_II) where the
    sub-blocks slice the Gaussian matrix by blocks of size p_j (rows from the
    last-column set, columns from the first-column set) against the strictly
    larger blocks. M_I is a.s. invertible; astronomically ill-conditioned
    draws are rejected and redrawn.

    prefactor="slope" uses block_scale (the implicit-function coefficient,
    which Monte Carlo confirms); prefactor="plain-theta" uses the bare theta
    normalization and is kept for comparison runs.
    """
    if prefactor not in ("slope", "plain-theta"):
        raise ValueError(f"unknown prefactor {prefactor!r}")
    for _ in range(max_retries):
        draw = model.draw(rng, count=1)[0]
        result: dict[tuple[int, int], np.ndarray] = {}
        ok = True
        for pos, lay in enumerate(model.layouts):
            theta = model.thetas[pos]
            full = _spike_matrix(model, draw, pos)
            sizes = lay.sizes
            for j, p in enumerate(sizes):
                scale = (
                    block_scale(theta, model.rho, p) if prefactor == "slope" else theta
                )
                same = [t for t, bp in enumerate(lay.block_sizes) if bp == p]
                bigger = [t for t, bp in enumerate(lay.block_sizes) if bp > p]
                M_IV = full[np.ix_(same, same)]
                if not bigger:
                    result[(pos, j)] = scale * M_IV
                    continue
                M_I = full[np.ix_(bigger, bigger)]
                M_II = full[np.ix_(bigger, same)]
                M_III = full[np.ix_(same, bigger)]
                if np.linalg.cond(M_I) > COND_GUARD:
                    ok = False
                    break
                result[(pos, j)] = scale * (M_IV - M_III @ np.linalg.solve(M_I, M_II))
            if not ok:
                break
        if ok:
            return result
    raise CovarianceError(f"corner block stayed ill-conditioned after {max_retries} draws")


def scalar_fluctuation_variance(theta: complex, rho: float) -> float:
    """Limit of Var sqrt(N)(outlier - hat) for a p=1, beta=1 spike with
    unitary conjugator: |block_scale|^2 Phi_rho(hat, hat)."""
    theta = complex(theta)
    hat = theta + rho / theta
    return float(
        abs(block_scale(theta, rho, 1)) ** 2 * elliptic_law.phi(hat, hat, rho).real
    )


def predicted_scalar_variances(model: FluctuationModel) -> dict[tuple[int, int], float]:
    """Limiting Var of the rescaled outlier for every spike consisting of a
    single 1x1 block (general conjugator: uses the model's own covariance)."""
    out = {}
    for pos, lay in enumerate(model.layouts):
        if lay.sizes != (1,) or lay.multiplicities != (1,):
            continue
        a = model.coord_index()[(pos, lay.last_cols[0], lay.first_cols[0])]
        scale = abs(block_scale(model.thetas[pos], model.rho, 1)) ** 2
        out[(model.spike_ids[pos], 0)] = float(scale * model.C[a, a].real)
    return out


def sample_lambda_infty(M_theta: np.ndarray, p: int) -> np.ndarray:
    """All p-th roots of the eigenvalues of a drawn limit matrix.

    Each nonzero eigenvalue contributes a regular p-gon of roots; a zero
    eigenvalue (measure zero) is flagged with a warning.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    M_theta = as_square(M_theta)
    eigs = eigenvalues(M_theta).eigenvalues
    roots = []
    for lam in eigs:
        if lam == 0:
            warnings.warn("zero eigenvalue in limit matrix (measure-zero event)", stacklevel=2)
            roots.extend([0.0 + 0j] * p)
            continue
        base = abs(lam) ** (1.0 / p)
        ang = np.angle(lam) / p
        roots.extend(base * np.exp(1j * (ang + 2.0 * np.pi * k / p)) for k in range(p))
    return np.array(roots, dtype=complex)


def random_conjugator(dim: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Q = I + gamma * (standard complex Gaussian matrix), gamma <= 0.5,
    rejected while numerically singular (for correlated-outlier experiments)."""
    from .ensembles import complex_normal

    if not 0 <= gamma <= 0.5:
        raise SpecError("gamma must lie in [0, 0.5]")
    for _ in range(16):
        Q = np.eye(dim, dtype=complex) + gamma * complex_normal(rng, (dim, dim))
        try:
            _check_invertible(Q)
            return Q
        except SpecError:
            continue
    raise SpecError("failed to draw a well-conditioned conjugator")


# ---------------------------------------------------------------------------
# presets and the JSON wire format

def figure_spec() -> JordanSpec:
    """Two spikes: a size-5 block at 1.5+2.625i and a size-3 block at 1.5-1.5i."""
    return JordanSpec(
        spikes=(
            Spike(theta=1.5 + 2.625j, blocks=((5, 1),)),
            Spike(theta=1.5 - 1.5j, blocks=((3, 1),)),
        )
    )


def scalar_spike_spec(theta: complex = 2.0 + 0j) -> JordanSpec:
    return JordanSpec(spikes=(Spike(theta=theta, blocks=((1, 1),)),))


def correlated_spec(kappa: float = 0.5, theta: complex = 2.0 + 0j, theta_prime: complex = -2.0 + 0j) -> JordanSpec:
    """Two scalar spikes conjugated by Q = [[1, kappa], [kappa, 1]]; for
    kappa != 0 the two outlier clouds are correlated despite the macroscopic
    separation."""
    if abs(kappa) == 1.0:
        raise SpecError("kappa = +-1 makes Q singular")
    Q = np.array([[1.0, kappa], [kappa, 1.0]], dtype=complex)
    return JordanSpec(
        spikes=(
            Spike(theta=theta, blocks=((1, 1),)),
            Spike(theta=theta_prime, blocks=((1, 1),)),
        ),
        Q=Q,
    )


PRESETS = {
    "figure1": figure_spec,
    "scalar-spike": scalar_spike_spec,
    "two-spike-correlated": correlated_spec,
}


def _matrix_to_json(M: np.ndarray) -> list[list[list[float]]]:
    return [[[float(x.real), float(x.imag)] for x in row] for row in M]


def _matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)


def spec_to_json(spec: JordanSpec, rho: float, seed: int) -> str:
    payload = {
        "rho": rho,
        "spikes": [
            {
                "theta": [float(s.theta.real), float(s.theta.imag)],
                "blocks": [[int(p), int(b)] for p, b in s.blocks],
            }
            for s in spec.spikes
        ],
        "Q": "identity" if spec.Q is None else _matrix_to_json(spec.Q),
        "seed": int(seed),
    }
    if spec.residual is not None:
        payload["residual"] = _matrix_to_json(spec.residual)
    if spec.rank_bound is not None:
        payload["rank_bound"] = int(spec.rank_bound)
    return json.dumps(payload, sort_keys=True)


def spec_from_json(text: str) -> tuple[JordanSpec, float, int]:
    data = json.loads(text)
    spikes = tuple(
        Spike(
            theta=complex(s["theta"][0], s["theta"][1]),
            blocks=tuple((int(p), int(b)) for p, b in s["blocks"]),
        )
        for s in data["spikes"]
    )
    Q = None if data.get("Q", "identity") == "identity" else _matrix_from_json(data["Q"])
    residual = _matrix_from_json(data["residual"]) if "residual" in data else None
    spec = JordanSpec(
        spikes=spikes, Q=Q, residual=residual, rank_bound=data.get("rank_bound")
    )
    return spec, float(data["rho"]), int(data["seed"])
