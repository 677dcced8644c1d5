import numpy as np
import pytest

from ellipticlab import elliptic_law
from ellipticlab.ensembles import make_rng, sample_haar_unitary
from ellipticlab.linalg import cholesky_psd, eigenvalues
from ellipticlab.spike import (
    AnnulusError,
    JordanSpec,
    SpecError,
    Spike,
    block_scale,
    build_perturbation,
    correlated_spec,
    default_eps,
    figure_spec,
    jordan_block,
    limit_gaussian_covariance,
    predicted_outliers,
    random_conjugator,
    retained_spike_ids,
    sample_lambda_infty,
    sample_limit_matrices,
    scalar_fluctuation_variance,
    scalar_spike_spec,
    spec_from_json,
    spec_to_json,
)

from conftest import match_multisets


def test_spike_validation():
    with pytest.raises(SpecError):
        Spike(theta=2.0, blocks=())
    with pytest.raises(SpecError):
        Spike(theta=2.0, blocks=((2, 1), (3, 1)))  # not decreasing
    with pytest.raises(SpecError):
        Spike(theta=2.0, blocks=((2, 0),))
    with pytest.raises(SpecError):
        JordanSpec(spikes=(Spike(2.0, ((1, 1),)), Spike(2.0, ((1, 1),))))


def test_jordan_block_shape():
    R = jordan_block(3, 1.0 - 1.5j)
    assert np.allclose(np.diag(R), (1.0 - 1.5j) * np.ones(3))
    assert np.allclose(np.diag(R, k=1), np.ones(2))


def test_build_perturbation_scalar():
    P = build_perturbation(scalar_spike_spec(2.0), 6)
    expected = np.zeros((6, 6), dtype=complex)
    expected[0, 0] = 2.0
    assert np.allclose(P, expected)


def test_build_perturbation_figure_layout():
    spec = figure_spec()
    P = build_perturbation(spec, 20)
    assert np.allclose(P[:5, :5], jordan_block(5, 1.5 + 2.625j))
    assert np.allclose(P[5:8, 5:8], jordan_block(3, 1.5 - 1.5j))
    assert np.abs(P[8:, :]).max() == 0.0
    assert np.abs(P[:, 8:]).max() == 0.0
    with pytest.raises(Exception):
        build_perturbation(spec, 10)  # N < 2r


def test_perturbation_eigenvalue_multiplicities():
    spec = figure_spec()
    P = build_perturbation(spec, 24)
    eigs = eigenvalues(P).eigenvalues
    expected = [1.5 + 2.625j] * 5 + [1.5 - 1.5j] * 3 + [0.0] * 16
    assert match_multisets(eigs, expected) < 1e-9


def test_perturbation_eigenvalues_with_random_conjugator():
    rng = make_rng(71, 0)
    Q = random_conjugator(2, 0.4, rng)
    spec = JordanSpec(
        spikes=(Spike(2.0 + 0j, ((1, 1),)), Spike(-3.0 + 0j, ((1, 1),))), Q=Q
    )
    P = build_perturbation(spec, 10)
    eigs = eigenvalues(P).eigenvalues
    assert match_multisets(eigs, [2.0, -3.0] + [0.0] * 8) < 1e-8


def test_perturbation_rank_bound():
    spec = figure_spec()
    P = build_perturbation(spec, 30)
    rank = np.linalg.matrix_rank(P, tol=1e-10)
    assert rank <= 2 * spec.r


def test_predicted_outliers_values():
    assert predicted_outliers(scalar_spike_spec(2.0), 0.0, 0.1) == [(2.0 + 0j, 1)]
    [(hat, count)] = predicted_outliers(scalar_spike_spec(2.0), 0.5, 0.1)
    assert hat == pytest.approx(2.25)
    assert count == 1


def test_predicted_outliers_figure():
    preds = predicted_outliers(figure_spec(), 0.0, 0.1)
    assert preds[0][0] == pytest.approx(1.5 + 2.625j)
    assert preds[0][1] == 5
    assert preds[1][0] == pytest.approx(1.5 - 1.5j)
    assert preds[1][1] == 3


def test_predicted_outliers_annulus_rejection():
    # rho=0, eps=0.1: hats in (1.1, 1.3) are forbidden
    spec = scalar_spike_spec(1.2)
    with pytest.raises(AnnulusError) as err:
        predicted_outliers(spec, 0.0, 0.1)
    assert "1.2" in str(err.value)


def test_predicted_outliers_subcritical_spike_silent():
    # |theta| < 1 produces nothing and raises nothing
    spec = JordanSpec(spikes=(Spike(0.5, ((1, 1),)), Spike(2.0, ((1, 1),))))
    preds = predicted_outliers(spec, 0.0, 0.1)
    assert len(preds) == 1
    assert retained_spike_ids(spec, 0.0, 0.1) == [1]


def test_residual_in_annulus_rejected():
    residual = np.array([[1.2 + 0j]])
    spec = JordanSpec(spikes=(Spike(2.0, ((1, 1),)),), residual=residual)
    with pytest.raises(AnnulusError):
        predicted_outliers(spec, 0.0, 0.1)


def test_default_eps():
    # scalar theta=2 at rho=0: (2 - 1)/4
    assert default_eps(scalar_spike_spec(2.0), 0.0) == pytest.approx(0.25)


def test_scalar_model_covariance():
    spec = scalar_spike_spec(2.0)
    model = limit_gaussian_covariance(spec, 0.0)
    assert model.dim == 1
    assert model.C[0, 0] == pytest.approx(1.0 / 12.0)
    assert model.R[0, 0] == 0.0


def test_model_psd_and_phi_same_consistency():
    spec = JordanSpec(
        spikes=(Spike(2.0 + 0.3j, ((2, 1), (1, 2))), Spike(-2.5 + 0j, ((1, 1),)))
    )
    rho = 0.4
    model = limit_gaussian_covariance(spec, rho)
    sigma = model.composite_covariance()
    floor = np.linalg.eigvalsh(0.5 * (sigma + sigma.T)).min()
    assert floor >= -1e-10
    # R entries are exactly the phi_same kernel, same code path
    for a, (i, k, l) in enumerate(model.coords):
        for b, (ip, kp, lp) in enumerate(model.coords):
            if k == lp and kp == l:
                expected = elliptic_law.phi_same(model.thetas[i], model.thetas[ip], rho)
                assert model.R[a, b] == expected
            else:
                assert model.R[a, b] == 0.0
    # factor of the composite reconstructs it
    L = cholesky_psd(sigma)
    assert np.abs(L @ L.T - sigma).max() < 1e-9


def test_unitary_q_cross_spike_independence():
    # with unitary Q the conjugate covariance couples only matching indices,
    # so coordinates of distinct spikes are uncorrelated
    rng = make_rng(72, 0)
    Q = sample_haar_unitary(2, rng)
    spec = JordanSpec(
        spikes=(Spike(2.0 + 0j, ((1, 1),)), Spike(-2.0 + 0j, ((1, 1),))), Q=Q
    )
    model = limit_gaussian_covariance(spec, 0.3)
    assert model.dim == 2
    for a, (i, _, _) in enumerate(model.coords):
        for b, (ip, _, _) in enumerate(model.coords):
            if i != ip:
                assert abs(model.C[a, b]) < 1e-12
                assert abs(model.R[a, b]) < 1e-12


def test_nonunitary_q_couples_spikes():
    model = limit_gaussian_covariance(correlated_spec(kappa=0.5), 0.0)
    cross = [
        abs(model.C[a, b])
        for a, (i, _, _) in enumerate(model.coords)
        for b, (ip, _, _) in enumerate(model.coords)
        if i != ip
    ]
    assert max(cross) > 1e-3


def test_draw_covariance_self_consistency():
    # empirical covariance of drawn vectors matches (C, R) within MC error
    spec = JordanSpec(spikes=(Spike(2.0 + 0.5j, ((2, 1),)),))
    rho = 0.35
    model = limit_gaussian_covariance(spec, rho)
    rng = make_rng(73, 0)
    draws = model.draw(rng, 100_000)
    n = draws.shape[0]
    centered = draws - draws.mean(axis=0)
    C_emp = centered.conj().T @ centered / n
    R_emp = centered.T @ centered / n
    for a in range(model.dim):
        for b in range(model.dim):
            prod = centered[:, a] * np.conj(centered[:, b])
            se = prod.std() / np.sqrt(n)
            assert abs(C_emp[b, a] - model.C[a, b]) < 4.0 * se + 1e-4
            prod2 = centered[:, a] * centered[:, b]
            se2 = prod2.std() / np.sqrt(n)
            assert abs(R_emp[a, b] - model.R[a, b]) < 4.0 * se2 + 1e-4


def test_limit_matrix_single_block_scalar_law():
    spec = scalar_spike_spec(2.0)
    model = limit_gaussian_covariance(spec, 0.0)
    rng = make_rng(74, 0)
    mats = sample_limit_matrices(model, rng)
    assert set(mats) == {(0, 0)}
    assert mats[(0, 0)].shape == (1, 1)
    # scalar case: M = block_scale * m, Var over draws = |theta^2 - rho|^2 Phi_0
    pred = scalar_fluctuation_variance(2.0, 0.0)
    assert pred == pytest.approx(16.0 / 12.0)
    draws = np.array([sample_limit_matrices(model, rng)[(0, 0)][0, 0] for _ in range(4000)])
    var = (np.abs(draws - draws.mean()) ** 2).mean()
    assert abs(var - pred) < 0.1


def test_block_scale_values():
    # rho = 0: theta^2 for every block size
    assert block_scale(2.0, 0.0, 1) == pytest.approx(4.0)
    assert block_scale(2.0, 0.0, 5) == pytest.approx(4.0)
    # rho = 1, real theta: |scale|^2 Phi_1 is the classical Hermitian variance
    theta = 3.0
    hat = theta + 1.0 / theta
    var = abs(block_scale(theta, 1.0, 1)) ** 2 * elliptic_law.phi(hat, hat, 1.0).real
    assert var == pytest.approx((theta**2 - 1.0) / theta**2)


def test_limit_matrix_schur_block_structure():
    # two block sizes: the smaller one gets the Schur correction
    spec = JordanSpec(spikes=(Spike(2.5 + 0j, ((3, 1), (1, 1))),))
    model = limit_gaussian_covariance(spec, 0.2)
    rng = make_rng(75, 0)
    mats = sample_limit_matrices(model, rng)
    assert set(mats) == {(0, 0), (0, 1)}
    assert mats[(0, 0)].shape == (1, 1)
    assert mats[(0, 1)].shape == (1, 1)
    # j=0 block has no bigger blocks: equals theta * m_{k,l} for its corner
    lay = model.layouts[0]
    idx = model.coord_index()
    # reproduce from a fresh deterministic draw
    rng2 = make_rng(76, 0)
    draw = model.draw(rng2, 1)[0]
    k0, l0 = lay.last_cols[0], lay.first_cols[0]
    manual_top = block_scale(2.5, 0.2, 3) * draw[idx[(0, k0, l0)]]
    k1, l1 = lay.last_cols[1], lay.first_cols[1]
    m_I = draw[idx[(0, k0, l0)]]
    m_II = draw[idx[(0, k0, l1)]]
    m_III = draw[idx[(0, k1, l0)]]
    m_IV = draw[idx[(0, k1, l1)]]
    manual_schur = block_scale(2.5, 0.2, 1) * (m_IV - m_III * m_II / m_I)
    rng3 = make_rng(76, 0)
    mats2 = sample_limit_matrices(model, rng3)
    assert mats2[(0, 0)][0, 0] == pytest.approx(manual_top)
    assert mats2[(0, 1)][0, 0] == pytest.approx(manual_schur)


def test_lambda_infty_roots():
    assert sample_lambda_infty(np.array([[5.0 + 1.0j]]), 1)[0] == pytest.approx(5.0 + 1.0j)
    roots = sample_lambda_infty(np.array([[32.0 + 0j]]), 5)
    assert np.allclose(np.abs(roots), 2.0)
    args = np.sort(np.angle(roots))
    assert np.allclose(np.diff(args), 2.0 * np.pi / 5.0, atol=1e-12)
    # p = 3: product of the three roots equals the eigenvalue
    lam = -1.3 + 2.1j
    roots = sample_lambda_infty(np.array([[lam]]), 3)
    assert np.prod(roots) == pytest.approx(lam)


def test_lambda_infty_polygon_grouping():
    # roots grouped by p-th power form regular polygons: equal moduli,
    # equally spaced arguments
    rng = make_rng(77, 0)
    M = np.array([[1.2 + 0.4j, 0.3], [0.1j, -0.8 + 1.0j]])
    p = 4
    roots = sample_lambda_infty(M, p)
    powers = np.round(roots**p, 6)
    for value in set(powers):
        group = roots[powers == value]
        assert len(group) == p
        assert np.abs(np.abs(group) - np.abs(group).mean()).max() < 1e-9
        gaps = np.diff(np.sort(np.angle(group)))
        assert np.abs(gaps - 2.0 * np.pi / p).max() < 1e-9


def test_lambda_infty_zero_eigenvalue_flagged():
    with pytest.warns(UserWarning):
        roots = sample_lambda_infty(np.zeros((1, 1)), 3)
    assert np.all(roots == 0)


def test_random_conjugator_validation():
    rng = make_rng(78, 0)
    with pytest.raises(SpecError):
        random_conjugator(2, 0.9, rng)
    Q = random_conjugator(3, 0.5, rng)
    assert np.linalg.cond(Q) < 1e10


def test_spec_json_roundtrip():
    spec = correlated_spec(kappa=0.3)
    text = spec_to_json(spec, rho=0.25, seed=42)
    restored, rho, seed = spec_from_json(text)
    assert rho == 0.25 and seed == 42
    assert restored.spikes == spec.spikes
    assert np.allclose(restored.Q, spec.Q)
    assert spec_to_json(restored, rho, seed) == text


def test_spec_json_identity_q_and_residual():
    spec = JordanSpec(
        spikes=(Spike(2.0, ((2, 1),)),),
        residual=np.array([[0.5 + 0j, 0.1], [0.0, -0.2j]]),
    )
    text = spec_to_json(spec, rho=0.0, seed=1)
    restored, _, _ = spec_from_json(text)
    assert restored.Q is None
    assert np.allclose(restored.residual, spec.residual)
