import numpy as np
import pytest

from mibridge.analysis import ks_two_sample
from mibridge.data import IncompleteData
from mibridge.gaussian import GaussianParams, partition, to_regression
from mibridge.jm import jm_gibbs_step, jm_impute, jm_start, niw_posterior_update
from mibridge.priors import NiwPrior
from mibridge.samplers import stream

MU = np.array([1.0, 4.0, 9.0])
SIGMA = np.array([[4.0, 2.0, 2.0], [2.0, 4.0, 2.0], [2.0, 2.0, 9.0]])
PRIOR = NiwPrior(mu0=np.zeros(3), tau=1.0, m=3.0, lam=60.0 * np.eye(3))


def trivariate_data(rng, n):
    return MU + rng.standard_normal((n, 3)) @ np.linalg.cholesky(SIGMA).T


def grid_posterior_mu_moments(y, mu0, tau, m, lam):
    """Brute-force posterior mean/variance of mu for the scalar model.

    Integrates prior x likelihood over a dense (mu, log sigma2) grid with a
    sinh-stretched mu axis (the mu posterior is heavy tailed); independent of
    the conjugate-update algebra under test.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    ybar = y.mean()
    ssq = ((y - ybar) ** 2).sum()
    u = np.linspace(-np.arcsinh(4e4), np.arcsinh(4e4), 9001)
    mu_grid = ybar + np.sinh(u)
    ls_grid = np.linspace(np.log(1e-4), np.log(1e8), 4001)
    s2 = np.exp(ls_grid)
    # log posterior on the (mu, log sigma2) grid; + ls is the d sigma2 ->
    # d log sigma2 Jacobian; likelihood via sum (y-mu)^2 = n(mu-ybar)^2 + ssq
    logw = (
        -(0.5 * (m + 3.0)) * ls_grid[None, :]
        - 0.5 * lam / s2[None, :]
        - 0.5 * tau * (mu_grid[:, None] - mu0) ** 2 / s2[None, :]
        + ls_grid[None, :]
        - 0.5 * n * (np.log(2 * np.pi) + ls_grid[None, :])
        - 0.5 * (n * (mu_grid[:, None] - ybar) ** 2 + ssq) / s2[None, :]
    )
    w = np.exp(logw - logw.max())
    marg = np.trapezoid(w, ls_grid, axis=1)
    z = np.trapezoid(marg, mu_grid)
    marg /= z
    e_mu = np.trapezoid(marg * mu_grid, mu_grid)
    e_mu2 = np.trapezoid(marg * mu_grid**2, mu_grid)
    return e_mu, e_mu2 - e_mu**2


class TestNiwPosteriorUpdate:
    def test_empty_data_returns_prior(self):
        post = niw_posterior_update(PRIOR, np.empty((0, 3)))
        assert post is PRIOR

    def test_conjugate_algebra_scalar_case(self):
        prior = NiwPrior(mu0=[0.0], tau=1.0, m=3.0, lam=[[60.0]])
        post = niw_posterior_update(prior, np.array([[1.0], [2.0], [3.0]]))
        assert post.tau == 4.0
        assert post.m == 6.0
        assert post.mu0[0] == pytest.approx(1.5)
        # scatter 2 + shrinkage (3/4)*4 = 3
        assert post.lam[0, 0] == pytest.approx(65.0)

    def test_grid_integration_oracle(self):
        # posterior mean/variance of mu from the conjugate form vs quadrature
        prior = NiwPrior(mu0=[0.0], tau=1.0, m=3.0, lam=[[60.0]])
        y = [1.0, 2.0, 3.0]
        post = niw_posterior_update(prior, np.asarray(y)[:, None])
        mean_conj = post.mu0[0]
        var_conj = post.lam[0, 0] / ((post.m - 2.0) * post.tau)
        assert mean_conj == pytest.approx(1.5)
        assert var_conj == pytest.approx(65.0 / 16.0)
        mean_grid, var_grid = grid_posterior_mu_moments(y, 0.0, 1.0, 3.0, 60.0)
        assert abs(mean_grid - mean_conj) < 1e-6
        assert abs(var_grid - var_conj) < 1e-6

    def test_infinite_prior_precision_pins_location(self):
        rng = np.random.default_rng(1)
        data = trivariate_data(rng, 50)
        heavy = NiwPrior(mu0=PRIOR.mu0, tau=1e12, m=3.0, lam=PRIOR.lam)
        post = niw_posterior_update(heavy, data)
        assert np.allclose(post.mu0, PRIOR.mu0, atol=1e-9)


class TestJmGibbsStep:
    def test_fully_observed_never_changes_data(self):
        rng = stream(3)
        values = trivariate_data(np.random.default_rng(0), 60)
        data = IncompleteData(values, np.zeros_like(values, bool), ("x", "y", "z"))
        state = jm_start(data, PRIOR, rng)
        for _ in range(5):
            state = jm_gibbs_step(state, data, PRIOR, rng)
            assert np.array_equal(state.completed, values)

    def test_observed_cells_preserved_random_mask(self):
        rng = stream(4)
        gen = np.random.default_rng(5)
        values = trivariate_data(gen, 80)
        mask = gen.random((80, 3)) < 0.25
        mask[mask.all(axis=1)] = False
        data = IncompleteData(values, mask, ("x", "y", "z"))
        state = jm_start(data, PRIOR, rng)
        for _ in range(10):
            state = jm_gibbs_step(state, data, PRIOR, rng)
            assert np.array_equal(state.completed[~mask], values[~mask])
            assert state.iteration > 0

    def test_chain_determinism(self):
        gen = np.random.default_rng(6)
        values = trivariate_data(gen, 50)
        mask = gen.random((50, 3)) < 0.3
        mask[mask.all(axis=1)] = False
        data = IncompleteData(values, mask, ("x", "y", "z"))

        def run(seed):
            rng = stream(seed)
            state = jm_start(data, PRIOR, rng)
            for _ in range(8):
                state = jm_gibbs_step(state, data, PRIOR, rng)
            return state.completed

        assert np.array_equal(run(42), run(42))
        assert not np.array_equal(run(42), run(43))

    def test_single_missing_cell_matches_conditional(self):
        # with 10^4 nearly complete rows the parameter posterior pins the
        # truth, so the imputed cell must follow the closed-form conditional
        gen = np.random.default_rng(7)
        n = 10_000
        values = trivariate_data(gen, n)
        mask = np.zeros((n, 3), bool)
        mask[0, 1] = True
        data = IncompleteData(values, mask, ("x", "y", "z"))
        rng = stream(8)
        state = jm_start(data, PRIOR, rng)
        draws = np.empty(10_000)
        for i in range(draws.shape[0]):
            state = jm_gibbs_step(state, data, PRIOR, rng)
            draws[i] = state.completed[0, 1]
        reg = to_regression(partition(GaussianParams(MU, SIGMA), 1))
        cond_mean = reg.alpha + reg.beta @ values[0, [0, 2]]
        oracle = cond_mean + np.sqrt(reg.sigma2) * stream(9).standard_normal(
            draws.shape[0]
        )
        assert ks_two_sample(draws, oracle) < 0.02


class TestJmImpute:
    def test_no_missing_returns_input(self):
        values = trivariate_data(np.random.default_rng(1), 40)
        data = IncompleteData(values, np.zeros_like(values, bool), ("x", "y", "z"))
        out = jm_impute(data, PRIOR, stream(2), n_burn=0, m=1)
        assert len(out) == 1
        assert np.array_equal(out[0], values)

    def test_same_seed_identical_sets(self):
        gen = np.random.default_rng(11)
        values = trivariate_data(gen, 60)
        mask = gen.random((60, 3)) < 0.3
        mask[mask.all(axis=1)] = False
        data = IncompleteData(values, mask, ("x", "y", "z"))
        a = jm_impute(data, PRIOR, stream(12), n_burn=3, m=4)
        b = jm_impute(data, PRIOR, stream(12), n_burn=3, m=4)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_invalid_counts(self):
        values = trivariate_data(np.random.default_rng(1), 10)
        data = IncompleteData(values, np.zeros_like(values, bool), ("x", "y", "z"))
        with pytest.raises(ValueError):
            jm_impute(data, PRIOR, stream(1), m=0)
        with pytest.raises(ValueError):
            jm_impute(data, PRIOR, stream(1), m=1, thin=0)


class TestPosteriorConcentration:
    def test_complete_data_chain_recovers_truth(self):
        # seeded so the dataset's own sampling noise stays in-distribution;
        # the Sigma_zz entry alone has sd ~0.13 at n = 10^4, so the 0.15
        # band is dominated by data noise, not sampler error
        gen = np.random.default_rng(18)
        values = trivariate_data(gen, 10_000)
        data = IncompleteData(values, np.zeros_like(values, bool), ("x", "y", "z"))
        rng = stream(14)
        state = jm_start(data, PRIOR, rng)
        mus, sigmas = [], []
        for _ in range(300):
            state = jm_gibbs_step(state, data, PRIOR, rng)
            mus.append(state.params.mu)
            sigmas.append(state.params.sigma)
        mu_hat = np.mean(mus, axis=0)
        sigma_hat = np.mean(sigmas, axis=0)
        assert np.all(np.abs(mu_hat - MU) < 0.05)
        assert np.all(np.abs(sigma_hat - SIGMA) < 0.15)
        # the sharp check: the chain tracks this dataset's realized
        # posterior center (MLE at this n) regardless of data noise
        assert np.all(np.abs(mu_hat - values.mean(axis=0)) < 0.01)
        assert np.all(np.abs(sigma_hat - np.cov(values.T)) < 0.03)

    def test_row_permutation_exchangeability(self):
        gen = np.random.default_rng(15)
        values = trivariate_data(gen, 300)
        mask = np.zeros((300, 3), bool)
        mask[gen.choice(300, 90, replace=False), 1] = True
        data = IncompleteData(values, mask, ("x", "y", "z"))
        perm = gen.permutation(300)
        data_perm = IncompleteData(values[perm], mask[perm], ("x", "y", "z"))

        def imputed_values(d, seed):
            out = jm_impute(d, PRIOR, stream(seed), n_burn=10, m=30)
            return np.concatenate([Y[d.mask] for Y in out])

        a = imputed_values(data, 16)
        b = imputed_values(data_perm, 17)
        assert ks_two_sample(a, b) < 0.06
