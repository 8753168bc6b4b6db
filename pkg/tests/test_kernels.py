import numpy as np
import pytest

from mibridge import _kernels
from mibridge.data import IncompleteData
from mibridge.fcs import draw_regression, impute_column, nig_posterior_update
from mibridge.priors import NiwPrior, decompose
from mibridge.samplers import stream

try:
    _kernels.get_backend("cython")
    HAVE_CYTHON = True
except ImportError:
    HAVE_CYTHON = False

PRIOR = NiwPrior(mu0=np.zeros(3), tau=1.0, m=3.0, lam=60.0 * np.eye(3))


def make_problem(seed=0, n=200):
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky([[4.0, 2, 2], [2, 4, 2], [2, 2, 9.0]])
    values = np.ascontiguousarray([1.0, 4.0, 9.0] + rng.standard_normal((n, 3)) @ L.T)
    mis = np.sort(rng.choice(n, size=n // 6, replace=False)).astype(np.intp)
    obs = np.setdiff1d(np.arange(n, dtype=np.intp), mis)
    cond, _ = decompose(PRIOR, 1)
    return values, obs, mis, cond


class TestBackendParity:
    @pytest.mark.skipif(not HAVE_CYTHON, reason="compiled backend unavailable")
    def test_same_streams_same_numbers(self):
        cy = _kernels.get_backend("cython")
        py = _kernels.get_backend("python")
        values, obs, mis, cond = make_problem()
        v1, v2 = values.copy(), values.copy()
        r1, r2 = stream(5), stream(5)
        args = (1, cond.coef_mean, cond.coef_precision_given_sigma,
                0.5 * cond.sigma_df, 0.5 * cond.sigma_scale)
        for _ in range(20):
            c1, s1 = cy.fcs_update_column(v1, obs, mis, *args, r1)
            c2, s2 = py.fcs_update_column(v2, obs, mis, *args, r2)
            assert s1 == pytest.approx(s2, rel=1e-10)
            assert np.allclose(c1, c2, rtol=1e-9, atol=1e-12)
        assert np.allclose(v1, v2, rtol=1e-9, atol=1e-9)
        # streams stayed aligned through all draws
        assert r1.standard_normal() == r2.standard_normal()

    @pytest.mark.skipif(not HAVE_CYTHON, reason="compiled backend unavailable")
    def test_ols_parity_and_lstsq_oracle(self):
        cy = _kernels.get_backend("cython")
        py = _kernels.get_backend("python")
        values, _, _, _ = make_problem(3)
        b1 = cy.ols_coef(values, 1)
        b2 = py.ols_coef(values, 1)
        X = np.column_stack([np.ones(len(values)), values[:, [0, 2]]])
        oracle = np.linalg.lstsq(X, values[:, 1], rcond=None)[0]
        assert np.allclose(b1, b2, rtol=1e-10)
        assert np.allclose(b1, oracle, rtol=1e-8)


class TestKernelMatchesStepwiseOps:
    def test_fused_equals_composition(self):
        # the fused kernel must reproduce nig_posterior_update +
        # draw_regression + impute_column given the same stream
        values, obs, mis, cond = make_problem(7)
        v_kernel = values.copy()
        r1, r2 = stream(9), stream(9)

        coef, sigma2 = _kernels.fcs_update_column(
            v_kernel, obs, mis, 1, cond.coef_mean,
            cond.coef_precision_given_sigma, 0.5 * cond.sigma_df,
            0.5 * cond.sigma_scale, r1,
        )

        X = np.column_stack([np.ones(obs.size), values[np.ix_(obs, [0, 2])]])
        post = nig_posterior_update(cond, X, values[obs, 1])
        reg = draw_regression(post, r2)
        mask = np.zeros_like(values, dtype=bool)
        mask[mis, 1] = True
        inc_values = values.copy()
        inc_values[mis, 1] = np.nan
        col = impute_column(values, mask, 1, reg, r2)

        assert sigma2 == pytest.approx(reg.sigma2, rel=1e-12)
        assert coef[0] == pytest.approx(reg.alpha, rel=1e-12)
        assert np.allclose(coef[1:], reg.beta, rtol=1e-12)
        assert np.allclose(v_kernel[mis, 1], col[mis], rtol=1e-10)

    def test_empty_observed_set_draws_from_prior(self):
        values, _, _, cond = make_problem(11, n=50)
        empty = np.empty(0, dtype=np.intp)
        mis = np.arange(10, dtype=np.intp)
        r1, r2 = stream(13), stream(13)
        coef, sigma2 = _kernels.fcs_update_column(
            values.copy(), empty, mis, 1, cond.coef_mean,
            cond.coef_precision_given_sigma, 0.5 * cond.sigma_df,
            0.5 * cond.sigma_scale, r1,
        )
        reg = draw_regression(
            nig_posterior_update(cond, np.empty((0, 3)), np.empty(0)), r2
        )
        assert sigma2 == pytest.approx(reg.sigma2, rel=1e-12)
        assert coef[0] == pytest.approx(reg.alpha, rel=1e-12)
