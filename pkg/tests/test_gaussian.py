import numpy as np
import pytest
from scipy import stats

from mibridge.gaussian import (
    ConditionalRegression,
    GaussianParams,
    NotPositiveDefiniteError,
    conditional_mvn,
    log_density_mvn,
    partition,
    to_regression,
)

# trivariate simulation distribution used throughout the studies
MU = np.array([1.0, 4.0, 9.0])
SIGMA = np.array([[4.0, 2.0, 2.0], [2.0, 4.0, 2.0], [2.0, 2.0, 9.0]])


def rand_spd(rng, p, scale=1.0):
    a = rng.standard_normal((p, p))
    return scale * (a @ a.T + p * np.eye(p))


class TestGaussianParams:
    def test_symmetrizes_tiny_asymmetry(self):
        sig = SIGMA.copy()
        sig[0, 1] += 1e-12
        g = GaussianParams(MU, sig)
        assert np.array_equal(g.sigma, g.sigma.T)

    def test_rejects_large_asymmetry(self):
        sig = SIGMA.copy()
        sig[0, 1] += 1e-6
        with pytest.raises(ValueError, match="not symmetric"):
            GaussianParams(MU, sig)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            GaussianParams([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])

    def test_immutable(self):
        g = GaussianParams(MU, SIGMA)
        with pytest.raises(ValueError):
            g.mu[0] = 7.0


class TestPartition:
    def test_trivariate_blocks(self):
        part = partition(GaussianParams(MU, SIGMA), 1)
        assert part.mu_j == 4.0
        assert np.array_equal(part.mu_rest, [1.0, 9.0])
        assert part.omega_j == 4.0
        assert np.array_equal(part.xi_j, [2.0, 2.0])
        assert np.array_equal(part.sigma_rest, [[4.0, 2.0], [2.0, 9.0]])

    def test_identity_case(self):
        part = partition(GaussianParams([0.0, 0.0], np.eye(2)), 0)
        assert part.mu_j == 0.0
        assert part.omega_j == 1.0
        assert np.array_equal(part.xi_j, [0.0])
        assert np.array_equal(part.sigma_rest, [[1.0]])

    @pytest.mark.parametrize("p", range(2, 11))
    def test_roundtrip_exact(self, p):
        rng = np.random.default_rng(p)
        g = GaussianParams(rng.standard_normal(p), rand_spd(rng, p))
        for j in range(p):
            back = partition(g, j).reassemble()
            assert np.array_equal(back.mu, g.mu)
            assert np.array_equal(back.sigma, g.sigma)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            partition(GaussianParams(MU, SIGMA), 3)


class TestToRegression:
    def test_trivariate_y_given_xz(self):
        # oracle: solve the 2x2 system sigma_rest beta = xi directly
        part = partition(GaussianParams(MU, SIGMA), 1)
        beta_oracle = np.linalg.solve(part.sigma_rest, part.xi_j)
        reg = to_regression(part)
        assert np.allclose(reg.beta, beta_oracle, rtol=1e-14)
        assert np.allclose(reg.beta, [7.0 / 16.0, 1.0 / 8.0], rtol=1e-14)
        assert reg.alpha == pytest.approx(39.0 / 16.0, rel=1e-14)
        assert reg.sigma2 == pytest.approx(23.0 / 8.0, rel=1e-14)

    def test_independence_case(self):
        for j in range(3):
            reg = to_regression(partition(GaussianParams([5.0, -2.0, 0.5], np.eye(3)), j))
            assert np.array_equal(reg.beta, [0.0, 0.0])
            assert reg.alpha == [5.0, -2.0, 0.5][j]
            assert reg.sigma2 == 1.0

    @pytest.mark.parametrize("p", [2, 3, 4, 6])
    def test_density_identity(self, p):
        # log N(y; mu, Sigma) = log N(y_j; a + b.y_rest, s2) + log N(y_rest; ...)
        rng = np.random.default_rng(100 + p)
        g = GaussianParams(rng.standard_normal(p), rand_spd(rng, p))
        for j in (0, p - 1):
            part = partition(g, j)
            reg = to_regression(part)
            rest = [k for k in range(p) if k != j]
            for _ in range(100):
                y = rng.standard_normal(p) * 3
                lhs = log_density_mvn(g, y)
                rhs = stats.norm.logpdf(
                    y[j], reg.alpha + reg.beta @ y[rest], np.sqrt(reg.sigma2)
                ) + log_density_mvn(GaussianParams(part.mu_rest, part.sigma_rest), y[rest])
                assert lhs == pytest.approx(rhs, abs=1e-8)

    @pytest.mark.parametrize("p", [2, 4, 7])
    def test_sigma2_precision_identity(self, p):
        rng = np.random.default_rng(7 * p)
        g = GaussianParams(rng.standard_normal(p), rand_spd(rng, p))
        prec = np.linalg.inv(g.sigma)
        for j in range(p):
            reg = to_regression(partition(g, j))
            assert reg.sigma2 == pytest.approx(1.0 / prec[j, j], rel=1e-10)

    def test_sigma2_must_be_positive(self):
        with pytest.raises(ValueError):
            ConditionalRegression(alpha=0.0, beta=np.zeros(2), sigma2=0.0)


class TestConditionalMvn:
    def test_trivariate_matches_regression_at_observed_point(self):
        g = GaussianParams(MU, SIGMA)
        cond = conditional_mvn(g, [0, 2], [1.0, 9.0])
        assert cond.mu[0] == pytest.approx(4.0, rel=1e-14)
        assert cond.sigma[0, 0] == pytest.approx(23.0 / 8.0, rel=1e-14)

    def test_empty_and_full_observed_sets_error(self):
        g = GaussianParams(MU, SIGMA)
        with pytest.raises(ValueError):
            conditional_mvn(g, [], [])
        with pytest.raises(ValueError):
            conditional_mvn(g, [0, 1, 2], [1.0, 4.0, 9.0])

    @pytest.mark.parametrize("rho", [-0.8, 0.0, 0.5, 0.95])
    def test_bivariate_textbook_variance(self, rho):
        s = 2.5
        g = GaussianParams([0.0, 0.0], [[s * s, rho * s * s], [rho * s * s, s * s]])
        cond = conditional_mvn(g, [0], [1.3])
        assert cond.sigma[0, 0] == pytest.approx((1 - rho * rho) * s * s, rel=1e-12)

    def test_single_missing_agrees_with_to_regression(self):
        rng = np.random.default_rng(42)
        for p in (2, 3, 5):
            g = GaussianParams(rng.standard_normal(p), rand_spd(rng, p))
            for j in range(p):
                rest = [k for k in range(p) if k != j]
                vals = rng.standard_normal(p - 1)
                cond = conditional_mvn(g, rest, vals)
                reg = to_regression(partition(g, j))
                assert cond.mu[0] == pytest.approx(
                    reg.alpha + reg.beta @ vals, rel=1e-10, abs=1e-10
                )
                assert cond.sigma[0, 0] == pytest.approx(reg.sigma2, rel=1e-10)

    def test_conditional_mean_tracks_observed_values(self):
        g = GaussianParams(MU, SIGMA)
        lo = conditional_mvn(g, [0, 2], [0.0, 8.0])
        hi = conditional_mvn(g, [0, 2], [3.0, 10.0])
        assert hi.mu[0] > lo.mu[0]  # positive cross-covariances


class TestLogDensity:
    def test_standard_univariate_at_zero(self):
        g = GaussianParams([0.0], [[1.0]])
        assert log_density_mvn(g, [0.0]) == pytest.approx(-0.5 * np.log(2 * np.pi))

    def test_standard_bivariate_at_zero(self):
        g = GaussianParams([0.0, 0.0], np.eye(2))
        assert log_density_mvn(g, [0.0, 0.0]) == pytest.approx(-np.log(2 * np.pi))

    def test_trivariate_at_mean(self):
        # det oracle: numpy det (92, confirmed by cofactor expansion and
        # by sigma2 * det(sigma_rest) = 23/8 * 32)
        det = np.linalg.det(SIGMA)
        assert det == pytest.approx(92.0, rel=1e-12)
        g = GaussianParams(MU, SIGMA)
        expected = -0.5 * np.log((2 * np.pi) ** 3 * det)
        assert log_density_mvn(g, MU) == pytest.approx(expected, rel=1e-12)

    def test_matches_scipy(self):
        rng = np.random.default_rng(3)
        g = GaussianParams(rng.standard_normal(4), rand_spd(rng, 4))
        y = rng.standard_normal(4)
        assert log_density_mvn(g, y) == pytest.approx(
            stats.multivariate_normal(g.mu, g.sigma).logpdf(y), rel=1e-12
        )
