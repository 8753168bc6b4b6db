"""Pure-NumPy implementations of the chained-regression hot kernels.

This is the reference backend; ``_core`` (Cython) implements the same
operations with the same random-stream protocol, so a given seed produces
the same chain on either backend (up to last-ulp linear-algebra noise).

Random-stream protocol of :func:`fcs_update_column` (one column update):

1. one ``standard_gamma(a_n)`` draw for the residual variance,
2. ``k`` ``standard_normal`` draws for the regression coefficients,
3. one ``standard_normal`` draw per imputed cell, in row order.
"""

import numpy as np

BACKEND = "python"


def fcs_update_column(values, obs_rows, mis_rows, j, coef_mean, coef_prec, a0, b0, rng):
    """Conjugate Bayesian regression update and imputation for one column.

    Fits column ``j`` on rows ``obs_rows`` against all other columns (with
    intercept), draws (coefficients, sigma2) from the conjugate posterior and
    overwrites ``values[mis_rows, j]`` with posterior-predictive draws,
    in place.  Returns ``(coef, sigma2)``.

    The prior is coefficients | sigma2 ~ N(coef_mean, sigma2 * coef_prec^-1)
    and sigma2 ~ InvGamma(a0, b0).
    """
    n, p = values.shape
    rest = [c for c in range(p) if c != j]
    k = p  # intercept + p-1 slopes

    X = np.empty((obs_rows.shape[0], k))
    X[:, 0] = 1.0
    X[:, 1:] = values[np.ix_(obs_rows, rest)]
    y = values[obs_rows, j]

    post_prec = coef_prec + X.T @ X
    L = np.linalg.cholesky(post_prec)
    rhs = coef_prec @ coef_mean + X.T @ y
    post_mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))

    a_n = a0 + 0.5 * obs_rows.shape[0]
    b_n = b0 + 0.5 * (
        y @ y + coef_mean @ coef_prec @ coef_mean - post_mean @ post_prec @ post_mean
    )
    if not b_n > 0.0:
        raise np.linalg.LinAlgError(
            f"non-positive posterior sigma2 scale ({b_n}); degenerate design"
        )

    sigma2 = b_n / rng.standard_gamma(a_n)
    coef = post_mean + np.sqrt(sigma2) * np.linalg.solve(L.T, rng.standard_normal(k))

    if mis_rows.shape[0]:
        Xm = np.empty((mis_rows.shape[0], k))
        Xm[:, 0] = 1.0
        Xm[:, 1:] = values[np.ix_(mis_rows, rest)]
        values[mis_rows, j] = Xm @ coef + np.sqrt(sigma2) * rng.standard_normal(
            mis_rows.shape[0]
        )
    return coef, sigma2


def ols_coef(values, response):
    """OLS coefficients of column ``response`` on all other columns.

    Returns the full coefficient vector (intercept first, then slopes for the
    remaining columns in ascending index order).
    """
    n, p = values.shape
    rest = [c for c in range(p) if c != response]
    X = np.empty((n, p))
    X[:, 0] = 1.0
    X[:, 1:] = values[:, rest]
    y = values[:, response]
    L = np.linalg.cholesky(X.T @ X)
    return np.linalg.solve(L.T, np.linalg.solve(L, X.T @ y))
