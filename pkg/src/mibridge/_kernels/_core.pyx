# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled chained-regression hot kernels.

Mirrors ``_fallback`` exactly: same operations, same random-stream protocol
(one gamma draw, k coefficient normals, one normal per imputed cell), drawing
through numpy's C distribution functions on the caller's bit generator so
both backends consume identical streams.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport sqrt, log
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_gamma,
    random_standard_normal,
)

cnp.import_array()

BACKEND = "cython"

cdef const char* CAPSULE_NAME = "BitGenerator"


cdef bitgen_t* get_bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("invalid BitGenerator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


cdef int cholesky_inplace(double* a, Py_ssize_t k) nogil:
    """Lower Cholesky of the k x k matrix a (row-major), in place.

    Returns 0 on success, -1 if a pivot is not positive.
    """
    cdef Py_ssize_t i, jj, t
    cdef double s
    for jj in range(k):
        s = a[jj * k + jj]
        for t in range(jj):
            s -= a[jj * k + t] * a[jj * k + t]
        if s <= 0.0:
            return -1
        a[jj * k + jj] = sqrt(s)
        for i in range(jj + 1, k):
            s = a[i * k + jj]
            for t in range(jj):
                s -= a[i * k + t] * a[jj * k + t]
            a[i * k + jj] = s / a[jj * k + jj]
    return 0


cdef void solve_lower(double* L, double* x, Py_ssize_t k) nogil:
    cdef Py_ssize_t i, t
    cdef double s
    for i in range(k):
        s = x[i]
        for t in range(i):
            s -= L[i * k + t] * x[t]
        x[i] = s / L[i * k + i]


cdef void solve_upper_t(double* L, double* x, Py_ssize_t k) nogil:
    # solves L^T x = b with L lower triangular
    cdef Py_ssize_t i, t
    cdef double s
    for i in range(k - 1, -1, -1):
        s = x[i]
        for t in range(i + 1, k):
            s -= L[t * k + i] * x[t]
        x[i] = s / L[i * k + i]


def fcs_update_column(
    double[:, ::1] values,
    cnp.intp_t[::1] obs_rows,
    cnp.intp_t[::1] mis_rows,
    Py_ssize_t j,
    double[::1] coef_mean,
    double[:, ::1] coef_prec,
    double a0,
    double b0,
    object rng,
):
    """See ``_fallback.fcs_update_column``; identical contract."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t p = values.shape[1]
    cdef Py_ssize_t k = p
    cdef Py_ssize_t n_obs = obs_rows.shape[0]
    cdef Py_ssize_t n_mis = mis_rows.shape[0]
    cdef bitgen_t* bg = get_bitgen(rng)

    coef_arr = np.empty(k)
    cdef double[::1] coef = coef_arr
    cdef double* G = <double*> malloc(sizeof(double) * k * (2 * k + 3))
    if G == NULL:
        raise MemoryError()
    cdef double* P = G + k * k
    cdef double* v = P + k * k
    cdef double* mn = v + k
    cdef double* x = mn + k
    cdef Py_ssize_t i, r, a, b, c, t
    cdef double yy = 0.0, yi, s, a_n, b_n, quad0, quadn, sigma2, sd, pred

    with nogil:
        for a in range(k * k):
            G[a] = 0.0
        for a in range(k):
            v[a] = 0.0
        # accumulate X'X, X'y, y'y over observed rows; design = (1, other cols)
        for i in range(n_obs):
            r = obs_rows[i]
            yi = values[r, j]
            yy += yi * yi
            x[0] = 1.0
            c = 1
            for b in range(p):
                if b != j:
                    x[c] = values[r, b]
                    c += 1
            for a in range(k):
                v[a] += x[a] * yi
                for b in range(a, k):
                    G[a * k + b] += x[a] * x[b]
        for a in range(k):
            for b in range(a, k):
                P[a * k + b] = coef_prec[a, b] + G[a * k + b]
                P[b * k + a] = P[a * k + b]
        # rhs = prior_prec @ prior_mean + X'y; quad0 = mean' prior_prec mean
        quad0 = 0.0
        for a in range(k):
            s = 0.0
            for b in range(k):
                s += coef_prec[a, b] * coef_mean[b]
            quad0 += s * coef_mean[a]
            mn[a] = s + v[a]

    if cholesky_inplace(P, k) != 0:
        free(G)
        raise np.linalg.LinAlgError("posterior precision not positive definite")

    with nogil:
        solve_lower(P, mn, k)
        quadn = 0.0
        for a in range(k):
            quadn += mn[a] * mn[a]  # after L-solve: mn = L^-1 rhs, |L^-1 rhs|^2 = mean' P mean
        solve_upper_t(P, mn, k)

    a_n = a0 + 0.5 * n_obs
    b_n = b0 + 0.5 * (yy + quad0 - quadn)
    if not b_n > 0.0:
        free(G)
        raise np.linalg.LinAlgError(
            f"non-positive posterior sigma2 scale ({b_n}); degenerate design"
        )

    with rng.bit_generator.lock:
        sigma2 = b_n / random_standard_gamma(bg, a_n)
        sd = sqrt(sigma2)
        for a in range(k):
            x[a] = random_standard_normal(bg)
        solve_upper_t(P, x, k)
        for a in range(k):
            coef[a] = mn[a] + sd * x[a]
        for i in range(n_mis):
            r = mis_rows[i]
            pred = coef[0]
            c = 1
            for b in range(p):
                if b != j:
                    pred += coef[c] * values[r, b]
                    c += 1
            values[r, j] = pred + sd * random_standard_normal(bg)

    free(G)
    return coef_arr, sigma2


def ols_coef(double[:, ::1] values, Py_ssize_t response):
    """See ``_fallback.ols_coef``; identical contract."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t p = values.shape[1]
    cdef Py_ssize_t k = p
    out_arr = np.empty(k)
    cdef double[::1] out = out_arr
    cdef double* G = <double*> malloc(sizeof(double) * (k * k + 2 * k))
    if G == NULL:
        raise MemoryError()
    cdef double* v = G + k * k
    cdef double* x = v + k
    cdef Py_ssize_t i, a, b, c
    cdef double yi

    with nogil:
        for a in range(k * k):
            G[a] = 0.0
        for a in range(k):
            v[a] = 0.0
        for i in range(n):
            yi = values[i, response]
            x[0] = 1.0
            c = 1
            for b in range(p):
                if b != response:
                    x[c] = values[i, b]
                    c += 1
            for a in range(k):
                v[a] += x[a] * yi
                for b in range(a, k):
                    G[a * k + b] += x[a] * x[b]
        for a in range(k):
            for b in range(a):
                G[a * k + b] = G[b * k + a]

    if cholesky_inplace(G, k) != 0:
        free(G)
        raise np.linalg.LinAlgError("normal equations singular")
    with nogil:
        solve_lower(G, v, k)
        solve_upper_t(G, v, k)
        for a in range(k):
            out[a] = v[a]
    free(G)
    return out_arr
