# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled feedback-loop kernel. Mirrors ``_kernels_py`` operation for operation."""

import numpy as np

from libc.math cimport sqrt, tanh, fabs, INFINITY, NAN

cdef enum:
    IV_PAIR = 1
    IV_SINGLE = 2
    TA_TANH = 1

cdef enum:
    OK = 0
    SAT_LOW = 1
    SAT_HIGH = 2
    FAILED = 3


cdef inline double _delta(double v, int iv_model, double inv_a, double vov) noexcept nogil:
    cdef double w
    if iv_model == IV_PAIR:
        w = v / vov
        return v * inv_a * sqrt(1.0 - 0.25 * w * w)
    if iv_model == IV_SINGLE:
        return v * inv_a * (1.0 + 0.5 * v / vov)
    return v * inv_a


cdef inline double _ddelta(double v, int iv_model, double inv_a, double vov) noexcept nogil:
    cdef double w
    if iv_model == IV_PAIR:
        w = v / vov
        return inv_a * (1.0 - 0.5 * w * w) / sqrt(1.0 - 0.25 * w * w)
    if iv_model == IV_SINGLE:
        return inv_a * (1.0 + v / vov)
    return inv_a


cdef inline double _ifb(double v, int ta_model, double gm2, double ib2) noexcept nogil:
    if ta_model == TA_TANH:
        return ib2 * tanh(gm2 * v / ib2)
    return gm2 * v


cdef inline double _difb(double v, int ta_model, double gm2, double ib2) noexcept nogil:
    cdef double t
    if ta_model == TA_TANH:
        t = tanh(gm2 * v / ib2)
        return gm2 * (1.0 - t * t)
    return gm2


cdef void _solve_one(double drive, int iv_model, double inv_a, double vov, int ta_model,
                     double gm2, double ib2, double lo, double hi, double g_lo, double g_hi,
                     double rtol, int max_iter,
                     double* v_out, signed char* status, int* iters, double* resid_out) noexcept nogil:
    cdef double slope0, bound, a, b, v, d, f, r, scale, resid, dg, vn, vp, dp, fp, rp
    cdef int it = 0
    cdef bint converged = False

    if drive == 0.0:
        v_out[0] = 0.0; status[0] = OK; iters[0] = 0; resid_out[0] = 0.0
        return
    if drive >= g_hi:
        v_out[0] = hi; status[0] = SAT_HIGH; iters[0] = 0; resid_out[0] = 0.0
        return
    if drive <= g_lo:
        v_out[0] = lo; status[0] = SAT_LOW; iters[0] = 0; resid_out[0] = 0.0
        return

    slope0 = inv_a - gm2
    bound = fabs(drive) / slope0 * (1.0 + 1e-9) + 1e-300
    a = lo if lo > -INFINITY else -bound
    b = hi if hi < INFINITY else bound

    v = drive / slope0
    if not (a < v < b):
        v = 0.5 * (a + b)

    resid = INFINITY
    while it < max_iter:
        it += 1
        d = _delta(v, iv_model, inv_a, vov)
        f = _ifb(v, ta_model, gm2, ib2)
        r = d - f - drive
        scale = fabs(drive) + fabs(d) + fabs(f)
        resid = fabs(r) / scale
        dg = _ddelta(v, iv_model, inv_a, vov) - _difb(v, ta_model, gm2, ib2)
        if resid <= rtol:
            converged = True
            if dg > 0.0:
                vp = v - r / dg
                if a <= vp <= b:
                    dp = _delta(vp, iv_model, inv_a, vov)
                    fp = _ifb(vp, ta_model, gm2, ib2)
                    rp = dp - fp - drive
                    if fabs(rp) <= fabs(r):
                        v = vp
                        resid = fabs(rp) / (fabs(drive) + fabs(dp) + fabs(fp))
            break
        if r < 0.0:
            a = v
        else:
            b = v
        vn = v - r / dg if dg > 0.0 else NAN
        if not (a < vn < b):
            vn = 0.5 * (a + b)
        if vn == v:
            break
        v = vn

    v_out[0] = v
    status[0] = OK if converged else FAILED
    iters[0] = it
    resid_out[0] = resid


def loop_balance(double v, int iv_model, double inv_a, double vov, int ta_model, double gm2, double ib2):
    """g(v) and g'(v) for a single output deviation."""
    cdef double g = _delta(v, iv_model, inv_a, vov) - _ifb(v, ta_model, gm2, ib2)
    cdef double dg = _ddelta(v, iv_model, inv_a, vov) - _difb(v, ta_model, gm2, ib2)
    return g, dg


def solve_loop(drive, int iv_model, double inv_a, double vov, int ta_model, double gm2, double ib2,
               double lo, double hi, double g_lo, double g_hi, double rtol=1e-12, int max_iter=200):
    """Solve the loop for every drive current.

    Returns ``(v, status, iterations, residual)`` arrays.
    """
    cdef const double[::1] d_in = np.ascontiguousarray(drive, dtype=np.float64)
    cdef Py_ssize_t n = d_in.shape[0]
    v_arr = np.empty(n, dtype=np.float64)
    s_arr = np.empty(n, dtype=np.int8)
    i_arr = np.empty(n, dtype=np.int32)
    r_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] v_mv = v_arr
    cdef signed char[::1] s_mv = s_arr
    cdef int[::1] i_mv = i_arr
    cdef double[::1] r_mv = r_arr
    cdef Py_ssize_t k
    with nogil:
        for k in range(n):
            _solve_one(d_in[k], iv_model, inv_a, vov, ta_model, gm2, ib2, lo, hi, g_lo, g_hi,
                       rtol, max_iter, &v_mv[k], &s_mv[k], &i_mv[k], &r_mv[k])
    return v_arr, s_arr, i_arr, r_arr
