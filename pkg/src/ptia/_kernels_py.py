"""Pure-Python feedback-loop kernel (fallback for the compiled ``_kernels``).

Both implementations solve, point by point, the loop balance

    g(v) = delta(v) - i_fb(v) = drive

where ``delta`` is the I-V converter current needed for an output deviation
``v`` and ``i_fb`` the feedback TA current. ``g`` is strictly increasing on
``[lo, hi]`` (the caller guarantees this); drives outside ``[g_lo, g_hi]``
saturate at the bracket ends.

The two files must stay line-for-line equivalent in arithmetic order.
"""

import math

import numpy as np

IV_LINEAR = 0
IV_PAIR = 1
IV_SINGLE = 2
TA_LINEAR = 0
TA_TANH = 1

OK = 0
SAT_LOW = 1
SAT_HIGH = 2
FAILED = 3


def _delta(v, iv_model, inv_a, vov):
    if iv_model == IV_PAIR:
        w = v / vov
        return v * inv_a * math.sqrt(1.0 - 0.25 * w * w)
    if iv_model == IV_SINGLE:
        return v * inv_a * (1.0 + 0.5 * v / vov)
    return v * inv_a


def _ddelta(v, iv_model, inv_a, vov):
    if iv_model == IV_PAIR:
        w = v / vov
        return inv_a * (1.0 - 0.5 * w * w) / math.sqrt(1.0 - 0.25 * w * w)
    if iv_model == IV_SINGLE:
        return inv_a * (1.0 + v / vov)
    return inv_a


def _ifb(v, ta_model, gm2, ib2):
    if ta_model == TA_TANH:
        return ib2 * math.tanh(gm2 * v / ib2)
    return gm2 * v


def _difb(v, ta_model, gm2, ib2):
    if ta_model == TA_TANH:
        t = math.tanh(gm2 * v / ib2)
        return gm2 * (1.0 - t * t)
    return gm2


def loop_balance(v, iv_model, inv_a, vov, ta_model, gm2, ib2):
    """g(v) and g'(v) for a single output deviation."""
    g = _delta(v, iv_model, inv_a, vov) - _ifb(v, ta_model, gm2, ib2)
    dg = _ddelta(v, iv_model, inv_a, vov) - _difb(v, ta_model, gm2, ib2)
    return g, dg


def _solve_one(drive, iv_model, inv_a, vov, ta_model, gm2, ib2, lo, hi, g_lo, g_hi, rtol, max_iter):
    if drive == 0.0:
        return 0.0, OK, 0, 0.0
    if drive >= g_hi:
        return hi, SAT_HIGH, 0, 0.0
    if drive <= g_lo:
        return lo, SAT_LOW, 0, 0.0

    slope0 = inv_a - gm2
    bound = abs(drive) / slope0 * (1.0 + 1e-9) + 1e-300
    a = lo if lo > -math.inf else -bound
    b = hi if hi < math.inf else bound

    v = drive / slope0
    if not a < v < b:
        v = 0.5 * (a + b)

    converged = False
    resid = math.inf
    it = 0
    while it < max_iter:
        it += 1
        d = _delta(v, iv_model, inv_a, vov)
        f = _ifb(v, ta_model, gm2, ib2)
        r = d - f - drive
        scale = abs(drive) + abs(d) + abs(f)
        resid = abs(r) / scale
        dg = _ddelta(v, iv_model, inv_a, vov) - _difb(v, ta_model, gm2, ib2)
        if resid <= rtol:
            converged = True
            # one polishing Newton step, kept only if it does not worsen the residual
            if dg > 0.0:
                vp = v - r / dg
                if a <= vp <= b:
                    dp = _delta(vp, iv_model, inv_a, vov)
                    fp = _ifb(vp, ta_model, gm2, ib2)
                    rp = dp - fp - drive
                    if abs(rp) <= abs(r):
                        v = vp
                        resid = abs(rp) / (abs(drive) + abs(dp) + abs(fp))
            break
        if r < 0.0:
            a = v
        else:
            b = v
        vn = v - r / dg if dg > 0.0 else math.nan
        if not a < vn < b:
            vn = 0.5 * (a + b)
        if vn == v:
            break
        v = vn

    return v, (OK if converged else FAILED), it, resid


def solve_loop(drive, iv_model, inv_a, vov, ta_model, gm2, ib2, lo, hi, g_lo, g_hi, rtol=1e-12, max_iter=200):
    """Solve the loop for every drive current.

    Returns ``(v, status, iterations, residual)`` arrays.
    """
    drive = np.ascontiguousarray(drive, dtype=np.float64)
    n = drive.shape[0]
    v_out = np.empty(n, dtype=np.float64)
    status = np.empty(n, dtype=np.int8)
    iters = np.empty(n, dtype=np.int32)
    resid = np.empty(n, dtype=np.float64)
    for k in range(n):
        v_out[k], status[k], iters[k], resid[k] = _solve_one(
            float(drive[k]), iv_model, inv_a, vov, ta_model, gm2, ib2, lo, hi, g_lo, g_hi, rtol, max_iter
        )
    return v_out, status, iters, resid
