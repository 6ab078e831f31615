# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled recursion kernels.

Everything here is a straight transcription of the volatility recursion

    sigma2[i] = a0 + sum_j a[j] * x2[i-j] + sum_k b[k] * sigma2[i-k]

and its first/second parameter derivatives, with the zero-history
initialization: pre-sample x2 = 0 and pre-sample sigma2 equal to the fixed
point a0 / (1 - sum(b)).  The derivative recursions are seeded with the exact
derivatives of that fixed point so the gradients returned are the exact
derivatives of the computed likelihood (finite differences agree to square
root of machine precision).

The python fallback in ``pyfallback.py`` implements the identical
recursions via scipy.signal.lfilter; equivalence is covered by tests.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

# Bail out of likelihood evaluations once sigma2 exceeds this; the point is
# rejected by the line search anyway and we avoid inf/nan propagation.
cdef double SIGMA2_BAIL = 1e280


def garch_paths(double[::1] x2, double[::1] theta, int r, int s, int nstop,
                bint need_grad, bint need_hess):
    """Forward recursion paths for observations 1..nstop.

    Returns (sigma2, grad, hess) where grad has shape (nstop, d) and hess
    (nstop, d, d); grad/hess are None when not requested. d = 1 + r + s and
    theta is laid out as (a0, a_1..a_r, b_1..b_s).
    """
    cdef int d = 1 + r + s
    cdef int pad = max(max(r, s), 1)
    cdef int n = nstop
    cdef int i, j, k, a, b, m
    cdef double acc, B, fp, a0
    cdef double g_a0_pre, g_b_pre, h_a0b_pre, h_bb_pre

    if need_hess:
        need_grad = True

    a0 = theta[0]
    B = 0.0
    for k in range(s):
        B += theta[1 + r + k]
    fp = a0 / (1.0 - B)

    sig2_arr = np.empty(pad + n, dtype=np.float64)
    x2e_arr = np.zeros(pad + n, dtype=np.float64)
    cdef double[::1] sig2 = sig2_arr
    cdef double[::1] x2e = x2e_arr
    for i in range(pad):
        sig2[i] = fp
    for i in range(n):
        x2e[pad + i] = x2[i]

    for i in range(pad, pad + n):
        acc = a0
        for j in range(r):
            acc += theta[1 + j] * x2e[i - 1 - j]
        for k in range(s):
            acc += theta[1 + r + k] * sig2[i - 1 - k]
        sig2[i] = acc

    grad_arr = None
    hess_arr = None
    cdef double[:, ::1] g
    cdef double[:, :, ::1] h

    if need_grad:
        grad_arr = np.empty((pad + n, d), dtype=np.float64)
        g = grad_arr
        g_a0_pre = 1.0 / (1.0 - B)
        g_b_pre = a0 / ((1.0 - B) * (1.0 - B))
        for i in range(pad):
            g[i, 0] = g_a0_pre
            for j in range(r):
                g[i, 1 + j] = 0.0
            for k in range(s):
                g[i, 1 + r + k] = g_b_pre
        for i in range(pad, pad + n):
            acc = 1.0
            for m in range(s):
                acc += theta[1 + r + m] * g[i - 1 - m, 0]
            g[i, 0] = acc
            for j in range(r):
                acc = x2e[i - 1 - j]
                for m in range(s):
                    acc += theta[1 + r + m] * g[i - 1 - m, 1 + j]
                g[i, 1 + j] = acc
            for k in range(s):
                acc = sig2[i - 1 - k]
                for m in range(s):
                    acc += theta[1 + r + m] * g[i - 1 - m, 1 + r + k]
                g[i, 1 + r + k] = acc

    if need_hess:
        hess_arr = np.zeros((pad + n, d, d), dtype=np.float64)
        h = hess_arr
        h_a0b_pre = 1.0 / ((1.0 - B) * (1.0 - B))
        h_bb_pre = 2.0 * a0 / ((1.0 - B) * (1.0 - B) * (1.0 - B))
        for i in range(pad):
            for k in range(s):
                h[i, 0, 1 + r + k] = h_a0b_pre
                for m in range(k, s):
                    h[i, 1 + r + k, 1 + r + m] = h_bb_pre
        # Only entries with at least one beta index are nonzero; iterate the
        # upper triangle restricted to b >= 1 + r.
        for i in range(pad, pad + n):
            for a in range(d):
                b = a if a > r else 1 + r
                while b < d:
                    acc = 0.0
                    for m in range(s):
                        acc += theta[1 + r + m] * h[i - 1 - m, a, b]
                    if a >= 1 + r:
                        acc += g[i - (a - r), b]
                    acc += g[i - (b - r), a]
                    h[i, a, b] = acc
                    b += 1
        for i in range(pad, pad + n):
            for a in range(d):
                for b in range(a + 1, d):
                    h[i, b, a] = h[i, a, b]

    sig2_out = sig2_arr[pad:]
    grad_out = grad_arr[pad:] if need_grad else None
    hess_out = hess_arr[pad:] if need_hess else None
    return sig2_out, grad_out, hess_out


def masked_negloglik_grad(double[::1] x2, double[::1] theta, int r, int s,
                          int i0, int i1, bint complement, double n_norm):
    """Fused objective: (1/n_norm) * sum over the mask of l_i, with gradient.

    Window mode sums observations [i0, i1) (0-based); complement mode sums
    [0, i0) and [i1, len(x2)).  The recursion always starts at observation 0
    (truncation anchored at the first observation) and stops at i1 in window
    mode since later observations cannot contribute.
    """
    cdef int n_all = x2.shape[0]
    cdef int nstop = n_all if complement else i1
    cdef int d = 1 + r + s
    cdef int pad = max(max(r, s), 1)
    cdef int i, j, k, m, obs
    cdef bint in_mask
    cdef double acc, B, fp, a0, s2, z, w, f
    cdef double g_a0_pre, g_b_pre

    a0 = theta[0]
    B = 0.0
    for k in range(s):
        B += theta[1 + r + k]
    fp = a0 / (1.0 - B)

    sig2_arr = np.empty(pad + nstop, dtype=np.float64)
    x2e_arr = np.zeros(pad + nstop, dtype=np.float64)
    g_arr = np.empty((pad + nstop, d), dtype=np.float64)
    gout_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] sig2 = sig2_arr
    cdef double[::1] x2e = x2e_arr
    cdef double[:, ::1] g = g_arr
    cdef double[::1] gout = gout_arr

    g_a0_pre = 1.0 / (1.0 - B)
    g_b_pre = a0 / ((1.0 - B) * (1.0 - B))
    for i in range(pad):
        sig2[i] = fp
        g[i, 0] = g_a0_pre
        for j in range(r):
            g[i, 1 + j] = 0.0
        for k in range(s):
            g[i, 1 + r + k] = g_b_pre
    for i in range(nstop):
        x2e[pad + i] = x2[i]

    f = 0.0
    for i in range(pad, pad + nstop):
        acc = a0
        for j in range(r):
            acc += theta[1 + j] * x2e[i - 1 - j]
        for k in range(s):
            acc += theta[1 + r + k] * sig2[i - 1 - k]
        if acc > SIGMA2_BAIL:
            return float("inf"), np.zeros(d)
        sig2[i] = acc

        acc = 1.0
        for m in range(s):
            acc += theta[1 + r + m] * g[i - 1 - m, 0]
        g[i, 0] = acc
        for j in range(r):
            acc = x2e[i - 1 - j]
            for m in range(s):
                acc += theta[1 + r + m] * g[i - 1 - m, 1 + j]
            g[i, 1 + j] = acc
        for k in range(s):
            acc = sig2[i - 1 - k]
            for m in range(s):
                acc += theta[1 + r + m] * g[i - 1 - m, 1 + r + k]
            g[i, 1 + r + k] = acc

        obs = i - pad
        if complement:
            in_mask = obs < i0 or obs >= i1
        else:
            in_mask = i0 <= obs and obs < i1
        if in_mask:
            s2 = sig2[i]
            z = x2e[i] / s2
            f += 0.5 * (z + log(s2))
            w = 0.5 * (1.0 - z) / s2
            for j in range(d):
                gout[j] += w * g[i, j]

    f /= n_norm
    for j in range(d):
        gout[j] /= n_norm
    return f, gout_arr


def simulate_sigma2(double[::1] z2, double[::1] theta_base,
                    double[::1] theta_shock, int r, int s,
                    long shock_lo, long shock_hi, long burn, double fp):
    """Simulate the variance recursion driven by squared innovations z2.

    z2 covers burn-in plus the kept sample; observation index obs counts from
    0 over the whole draw and the shocked parameters apply when
    shock_lo <= obs - burn < shock_hi.  Pre-sample sigma2 and x2 are set to
    fp.  Returns (sigma2 over all draws, -1) or (partial, obs_index) on
    overflow.
    """
    cdef long mtot = z2.shape[0]
    cdef int pad = max(max(r, s), 1)
    cdef long i, obs, post
    cdef int j, k
    cdef double acc
    cdef double[::1] th

    sig2_arr = np.empty(pad + mtot, dtype=np.float64)
    x2e_arr = np.empty(pad + mtot, dtype=np.float64)
    cdef double[::1] sig2 = sig2_arr
    cdef double[::1] x2e = x2e_arr
    for i in range(pad):
        sig2[i] = fp
        x2e[i] = fp

    for i in range(pad, pad + mtot):
        obs = i - pad
        post = obs - burn
        if shock_lo <= post < shock_hi:
            th = theta_shock
        else:
            th = theta_base
        acc = th[0]
        for j in range(r):
            acc += th[1 + j] * x2e[i - 1 - j]
        for k in range(s):
            acc += th[1 + r + k] * sig2[i - 1 - k]
        if not (acc < 1e290):  # catches inf and nan as well
            return sig2_arr[pad:], obs
        sig2[i] = acc
        x2e[i] = z2[obs] * acc

    return sig2_arr[pad:], -1
