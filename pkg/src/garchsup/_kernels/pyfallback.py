"""Pure-python backend mirroring the compiled kernels.

The volatility recursion and every one of its derivative recursions share
the same autoregressive polynomial 1 - b_1 z - ... - b_s z^s, so each path
is one scipy.signal.lfilter pass with the appropriate forcing sequence and
initial conditions.  Outputs match the compiled backend to float rounding;
the equivalence is pinned by tests.
"""
import numpy as np
from scipy.signal import lfilter, lfiltic


def _shifted(values, lag, fill):
    """values delayed by `lag` with the pre-sample constant `fill`."""
    if lag == 0:
        return values
    out = np.empty_like(values)
    out[:lag] = fill
    out[lag:] = values[:-lag]
    return out


def _ar_pass(forcing, betas, pre_value):
    """Solve y[i] = forcing[i] + sum_k betas[k] y[i-k], y pre-sample = pre_value."""
    s = len(betas)
    if s == 0:
        return forcing
    a = np.concatenate(([1.0], -np.asarray(betas)))
    zi = lfiltic([1.0], a, y=np.full(s, pre_value))
    out, _ = lfilter([1.0], a, forcing, zi=zi)
    return out


def garch_paths(x2, theta, r, s, nstop, need_grad, need_hess):
    """See the compiled twin: paths of sigma2 and its theta-derivatives."""
    if need_hess:
        need_grad = True
    theta = np.asarray(theta, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)[:nstop]
    d = 1 + r + s
    a0 = theta[0]
    alphas = theta[1:1 + r]
    betas = theta[1 + r:]
    B = betas.sum()
    fp = a0 / (1.0 - B)

    forcing = np.full(nstop, a0)
    for j in range(r):
        forcing += alphas[j] * _shifted(x2, j + 1, 0.0)
    sig2 = _ar_pass(forcing, betas, fp)

    grad = None
    hess = None
    if need_grad:
        grad = np.empty((nstop, d))
        g_b_pre = a0 / (1.0 - B) ** 2
        grad[:, 0] = _ar_pass(np.ones(nstop), betas, 1.0 / (1.0 - B))
        for j in range(r):
            grad[:, 1 + j] = _ar_pass(_shifted(x2, j + 1, 0.0), betas, 0.0)
        for k in range(s):
            grad[:, 1 + r + k] = _ar_pass(_shifted(sig2, k + 1, fp), betas, g_b_pre)

    if need_hess:
        hess = np.zeros((nstop, d, d))
        g_pre = np.zeros(d)
        g_pre[0] = 1.0 / (1.0 - B)
        g_pre[1 + r:] = a0 / (1.0 - B) ** 2
        h_a0b_pre = 1.0 / (1.0 - B) ** 2
        h_bb_pre = 2.0 * a0 / (1.0 - B) ** 3
        for a in range(d):
            for b in range(max(a, 1 + r), d):
                forcing = _shifted(grad[:, a], b - r, g_pre[a]).copy()
                if a >= 1 + r:
                    forcing += _shifted(grad[:, b], a - r, g_pre[b])
                    pre = h_bb_pre
                else:
                    pre = h_a0b_pre if a == 0 else 0.0
                hess[:, a, b] = _ar_pass(forcing, betas, pre)
                if b != a:
                    hess[:, b, a] = hess[:, a, b]

    return sig2, grad, hess


def masked_negloglik_grad(x2, theta, r, s, i0, i1, complement, n_norm):
    """Fused objective twin: masked mean of l_i = (x2/sig2 + log sig2)/2."""
    x2 = np.asarray(x2, dtype=np.float64)
    n_all = x2.shape[0]
    nstop = n_all if complement else i1
    d = 1 + r + s
    sig2, grad, _ = garch_paths(x2, theta, r, s, nstop, True, False)
    if not np.all(np.isfinite(sig2)) or sig2.max(initial=0.0) > 1e280:
        return float("inf"), np.zeros(d)

    if complement:
        parts = [slice(0, i0), slice(i1, n_all)]
    else:
        parts = [slice(i0, i1)]
    f = 0.0
    g = np.zeros(d)
    for sl in parts:
        s2 = sig2[sl]
        if s2.size == 0:
            continue
        z = x2[sl] / s2
        f += 0.5 * (z + np.log(s2)).sum()
        w = 0.5 * (1.0 - z) / s2
        g += grad[sl].T @ w
    return f / n_norm, g / n_norm


def simulate_sigma2(z2, theta_base, theta_shock, r, s, shock_lo, shock_hi,
                    burn, fp):
    """Simulation twin; plain loop (the feedback through x2 prevents lfilter)."""
    z2 = np.asarray(z2, dtype=np.float64)
    tb = np.asarray(theta_base, dtype=np.float64)
    ts = np.asarray(theta_shock, dtype=np.float64)
    mtot = z2.shape[0]
    pad = max(r, s, 1)
    sig2 = np.empty(pad + mtot)
    x2e = np.empty(pad + mtot)
    sig2[:pad] = fp
    x2e[:pad] = fp

    for i in range(pad, pad + mtot):
        obs = i - pad
        th = ts if shock_lo <= obs - burn < shock_hi else tb
        acc = th[0]
        for j in range(r):
            acc += th[1 + j] * x2e[i - 1 - j]
        for k in range(s):
            acc += th[1 + r + k] * sig2[i - 1 - k]
        if not acc < 1e290:
            return sig2[pad:], obs
        sig2[i] = acc
        x2e[i] = z2[obs] * acc

    return sig2[pad:], -1
