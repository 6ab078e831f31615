"""Truncated quasi log-likelihood and its analytic derivatives.

The per-observation contribution is l_i(theta) = (X_i^2/sigma_i^2(theta)
+ log sigma_i^2(theta)) / 2, where sigma_i^2(theta) follows the volatility
recursion started from zero history: pre-sample X^2 = 0 and pre-sample
sigma^2 at the implied fixed point alpha0 / (1 - sum(betas)).  Window sums
are always normalized by 1/n (the full series length), never by the window
length; the (tau2 - tau1) factors appear only in the covariance and test
statistic formulas that carry them explicitly.

Gradient and Hessian are exact derivatives of the computed quantity: the
derivative recursions are seeded with the derivatives of the pre-sample
fixed point, so central finite differences agree to roundoff-limited
accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import ConfigError
from .model import GarchParams

__all__ = ["Window", "LikEval", "sigma2_path", "neg_loglik",
           "neg_loglik_grad_hess"]

# Guard against binary-float fuzz in floor(n * j/L): grid fractions such as
# 3/30 can land an ulp under the exact value and shift the index by one.
_FLOOR_EPS = 1e-9


def frac_index(n: int, tau: float) -> int:
    """floor(n * tau) with protection against an ulp of downward fuzz."""
    return int(math.floor(n * tau + _FLOOR_EPS))


@dataclass(frozen=True)
class Window:
    """Fractional observation interval (tau1, tau2] over a series of length n.

    Covers 1-based observations floor(n*tau1)+1 .. floor(n*tau2), i.e. the
    0-based half-open range [start, stop).  tau1 == tau2 constructs the empty
    window, which is rejected by the likelihood operations but accepted by
    complement-side routines (empty window <=> full-sample complement).
    """

    tau1: float
    tau2: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.tau1 <= self.tau2 <= 1.0:
            raise ConfigError(
                f"need 0 <= tau1 <= tau2 <= 1, got ({self.tau1}, {self.tau2})")
        if self.n < 1:
            raise ConfigError(f"series length must be positive, got {self.n}")

    @property
    def start(self) -> int:
        """0-based inclusive start index."""
        return frac_index(self.n, self.tau1)

    @property
    def stop(self) -> int:
        """0-based exclusive stop index."""
        return frac_index(self.n, self.tau2)

    @property
    def length(self) -> int:
        return self.stop - self.start

    @property
    def span(self) -> float:
        return self.tau2 - self.tau1

    def is_empty(self) -> bool:
        return self.length == 0


@dataclass(frozen=True)
class LikEval:
    """Value, gradient, and Hessian of the windowed likelihood at theta."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    per_obs_sigma2: np.ndarray


def _check_window(x: np.ndarray, window: Window) -> None:
    if window.n != len(x):
        raise ConfigError(
            f"window built for n={window.n} but series has length {len(x)}")
    if window.is_empty():
        raise ConfigError("window is empty")
    if window.stop > len(x):
        raise ConfigError("window extends past the series")


def sigma2_path(x_squared: np.ndarray, params: GarchParams) -> np.ndarray:
    """Fitted sigma_i^2(theta) for i = 1..n via one forward pass."""
    x_squared = np.ascontiguousarray(x_squared, dtype=np.float64)
    sig2, _, _ = _kernels.garch_paths(
        x_squared, params.as_array(), params.r, params.s, len(x_squared),
        False, False)
    return np.asarray(sig2)


def neg_loglik(x: np.ndarray, window: Window, params: GarchParams) -> float:
    """(1/n) sum of l_i over the window (truncation anchored at obs 1)."""
    x = np.asarray(x, dtype=np.float64)
    _check_window(x, window)
    x2 = np.ascontiguousarray(x * x)
    f, _ = _kernels.masked_negloglik_grad(
        x2, params.as_array(), params.r, params.s, window.start, window.stop,
        False, float(window.n))
    return float(f)


def masked_sums(x2: np.ndarray, params: GarchParams, i0: int, i1: int,
                complement: bool, need_hess: bool = True):
    """Raw sums over a window or its complement of the per-observation
    likelihood, gradient, Hessian, and score outer product.

    Returns (sum_l, sum_g, sum_h, sum_outer, count, sigma2_path); sum_h and
    sum_outer are None when need_hess is False.  Callers apply their own
    normalization (1/n for the likelihood, 1/(n(1-(tau2-tau1))) for the
    complement covariance estimators).
    """
    x2 = np.ascontiguousarray(x2, dtype=np.float64)
    n_all = len(x2)
    nstop = n_all if complement else i1
    d = params.d
    sig2, grad, hess = _kernels.garch_paths(
        x2, params.as_array(), params.r, params.s, nstop, True, need_hess)
    sig2 = np.asarray(sig2)
    grad = np.asarray(grad)

    parts = ([slice(0, i0), slice(i1, n_all)] if complement
             else [slice(i0, i1)])
    sum_l = 0.0
    sum_g = np.zeros(d)
    sum_h = np.zeros((d, d)) if need_hess else None
    sum_outer = np.zeros((d, d)) if need_hess else None
    count = 0
    for sl in parts:
        s2 = sig2[sl]
        if s2.size == 0:
            continue
        count += s2.size
        z = x2[sl] / s2
        g_sl = grad[sl]
        sum_l += float(0.5 * (z + np.log(s2)).sum())
        w = 0.5 * (1.0 - z) / s2
        sum_g += g_sl.T @ w
        if need_hess:
            c_outer = 0.5 * (2.0 * z - 1.0) / (s2 * s2)
            sum_h += (g_sl * c_outer[:, None]).T @ g_sl
            sum_h += np.tensordot(w, np.asarray(hess)[sl], axes=1)
            sum_outer += (g_sl * (w * w)[:, None]).T @ g_sl
    return sum_l, sum_g, sum_h, sum_outer, count, sig2


def neg_loglik_grad_hess(x: np.ndarray, window: Window,
                         params: GarchParams) -> LikEval:
    """Windowed likelihood with exact gradient and Hessian (1/n weights)."""
    x = np.asarray(x, dtype=np.float64)
    _check_window(x, window)
    x2 = x * x
    sum_l, sum_g, sum_h, _, _, sig2 = masked_sums(
        x2, params, window.start, window.stop, complement=False)
    n = float(window.n)
    hess = sum_h / n
    hess = 0.5 * (hess + hess.T)  # symmetrize away accumulation noise
    return LikEval(
        value=sum_l / n,
        gradient=sum_g / n,
        hessian=hess,
        per_obs_sigma2=sig2[window.start:window.stop].copy(),
    )
