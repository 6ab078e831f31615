"""Complement-window estimation of V, I, and the sandwich Sigma.

V is the expected likelihood Hessian and I the score covariance at the
stationary-regime parameters; both are estimated on the complement of a
candidate shock window with the 1/(n (1 - (tau2 - tau1))) normalization.
The sandwich Sigma = V^{-1} I V^{-1} avoids estimating the innovation
fourth moment separately.  (With normal innovations I = ((mu4-1)/2) V = V,
so Sigma collapses to V^{-1}; that identity is used as a Monte Carlo check,
not in the estimator.)

Note: consistency of the score-covariance estimate needs more innovation
moments (roughly E|zeta|^(8+eps)) than the Hessian part; there is no
runtime check since moment conditions are unverifiable from one sample.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InferenceError
from .likelihood import Window, masked_sums
from .model import GarchParams

__all__ = ["SandwichEstimate", "CumulativeTerms", "cumulative_terms",
           "estimate_v_i", "sandwich"]

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class CumulativeTerms:
    """Prefix sums of per-observation score outer products and Hessians.

    Evaluated once at a fixed theta, these turn any window-complement average
    of the likelihood derivatives into an O(d^2) subtraction, which is what
    the supremum scan needs when it prices hundreds of windows against the
    same reference parameters.  outer_prefix[i] and hess_prefix[i] hold the
    sums over observations 0..i-1 (0-based), so index n is the full-sample
    total.
    """

    outer_prefix: np.ndarray
    hess_prefix: np.ndarray

    @property
    def n(self) -> int:
        return len(self.outer_prefix) - 1

    def complement_v_i(self, i0: int, i1: int):
        """Complement averages (V_bar, I_bar) for the window [i0, i1)."""
        n = self.n
        count = n - (i1 - i0)
        if count <= 0:
            raise InferenceError("complement is empty; nothing to estimate on")
        sum_outer = (self.outer_prefix[n] - self.outer_prefix[i1]
                     + self.outer_prefix[i0])
        sum_h = (self.hess_prefix[n] - self.hess_prefix[i1]
                 + self.hess_prefix[i0])
        v_bar = sum_h / count
        i_bar = sum_outer / count
        v_bar = 0.5 * (v_bar + v_bar.T)
        i_bar = 0.5 * (i_bar + i_bar.T)
        return v_bar, i_bar


def cumulative_terms(x: np.ndarray, theta: GarchParams) -> CumulativeTerms:
    """Per-observation derivative terms at theta, accumulated as prefix sums.

    complement_v_i on the result agrees with estimate_v_i evaluated at the
    same theta up to float summation-order noise (well below 1e-10 relative)
    whenever the per-observation terms share a broadly common scale.  Heavy
    tails break that: one score summand many orders of magnitude above the
    rest makes the prefix differences cancel catastrophically, so the
    direct-sum route (estimate_v_i) is the one production code uses; this
    prefix route exists as an independent cross-check and fast repeated-
    window oracle for well-scaled inputs.
    """
    from . import _kernels

    x = np.asarray(x, dtype=np.float64)
    x2 = np.ascontiguousarray(x * x)
    n = len(x2)
    d = theta.d
    sig2, grad, hess = _kernels.garch_paths(
        x2, theta.as_array(), theta.r, theta.s, n, True, True)
    sig2 = np.asarray(sig2)
    grad = np.asarray(grad)
    hess = np.asarray(hess)

    z = x2 / sig2
    w = 0.5 * (1.0 - z) / sig2
    c_outer = 0.5 * (2.0 * z - 1.0) / (sig2 * sig2)
    go = grad[:, :, None] * grad[:, None, :]

    outer_prefix = np.empty((n + 1, d, d))
    hess_prefix = np.empty((n + 1, d, d))
    outer_prefix[0] = 0.0
    hess_prefix[0] = 0.0
    np.cumsum((w * w)[:, None, None] * go, axis=0, out=outer_prefix[1:])
    np.cumsum(c_outer[:, None, None] * go + w[:, None, None] * hess,
              axis=0, out=hess_prefix[1:])
    return CumulativeTerms(outer_prefix=outer_prefix, hess_prefix=hess_prefix)


@dataclass(frozen=True)
class SandwichEstimate:
    v_bar: np.ndarray
    i_bar: np.ndarray
    sigma_bar: np.ndarray
    sigma_h: np.ndarray
    condition_v: float


def estimate_v_i(x: np.ndarray, window: Optional[Window],
                 theta_bar: GarchParams):
    """Complement averages of the likelihood Hessian and score outer product.

    Both carry the 1/(n (1 - (tau2 - tau1))) normalization; an empty (or
    None) window therefore reproduces the full-sample averages exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if window is None or window.length == 0:
        # Empty and None take one identical single-segment pass so the
        # docstring's exact-equality promise holds bitwise.
        i0 = i1 = 0
        span = 0.0
    else:
        i0, i1 = window.start, window.stop
        span = window.span
    if n - (i1 - i0) <= 0:
        raise InferenceError("complement is empty; nothing to estimate on")

    _, _, sum_h, sum_outer, _, _ = masked_sums(
        x * x, theta_bar, i0, i1, complement=True, need_hess=True)
    norm = n * (1.0 - span)
    v_bar = sum_h / norm
    i_bar = sum_outer / norm
    v_bar = 0.5 * (v_bar + v_bar.T)
    i_bar = 0.5 * (i_bar + i_bar.T)
    return v_bar, i_bar


def sandwich(v_bar: np.ndarray, i_bar: np.ndarray,
             h_direction: np.ndarray) -> SandwichEstimate:
    """Sigma = V^{-1} I V^{-1} by linear solves, plus its H-projection.

    The result is symmetrized and eigenvalue-clipped at zero (warning when
    anything below -1e-6 had to be clipped); a condition number beyond
    CONDITION_LIMIT raises InferenceError suggesting a larger complement.
    """
    v_bar = np.asarray(v_bar, dtype=np.float64)
    i_bar = np.asarray(i_bar, dtype=np.float64)
    h = np.asarray(h_direction, dtype=np.float64)
    if h.ndim == 1:
        h = h[:, None]

    cond = float(np.linalg.cond(v_bar))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise InferenceError(
            f"V estimate is numerically singular (condition number {cond:.3g});"
            " enlarge the complement window or the sample")

    m = np.linalg.solve(v_bar, i_bar)
    sigma = np.linalg.solve(v_bar, m.T).T
    sigma = 0.5 * (sigma + sigma.T)

    eigvals, eigvecs = np.linalg.eigh(sigma)
    if eigvals.min() < -1e-6:
        warnings.warn(
            f"sandwich covariance had eigenvalue {eigvals.min():.3g} < -1e-6; "
            "clipped to zero", RuntimeWarning, stacklevel=2)
    if eigvals.min() < 0.0:
        eigvals = np.clip(eigvals, 0.0, None)
        sigma = (eigvecs * eigvals) @ eigvecs.T
        sigma = 0.5 * (sigma + sigma.T)

    sigma_h = h.T @ sigma @ h
    return SandwichEstimate(v_bar=v_bar, i_bar=i_bar, sigma_bar=sigma,
                            sigma_h=sigma_h, condition_v=cond)
