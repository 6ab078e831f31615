"""Windowed quasi-maximum-likelihood estimation.

The constrained problem min over Theta of the windowed likelihood is mapped
to unconstrained coordinates u through a smooth bijection:

    alpha0 = alpha_min + exp(u[0])
    alpha_j = exp(u[j]),                     j = 1..r
    beta    = beta_sum_max * softmax-with-rest(v),  v = u[1+r:]

where the softmax keeps an implicit extra class so sum(betas) stays
strictly below beta_sum_max.  Minimization is quasi-Newton: BFGS inverse
updates with an Armijo backtracking line search on the analytic gradient,
with a Nelder-Mead rescue (scipy) plus re-polish when the line search
stalls before the gradient tolerance is met.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .exceptions import ConfigError, FitError
from .likelihood import Window, masked_sums
from .model import GarchParams, ParameterSpace

__all__ = ["FitOptions", "FitResult", "fit_window", "fit_complement"]

# Smallest window (in observations) accepted for a fit, per parameter count.
MIN_OBS_PER_PARAM = 10

# Variance of x^2/sigma2 below this flags (near-)degenerate innovations:
# for genuine GARCH data it estimates mu4 - 1 >= ~0.5, while zeta^2 == 1
# drives it to 0.
_DEGENERACY_FLOOR = 1e-3

_BOUNDARY_EXP = 1e-10   # exp(u) below this counts as "at the zero boundary"
_BOUNDARY_REST = 1e-8   # softmax rest-class mass below this: beta-sum cap hit

# Starts kept for the 12-iteration exploration stage after the one-shot
# objective probe ranks them.
_EXPLORE_KEEP = 2


@dataclass(frozen=True)
class FitOptions:
    """Optimizer knobs. The defaults match the documented contract."""

    tol: float = 1e-8
    maxiter: int = 200
    explore_iters: int = 12
    starts: Optional[Sequence[GarchParams]] = None
    fix_alpha0: Optional[float] = None
    rescue: bool = True


@dataclass(frozen=True)
class FitResult:
    theta_hat: GarchParams
    neg_loglik: float
    converged: bool
    iterations: int
    grad_norm: float
    at_boundary: bool


# ---------------------------------------------------------------------------
# Reparameterization


def theta_from_u(u: np.ndarray, space: ParameterSpace) -> np.ndarray:
    """Map unconstrained coordinates into Theta (as a raw parameter array)."""
    r, s = space.r, space.s
    # exp() overflow guard; the objective at such points is astronomically
    # poor, so the hard clip is never where a minimizer settles.
    u = np.clip(u, -700.0, 60.0)
    th = np.empty(1 + r + s)
    th[0] = space.alpha_min + math.exp(u[0])
    th[1:1 + r] = np.exp(u[1:1 + r])
    if s:
        v = u[1 + r:]
        m = max(0.0, float(v.max()))
        e = np.exp(v - m)
        rest = math.exp(-m)
        th[1 + r:] = space.beta_sum_max * e / (rest + e.sum())
    return th


def u_from_theta(theta: np.ndarray, space: ParameterSpace) -> np.ndarray:
    """Inverse map; interior points round-trip to 1e-12."""
    r, s = space.r, space.s
    theta = np.asarray(theta, dtype=np.float64)
    u = np.empty(1 + r + s)
    u[0] = math.log(max(theta[0] - space.alpha_min, 1e-300))
    u[1:1 + r] = np.log(np.maximum(theta[1:1 + r], 1e-300))
    if s:
        t = theta[1 + r:] / space.beta_sum_max
        rest = 1.0 - t.sum()
        if rest <= 0.0:  # on or past the cap; nudge inside
            t = t * (1.0 - 1e-10) / t.sum()
            rest = 1.0 - t.sum()
        u[1 + r:] = np.log(np.maximum(t, 1e-300)) - math.log(rest)
    return u


def jac_theta_u(theta: np.ndarray, space: ParameterSpace) -> np.ndarray:
    """Jacobian d theta / d u at theta (theta must be the image of u)."""
    r, s = space.r, space.s
    d = 1 + r + s
    jac = np.zeros((d, d))
    jac[0, 0] = theta[0] - space.alpha_min
    for j in range(1, 1 + r):
        jac[j, j] = theta[j]
    if s:
        beta = theta[1 + r:]
        # d beta_k / d v_l = beta_k (delta_kl - beta_l / beta_sum_max)
        jac[1 + r:, 1 + r:] = (np.diag(beta)
                               - np.outer(beta, beta) / space.beta_sum_max)
    return jac


def _grad_u(theta: np.ndarray, g_theta: np.ndarray,
            space: ParameterSpace) -> np.ndarray:
    """jac_theta_u(theta).T @ g_theta without building the matrix.

    Exploits the Jacobian structure: diagonal in the alpha block, and
    diag(beta) - beta beta'/beta_sum_max in the beta block.
    """
    r, s = space.r, space.s
    out = np.empty_like(g_theta)
    out[0] = (theta[0] - space.alpha_min) * g_theta[0]
    out[1:1 + r] = theta[1:1 + r] * g_theta[1:1 + r]
    if s:
        beta = theta[1 + r:]
        gb = g_theta[1 + r:]
        out[1 + r:] = beta * gb - beta * ((beta @ gb) / space.beta_sum_max)
    return out


# ---------------------------------------------------------------------------
# Quasi-Newton driver


def _bfgs_backtracking(fun: Callable, u0: np.ndarray, tol: float,
                       maxiter: int, f0: Optional[float] = None,
                       g0: Optional[np.ndarray] = None):
    """BFGS with Armijo backtracking.

    fun(u) -> (value, gradient).  Returns (u, f, g, iterations, stalled):
    stalled means the line search could not make progress before the
    gradient norm reached tol.  f0/g0, when given, reuse an evaluation of
    fun(u0).
    """
    u = np.asarray(u0, dtype=np.float64).copy()
    if f0 is None:
        f, g = fun(u)
    else:
        f, g = f0, g0
    if not math.isfinite(f):
        return u, f, g, 0, True
    d = u.size
    eye = np.eye(d)
    h_inv = eye.copy()
    iters = 0
    stalled = False
    tol2 = tol * tol

    while g @ g > tol2 and iters < maxiter:
        p = -(h_inv @ g)
        pn2 = p @ p
        gp = g @ p
        if not math.isfinite(pn2) or gp >= 0.0:
            h_inv = eye.copy()
            p = -g
            pn2 = p @ p
            gp = -pn2
        # Cap the step so a badly scaled inverse-Hessian guess cannot jump
        # into the exp() overflow region.
        if pn2 > 2500.0:
            scale = 50.0 / math.sqrt(pn2)
            p *= scale
            gp *= scale

        step = 1.0
        f_new = g_new = None
        while step > 1e-16:
            f_try, g_try = fun(u + step * p)
            if math.isfinite(f_try) and f_try <= f + 1e-4 * step * gp:
                f_new, g_new = f_try, g_try
                break
            step *= 0.5
        if f_new is None:
            stalled = True
            break

        s_vec = step * p
        y_vec = g_new - g
        sy = s_vec @ y_vec
        if sy > 1e-12 * math.sqrt((s_vec @ s_vec) * (y_vec @ y_vec)):
            # Inverse update in expanded form; h_inv stays symmetric.
            rho = 1.0 / sy
            hy = h_inv @ y_vec
            c = rho * (1.0 + rho * (y_vec @ hy))
            h_inv -= rho * (np.multiply.outer(s_vec, hy)
                            + np.multiply.outer(hy, s_vec))
            h_inv += c * np.multiply.outer(s_vec, s_vec)
        u = u + s_vec
        f, g = f_new, g_new
        iters += 1

    return u, f, g, iters, stalled


# ---------------------------------------------------------------------------
# Objective assembly and the fit drivers


def _make_objective(x2: np.ndarray, space: ParameterSpace, i0: int, i1: int,
                    complement: bool, n_norm: float,
                    fix_alpha0: Optional[float]):
    """Objective on u-coordinates returning (value, transformed gradient)."""
    r, s = space.r, space.s

    if fix_alpha0 is None:
        def fun(u):
            theta = theta_from_u(u, space)
            f, g_theta = _kernels.masked_negloglik_grad(
                x2, theta, r, s, i0, i1, complement, n_norm)
            if not math.isfinite(f):
                return float("inf"), np.zeros(u.size)
            return f, _grad_u(theta, np.asarray(g_theta), space)
        return fun

    a0 = float(fix_alpha0)
    if a0 < space.alpha_min:
        raise ConfigError(
            f"fix_alpha0={a0} lies below alpha_min={space.alpha_min}")

    def fun_fixed(u_red):
        u_full = np.concatenate(([0.0], u_red))
        theta = theta_from_u(u_full, space)
        theta[0] = a0
        f, g_theta = _kernels.masked_negloglik_grad(
            x2, theta, r, s, i0, i1, complement, n_norm)
        if not math.isfinite(f):
            return float("inf"), np.zeros(u_red.size)
        return f, _grad_u(theta, np.asarray(g_theta), space)[1:]
    return fun_fixed


def default_starts(x2_mask: np.ndarray, space: ParameterSpace):
    """Deterministic 4-point start grid; the first is moment-matched."""
    r, s = space.r, space.s
    m2 = max(float(np.mean(x2_mask)), space.alpha_min * 10.0, 1e-8)

    def build(weight, a_total, b_total):
        alphas = (a_total / r,) * r
        betas = (b_total / s,) * s if s else ()
        a0 = max(weight * m2, space.alpha_min * (1.0 + 1e-6))
        return GarchParams(min(a0, space.upper[0]), alphas, betas)

    if s:
        return [build(0.1, 0.1, 0.8), build(0.05, 0.05, 0.9),
                build(0.5, 0.3, 0.2), build(0.3, 0.2, 0.5)]
    return [build(0.1, 0.6, 0.0), build(0.05, 0.9, 0.0),
            build(0.5, 0.3, 0.0), build(0.3, 0.5, 0.0)]


def _clip_to_space(th: np.ndarray, space: ParameterSpace):
    """Clamp a parameter array into the box; reports whether it moved."""
    upper = np.asarray(space.upper)
    clipped = np.minimum(th, upper)
    clipped[0] = max(clipped[0], space.alpha_min)
    return clipped, bool(np.any(clipped != th))


def _fit_masked(x2: np.ndarray, space: ParameterSpace, i0: int, i1: int,
                complement: bool, n_norm: float, opts: FitOptions,
                mask_count: int) -> FitResult:
    if mask_count < MIN_OBS_PER_PARAM * space.d:
        raise ConfigError(
            f"fit needs at least {MIN_OBS_PER_PARAM * space.d} observations "
            f"for {space.d} parameters, got {mask_count}")

    fun = _make_objective(x2, space, i0, i1, complement, n_norm,
                          opts.fix_alpha0)
    if complement:
        mask_x2 = np.concatenate((x2[:i0], x2[i1:]))
    else:
        mask_x2 = x2[i0:i1]

    if opts.starts is not None:
        starts = list(opts.starts)
        if not starts:
            raise ConfigError("opts.starts must not be empty when given")
    else:
        starts = default_starts(mask_x2, space)

    def to_u(params: GarchParams):
        u_full = u_from_theta(params.as_array(), space)
        return u_full[1:] if opts.fix_alpha0 is not None else u_full

    # Stage 1: probe every start with one evaluation, then run the short
    # exploration stage from the two most promising ones only.
    probes = []
    for idx, start in enumerate(starts):
        u0 = to_u(start)
        f0, g0 = fun(u0)
        if math.isfinite(f0):
            probes.append((f0, idx, u0, g0))
    if not probes:
        raise FitError(
            "all starting points produced a non-finite likelihood",
            diagnostics={"starts": [s.as_array().tolist() for s in starts]})
    probes.sort(key=lambda t: (t[0], t[1]))

    total_iters = 0
    explored = []
    for f0, _, u0, g0 in probes[:_EXPLORE_KEEP]:
        u, f, g, iters, _ = _bfgs_backtracking(
            fun, u0, opts.tol, opts.explore_iters, f0=f0, g0=g0)
        total_iters += iters
        explored.append((f, u))
    explored.sort(key=lambda t: t[0])
    f_best, u_best = explored[0]

    # Stage 2: refine the winner to full tolerance.
    u, f, g, iters, stalled = _bfgs_backtracking(
        fun, u_best, opts.tol, opts.maxiter)
    total_iters += iters
    grad_norm = float(np.linalg.norm(g))

    # Rescue: simplex restart plus one more quasi-Newton polish.
    if stalled and grad_norm > opts.tol and opts.rescue:
        from scipy.optimize import minimize

        res = minimize(lambda uu: fun(uu)[0], u, method="Nelder-Mead",
                       options={"maxiter": 400 * u.size, "xatol": 1e-12,
                                "fatol": 1e-14})
        if np.isfinite(res.fun) and res.fun <= f:
            u2, f2, g2, it2, _ = _bfgs_backtracking(
                fun, res.x, opts.tol, opts.maxiter)
            if np.isfinite(f2) and f2 <= f:
                u, f, g = u2, f2, g2
                grad_norm = float(np.linalg.norm(g))
                total_iters += it2

    if not np.isfinite(f):
        raise FitError("optimization did not reach a finite likelihood")

    u_full = (np.concatenate(([0.0], u)) if opts.fix_alpha0 is not None
              else np.asarray(u))
    theta = theta_from_u(u_full, space)
    if opts.fix_alpha0 is not None:
        theta[0] = float(opts.fix_alpha0)

    at_boundary = False
    if math.exp(min(u_full[0], 60.0)) < _BOUNDARY_EXP and opts.fix_alpha0 is None:
        at_boundary = True
    if np.any(np.exp(np.minimum(u_full[1:1 + space.r], 60.0)) < _BOUNDARY_EXP):
        at_boundary = True
    if space.s and theta[1 + space.r:].sum() > space.beta_sum_max * (1.0 - _BOUNDARY_REST):
        at_boundary = True

    theta, moved = _clip_to_space(theta, space)
    converged = grad_norm <= opts.tol
    if moved:
        # Re-evaluate at the clamped point; the optimum was outside the box.
        at_boundary = True
        converged = False
        f, g_theta = _kernels.masked_negloglik_grad(
            x2, theta, space.r, space.s, i0, i1, complement, n_norm)
        grad_norm = float(np.linalg.norm(g_theta))

    params = GarchParams.from_array(theta, space.r, space.s)

    # Degenerate innovations produce an exact-fit ridge: surface it rather
    # than returning an estimate from an unidentified model.
    sig2_fit, _, _ = _kernels.garch_paths(
        x2, theta, space.r, space.s, len(x2) if complement else i1,
        False, False)
    sig2_fit = np.asarray(sig2_fit)
    if complement:
        z = np.concatenate((x2[:i0] / sig2_fit[:i0], x2[i1:] / sig2_fit[i1:]))
    else:
        z = x2[i0:i1] / sig2_fit[i0:i1]
    if float(np.var(z)) < _DEGENERACY_FLOOR:
        raise FitError(
            "standardized squared residuals are (near-)degenerate; the "
            "quasi-likelihood is not identified under zeta^2 ~ constant",
            diagnostics={"var_z": float(np.var(z)),
                         "theta": theta.tolist(),
                         "at_boundary": True})

    return FitResult(theta_hat=params, neg_loglik=float(f),
                     converged=bool(converged), iterations=int(total_iters),
                     grad_norm=grad_norm, at_boundary=bool(at_boundary))


def fit_window(x: np.ndarray, window: Window, space: ParameterSpace,
               opts: FitOptions = FitOptions()) -> FitResult:
    """QMLE over one window: argmin over Theta of the windowed likelihood."""
    x = np.asarray(x, dtype=np.float64)
    if window.n != len(x):
        raise ConfigError(
            f"window built for n={window.n} but series has length {len(x)}")
    x2 = np.ascontiguousarray(x * x)
    return _fit_masked(x2, space, window.start, window.stop, False,
                       float(window.n), opts, window.length)


def fit_complement(x: np.ndarray, window: Optional[Window],
                   space: ParameterSpace,
                   opts: FitOptions = FitOptions()) -> FitResult:
    """QMLE over everything outside the window (window None/empty = all).

    The sigma2 path is still computed from observation 1 onward; only the
    likelihood contributions inside the window are skipped.
    """
    x = np.asarray(x, dtype=np.float64)
    if window is None:
        i0 = i1 = 0
    else:
        if window.n != len(x):
            raise ConfigError(
                f"window built for n={window.n} but series has length {len(x)}")
        i0, i1 = window.start, window.stop
    x2 = np.ascontiguousarray(x * x)
    return _fit_masked(x2, space, i0, i1, True, float(len(x)), opts,
                       len(x) - (i1 - i0))
