"""The double-supremum change-period test.

For every admissible grid window (tau1, tau2) the statistic

    B_n(tau1, tau2) = sqrt(n) (tau2-tau1)^chi {H' Sigma_bar H}^{-1/2}
                      (H' theta_hat - c_bar)

is computed from the window QMLE theta_hat and the complement sandwich
Sigma_bar; the test rejects when the supremum over the grid exceeds a
Monte Carlo quantile of the matching functional of partial sums of
standard normals.  On rejection the changed period is dated by the argmax
window and the window parameters are re-estimated with asymptotic
confidence intervals.

Sigma_bar averages the score and Hessian terms over each window's
complement — so a change confined to the window cannot contaminate its own
denominator.  The evaluation point is a shrunk complement fit,

    theta_eval = w * theta_bar + (1 - w) * theta_hat_full,
    w = c_obs / (c_obs + 50),

where theta_bar is the complement QMLE, theta_hat_full the full-sample
QMLE, and c_obs the number of complement observations.  Under the null
both fits estimate the same stationary-regime parameters, so theta_eval
does too; as c_obs grows the weight tends to one and the estimator becomes
the plain complement sandwich.  The shrinkage only matters on short
complements (down to kappa'*n observations), where the raw complement fit
is noisy enough that the projected variance H' Sigma_bar H collapses by
orders of magnitude on a nontrivial fraction of windows, inflating the
supremum far beyond its nominal level; anchoring a small part of the
evaluation point at the well-conditioned full-sample fit removes that
heavy lower tail while keeping the complement the sole source of the
index sums.

When c_bar is re-estimated per window from the complement fit (complement
mode), the statistic carries an extra sqrt(1 - (tau2-tau1)) factor: the
difference H'theta_hat - H'theta_bar then has two independent estimation
errors whose combined variance is Sigma_H [1/(n span) + 1/(n (1-span))],
and the factor restores the unit marginal variance that the Monte Carlo
critical values assume.  With a fixed c_bar the reference is noiseless and
no factor applies.

The test is one-sided: the alternative of interest is an upward shift
H' theta > c_bar (explosive or persistence-increasing shocks).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ._stats import norm_ppf
from .covariance import estimate_v_i, sandwich
from .exceptions import ConfigError, FitError, InferenceError
from .likelihood import Window, frac_index
from .model import GarchParams, ParameterSpace
from .qmle import FitOptions, default_starts, fit_complement, fit_window

__all__ = ["SearchGrid", "WindowStat", "TestReport", "scan",
           "critical_value", "decide_and_date", "run_test"]

# A window whose projected variance estimate falls below this is recorded
# as failed: the statistic would be numerically meaningless.
_SIGMA_H_FLOOR = 1e-14

_MAX_FAILURE_SHARE = 0.2

# Shrinkage ridge (in observations) for the sandwich evaluation point:
# weight on the complement fit is c_obs / (c_obs + _SHRINK_RIDGE), so the
# stabilization fades as the complement grows.
_SHRINK_RIDGE = 50.0


@dataclass(frozen=True)
class SearchGrid:
    """Grid {j/L} with the admissibility band kappa <= tau2-tau1 <= 1-kappa'."""

    L: int = 30
    kappa: float = 0.1
    kappa_prime: float = 0.1
    chi: float = 0.5

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError(f"L must be a positive integer, got {self.L}")
        if not 0.0 < self.kappa < 1.0 or not 0.0 < self.kappa_prime < 1.0:
            raise ConfigError("kappa and kappa_prime must lie in (0,1)")
        if not 0.0 <= self.chi <= 1.0:
            raise ConfigError(f"chi must lie in [0,1], got {self.chi}")
        if not self.admissible_pairs():
            raise ConfigError(
                "admissible window set is empty: no grid pair satisfies "
                f"{self.kappa} <= span <= {1.0 - self.kappa_prime}")

    def taus(self) -> np.ndarray:
        return np.arange(self.L + 1) / self.L

    def admissible_pairs(self) -> List[Tuple[int, int]]:
        """Grid index pairs (j, k), j < k, whose span is admissible."""
        lo = self.kappa - 1e-12
        hi = 1.0 - self.kappa_prime + 1e-12
        return [(j, k)
                for j in range(self.L + 1)
                for k in range(j + 1, self.L + 1)
                if lo <= (k - j) / self.L <= hi]


@dataclass(frozen=True)
class WindowStat:
    """Per-window scan outcome; failed windows carry a message instead."""

    tau1: float
    tau2: float
    statistic: Optional[float]
    theta_hat: Optional[tuple]
    sigma_h: Optional[float]
    sigma_bar: Optional[tuple] = field(default=None, repr=False)
    c_bar: Optional[float] = None
    failed: bool = False
    message: Optional[str] = None


@dataclass(frozen=True)
class TestReport:
    """Full outcome of one scan + decision + dating pass.

    Invariants: sup_statistic is the max over non-failed per_window entries;
    dated_window is present iff reject; confidence_intervals are present iff
    reject, except when the re-fit on the dated window fails (then
    refit_error explains the gap).
    """

    __test__ = False  # the name starts with "Test" but this is a data type

    per_window: tuple
    sup_statistic: float
    critical_value: float
    delta: float
    reject: bool
    dated_window: Optional[Tuple[float, float]]
    theta_refit: Optional[tuple]
    confidence_intervals: Optional[tuple]
    null_reference_mode: str          # "fixed" | "complement"
    null_reference: Optional[float]   # the c_bar value when fixed
    n: int
    failures: int
    refit_error: Optional[str] = None

    def to_dict(self) -> dict:
        tau1_hat, tau2_hat = (self.dated_window if self.dated_window
                              else (None, None))
        return {
            "sup_statistic": self.sup_statistic,
            "critical_value": self.critical_value,
            "reject": self.reject,
            "tau1_hat": tau1_hat,
            "tau2_hat": tau2_hat,
            "theta_hat": (list(self.theta_refit)
                          if self.theta_refit is not None else None),
            "ci": ([[lo, hi] for lo, hi in self.confidence_intervals]
                   if self.confidence_intervals is not None else None),
            "delta": self.delta,
            "null_reference_mode": self.null_reference_mode,
            "null_reference": self.null_reference,
            "n": self.n,
            "failures": self.failures,
            "refit_error": self.refit_error,
            "per_window": [
                {"tau1": w.tau1, "tau2": w.tau2, "statistic": w.statistic,
                 "theta_hat": (list(w.theta_hat)
                               if w.theta_hat is not None else None),
                 "sigma_h": w.sigma_h,
                 "sigma_bar": ([list(row) for row in w.sigma_bar]
                               if w.sigma_bar is not None else None),
                 "c_bar": w.c_bar,
                 "failed": w.failed, "message": w.message}
                for w in self.per_window],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "TestReport":
        per_window = tuple(
            WindowStat(
                tau1=w["tau1"], tau2=w["tau2"], statistic=w["statistic"],
                theta_hat=(tuple(w["theta_hat"])
                           if w["theta_hat"] is not None else None),
                sigma_h=w["sigma_h"],
                sigma_bar=(tuple(tuple(row) for row in w["sigma_bar"])
                           if w.get("sigma_bar") is not None else None),
                c_bar=w.get("c_bar"),
                failed=w["failed"], message=w["message"])
            for w in data["per_window"])
        dated = ((data["tau1_hat"], data["tau2_hat"])
                 if data["tau1_hat"] is not None else None)
        return cls(
            per_window=per_window,
            sup_statistic=data["sup_statistic"],
            critical_value=data["critical_value"],
            delta=data["delta"],
            reject=data["reject"],
            dated_window=dated,
            theta_refit=(tuple(data["theta_hat"])
                         if data["theta_hat"] is not None else None),
            confidence_intervals=(tuple((lo, hi) for lo, hi in data["ci"])
                                  if data["ci"] is not None else None),
            null_reference_mode=data["null_reference_mode"],
            null_reference=data["null_reference"],
            n=data["n"],
            failures=data["failures"],
            refit_error=data.get("refit_error"))

    @classmethod
    def from_json(cls, text: str) -> "TestReport":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Critical values


def critical_value(n: int, grid: SearchGrid, N: int = 10000,
                   delta: float = 0.95, seed: int = 0,
                   batch: int = 512, pair_set: str = "all") -> float:
    """Monte Carlo quantile of the limiting supremum functional.

    Each replication draws n i.i.d. standard normals and takes the sup of
    the normalized increment

        (1/sqrt(n)) sum_{i=floor(n tau1)+1}^{floor(n tau2)} eps_i
        / (tau2 - tau1)^(1-chi),

    computed with prefix sums (O(n + L^2) per replication).  Returns the
    floor(N*delta)-th order statistic, 1-based.  Replication k always
    consumes draws [k*n, (k+1)*n) of the generator stream, so the result is
    bit-reproducible for a given seed regardless of the batch size.

    pair_set selects the windows the supremum ranges over: "all" (default)
    uses every grid pair j < k, including spans outside the scan's
    admissible band; "admissible" restricts to kappa <= span <= 1 - kappa'.
    The default produces the larger quantile (the short-span pairs dominate
    the supremum) and is the convention under which the reference levels
    3.031 / 3.285 for delta = 0.90 / 0.95 (L=30, chi=0.5, n=1000) were
    tabulated; "admissible" matches the search set of scan() exactly and
    yields a smaller, more liberal critical value.
    """
    if N < 1000:
        raise ConfigError(f"N must be at least 1000, got {N}")
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must lie in (0,1), got {delta}")
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    k_order = int(math.floor(N * delta))
    if k_order < 1:
        raise ConfigError("N * delta is below 1; no order statistic exists")

    if pair_set == "all":
        pairs = [(j, k) for j in range(grid.L + 1)
                 for k in range(j + 1, grid.L + 1)]
    elif pair_set == "admissible":
        pairs = grid.admissible_pairs()
    else:
        raise ConfigError(
            f"pair_set must be 'all' or 'admissible', got {pair_set!r}")
    cuts = np.array([frac_index(n, j / grid.L) for j in range(grid.L + 1)])
    j_idx = np.array([p[0] for p in pairs])
    k_idx = np.array([p[1] for p in pairs])
    spans = (k_idx - j_idx) / grid.L
    denom = spans ** (1.0 - grid.chi) * math.sqrt(n)

    rng = np.random.default_rng(seed)
    sups = np.empty(N)
    done = 0
    while done < N:
        b = min(batch, N - done)
        eps = rng.standard_normal((b, n))
        prefix = np.zeros((b, n + 1))
        np.cumsum(eps, axis=1, out=prefix[:, 1:])
        at_cuts = prefix[:, cuts]
        stats = (at_cuts[:, k_idx] - at_cuts[:, j_idx]) / denom
        sups[done:done + b] = stats.max(axis=1)
        done += b

    sups.sort()
    return float(sups[k_order - 1])


# ---------------------------------------------------------------------------
# Grid scan


def scan(x: np.ndarray, h_direction: Sequence[float], grid: SearchGrid,
         space: ParameterSpace,
         null_ref: Union[str, float] = "complement",
         opts: Optional[FitOptions] = None) -> List[WindowStat]:
    """Evaluate the statistic on every admissible grid window.

    null_ref: "complement" re-estimates c_bar = H' theta_bar per window
    from the complement fit (the statistic then carries the
    sqrt(1 - span) two-sample factor, see the module docstring); a number
    fixes c_bar (e.g. 1.0 to test the persistence sum against unity).
    Either way Sigma_bar comes from the complement index sums evaluated at
    the shrunk complement fit described in the module docstring, so the
    complement QMLE runs in both modes.  Windows whose fits fail are
    recorded with failure markers and excluded from the supremum; more
    than 20% failures aborts the scan.
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < grid.L:
        raise ConfigError(
            f"series length {n} is below the grid count L={grid.L}")
    h = np.asarray(h_direction, dtype=np.float64)
    if h.shape != (space.d,):
        raise ConfigError(
            f"H direction has shape {h.shape}, expected ({space.d},)")
    if isinstance(null_ref, str) and null_ref != "complement":
        raise ConfigError(
            f"null_ref must be 'complement' or a number, got {null_ref!r}")
    fixed_ref = None if isinstance(null_ref, str) else float(null_ref)

    base_opts = opts or FitOptions()

    # One full-sample fit provides a deterministic warm start for every
    # window; windows stay independent, so evaluation order cannot matter.
    try:
        full_fit = fit_complement(x, None, space, base_opts)
    except (FitError, ConfigError) as exc:
        raise FitError(f"full-sample warm-start fit failed: {exc}") from exc
    warm = full_fit.theta_hat
    warm_arr = warm.as_array()
    x2 = x * x

    def window_opts(mask_x2: np.ndarray) -> FitOptions:
        if base_opts.starts is not None:
            return base_opts
        return replace(base_opts,
                       starts=[warm] + default_starts(mask_x2, space))

    results: List[WindowStat] = []
    sqrt_n = math.sqrt(n)
    for j, k in grid.admissible_pairs():
        window = Window(j / grid.L, k / grid.L, n)
        try:
            fit_w = fit_window(x, window, space,
                               window_opts(x2[window.start:window.stop]))
            fit_c = fit_complement(
                x, window, space,
                window_opts(np.concatenate((x2[:window.start],
                                            x2[window.stop:]))))
            c_obs = n - window.length
            weight = c_obs / (c_obs + _SHRINK_RIDGE)
            theta_eval = GarchParams.from_array(
                weight * fit_c.theta_hat.as_array()
                + (1.0 - weight) * warm_arr, space.r, space.s)
            v_bar, i_bar = estimate_v_i(x, window, theta_eval)
            est = sandwich(v_bar, i_bar, h)
            sigma_h = float(est.sigma_h[0, 0])
            if not sigma_h > _SIGMA_H_FLOOR:
                raise InferenceError(
                    f"projected variance {sigma_h:.3g} is not positive")
            if fixed_ref is not None:
                c_bar = fixed_ref
                two_sample = 1.0
            else:
                c_bar = float(h @ fit_c.theta_hat.as_array())
                two_sample = math.sqrt(1.0 - window.span)
            stat = (sqrt_n * window.span ** grid.chi * two_sample
                    * (float(h @ fit_w.theta_hat.as_array()) - c_bar)
                    / math.sqrt(sigma_h))
            results.append(WindowStat(
                tau1=window.tau1, tau2=window.tau2, statistic=float(stat),
                theta_hat=tuple(fit_w.theta_hat.as_array()),
                sigma_h=sigma_h,
                sigma_bar=tuple(map(tuple, est.sigma_bar)),
                c_bar=c_bar))
        except (FitError, InferenceError, ConfigError) as exc:
            results.append(WindowStat(
                tau1=window.tau1, tau2=window.tau2, statistic=None,
                theta_hat=None, sigma_h=None, failed=True,
                message=str(exc)))

    failures = sum(1 for w in results if w.failed)
    if failures > _MAX_FAILURE_SHARE * len(results):
        raise FitError(
            f"{failures} of {len(results)} windows failed to fit; "
            "the scan is unreliable",
            diagnostics={"messages": [w.message for w in results
                                      if w.failed][:10]})
    return results


# ---------------------------------------------------------------------------
# Decision, dating, confidence intervals


def decide_and_date(per_window: Sequence[WindowStat], q_hat: float,
                    x: np.ndarray, space: ParameterSpace,
                    delta: float = 0.95,
                    null_reference_mode: Optional[str] = None,
                    ci_level: Optional[float] = None,
                    opts: Optional[FitOptions] = None) -> TestReport:
    """Decision, period dating, re-estimation, and confidence intervals.

    Rejects when the supremum exceeds q_hat; the dated window is the argmax
    (ties broken by smallest tau1, then smallest tau2).  Confidence
    intervals use the dated window's complement sandwich as stored by the
    scan (complement sums at the shrunk complement fit):

        theta_j +/- z_((1+level)/2) * sqrt(Sigma_jj / (n (tau2 - tau1)))

    with level defaulting to delta.
    """
    per_window = list(per_window)
    if not per_window:
        raise ConfigError("per_window is empty")
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    failures = sum(1 for w in per_window if w.failed)
    valid = [w for w in per_window if not w.failed]
    if not valid:
        raise InferenceError("every window failed; nothing to decide on")

    if null_reference_mode is None:
        c_bars = {w.c_bar for w in valid}
        null_reference_mode = "fixed" if len(c_bars) == 1 else "complement"
    if null_reference_mode not in ("fixed", "complement"):
        raise ConfigError(
            f"null_reference_mode must be 'fixed' or 'complement', "
            f"got {null_reference_mode!r}")
    null_reference = (valid[0].c_bar if null_reference_mode == "fixed"
                      else None)

    sup_stat = max(w.statistic for w in valid)
    reject = bool(sup_stat > q_hat)
    best = min((w for w in valid if w.statistic == sup_stat),
               key=lambda w: (w.tau1, w.tau2))

    dated = None
    theta_refit = None
    cis = None
    refit_error = None
    if reject:
        dated = (best.tau1, best.tau2)
        window = Window(best.tau1, best.tau2, n)
        try:
            refit = fit_window(x, window, space, opts or FitOptions())
            theta_refit = tuple(refit.theta_hat.as_array())
            level = delta if ci_level is None else ci_level
            z = norm_ppf(0.5 * (1.0 + level))
            scale = math.sqrt(n * window.span)
            half = z * np.sqrt(np.diag(np.asarray(best.sigma_bar))) / scale
            cis = tuple((th - hw, th + hw)
                        for th, hw in zip(theta_refit, half))
        except (FitError, ConfigError) as exc:
            refit_error = f"re-fit on the dated window failed: {exc}"

    return TestReport(
        per_window=tuple(per_window),
        sup_statistic=float(sup_stat),
        critical_value=float(q_hat),
        delta=delta,
        reject=reject,
        dated_window=dated,
        theta_refit=theta_refit,
        confidence_intervals=cis,
        null_reference_mode=null_reference_mode,
        null_reference=null_reference,
        n=n,
        failures=failures,
        refit_error=refit_error)


def run_test(x: np.ndarray, h_direction: Sequence[float], grid: SearchGrid,
             space: ParameterSpace, delta: float = 0.95, N: int = 10000,
             seed: int = 0, null_ref: Union[str, float] = "complement",
             opts: Optional[FitOptions] = None,
             q_hat: Optional[float] = None) -> TestReport:
    """Convenience pipeline: critical value, scan, decision, dating."""
    if q_hat is None:
        q_hat = critical_value(len(x), grid, N=N, delta=delta, seed=seed)
    per_window = scan(x, h_direction, grid, space, null_ref=null_ref,
                      opts=opts)
    mode = "complement" if isinstance(null_ref, str) else "fixed"
    return decide_and_date(per_window, q_hat, x, space, delta=delta,
                           null_reference_mode=mode, opts=opts)
