"""GARCH(r,s) parameters, stationarity diagnostics, and simulation.

The process is

    X_i^2     = zeta_i^2 * sigma_i^2,
    sigma_i^2 = alpha0 + sum_j alphas[j] X_{i-j}^2 + sum_k betas[k] sigma_{i-k}^2,

with i.i.d. mean-zero unit-variance innovations zeta.  Strict stationarity
is governed by the top Lyapunov exponent of the random coefficient matrices
A_i, which is negative well beyond the covariance-stationary region
sum(alphas) + sum(betas) < 1 (IGARCH and mildly explosive-in-variance
parameter points are strictly stationary).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .exceptions import ConfigError, SimulationOverflowError

__all__ = [
    "GarchParams",
    "ParameterSpace",
    "InnovationDist",
    "ShockSpec",
    "SeriesSample",
    "StationarityCheck",
    "lyapunov_exponent",
    "stationarity_check",
    "companion_spectral_radius",
    "simulate",
]


@dataclass(frozen=True)
class GarchParams:
    """Parameter vector theta = (alpha0, alphas..., betas...)."""

    alpha0: float
    alphas: tuple
    betas: tuple

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "alpha0", float(self.alpha0))
        if not self.alpha0 > 0.0:
            raise ConfigError(f"alpha0 must be positive, got {self.alpha0}")
        if any(a < 0.0 for a in self.alphas):
            raise ConfigError(f"ARCH coefficients must be >= 0, got {self.alphas}")
        if any(b < 0.0 for b in self.betas):
            raise ConfigError(f"GARCH coefficients must be >= 0, got {self.betas}")
        if len(self.alphas) < 1:
            raise ConfigError("at least one ARCH lag is required (r >= 1)")
        if sum(self.betas) >= 1.0:
            raise ConfigError(
                f"sum of GARCH coefficients must be < 1, got {sum(self.betas)}")

    @property
    def r(self) -> int:
        return len(self.alphas)

    @property
    def s(self) -> int:
        return len(self.betas)

    @property
    def d(self) -> int:
        """Total parameter count r + s + 1."""
        return 1 + self.r + self.s

    @property
    def persistence(self) -> float:
        return sum(self.alphas) + sum(self.betas)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha0, *self.alphas, *self.betas], dtype=np.float64)

    @classmethod
    def from_array(cls, theta: Sequence[float], r: int, s: int) -> "GarchParams":
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (1 + r + s,):
            raise ConfigError(
                f"theta has length {theta.shape}, expected {1 + r + s}")
        return cls(theta[0], tuple(theta[1:1 + r]), tuple(theta[1 + r:]))


@dataclass(frozen=True)
class ParameterSpace:
    """Compact box Theta used by the estimators.

    Lower bounds are alpha_min on alpha0 and 0 on the rest; beta_sum_max is
    the strict cap on sum(betas) enforced through the fitting transform.
    """

    r: int = 1
    s: int = 1
    alpha_min: float = 1e-6
    beta_sum_max: float = 0.999
    upper: tuple = ()

    def __post_init__(self):
        if self.r < 1:
            raise ConfigError(f"r must be a positive integer, got {self.r}")
        if self.s < 0:
            raise ConfigError(f"s must be non-negative, got {self.s}")
        if not self.alpha_min > 0.0:
            raise ConfigError(f"alpha_min must be positive, got {self.alpha_min}")
        if not 0.0 < self.beta_sum_max < 1.0:
            raise ConfigError(
                f"beta_sum_max must lie in (0,1), got {self.beta_sum_max}")
        if not self.upper:
            up = (50.0,) + (10.0,) * self.r + (self.beta_sum_max,) * self.s
            object.__setattr__(self, "upper", up)
        else:
            object.__setattr__(self, "upper", tuple(float(u) for u in self.upper))
        if len(self.upper) != self.d:
            raise ConfigError(
                f"upper bounds have length {len(self.upper)}, expected {self.d}")
        lows = (self.alpha_min,) + (0.0,) * (self.d - 1)
        if any(u <= lo or not math.isfinite(u) for u, lo in zip(self.upper, lows)):
            raise ConfigError("upper bounds must be finite and above lower bounds")

    @property
    def d(self) -> int:
        return 1 + self.r + self.s

    def contains(self, params: GarchParams) -> bool:
        """Componentwise box membership plus the beta-sum cap."""
        if params.r != self.r or params.s != self.s:
            return False
        th = params.as_array()
        if th[0] < self.alpha_min:
            return False
        if np.any(th > np.asarray(self.upper) + 1e-12):
            return False
        return sum(params.betas) <= self.beta_sum_max + 1e-12


@dataclass(frozen=True)
class InnovationDist:
    """Innovation law: mean 0, variance 1 for every kind.

    kinds: "normal"; "student_t" (variance-normalized, df > 4 so the fourth
    moment exists); "rademacher" (zeta in {-1,+1}, so zeta^2 is degenerate
    at 1 -- provided only to exercise the estimators' degeneracy detection).
    """

    kind: str = "normal"
    df: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("normal", "student_t", "rademacher"):
            raise ConfigError(f"unknown innovation kind {self.kind!r}")
        if self.kind == "student_t":
            df = 7.0 if self.df is None else float(self.df)
            if not df > 4.0:
                raise ConfigError(
                    f"student_t innovations need df > 4 for a finite fourth "
                    f"moment, got {df}")
            object.__setattr__(self, "df", df)
        elif self.df is not None:
            raise ConfigError(f"df only applies to student_t, got kind={self.kind}")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "normal":
            return rng.standard_normal(size)
        if self.kind == "student_t":
            scale = math.sqrt(self.df / (self.df - 2.0))
            return rng.standard_t(self.df, size) / scale
        return rng.choice(np.array([-1.0, 1.0]), size=size)

    @property
    def mu4(self) -> float:
        """Fourth moment E zeta^4."""
        if self.kind == "normal":
            return 3.0
        if self.kind == "student_t":
            return 3.0 * (self.df - 2.0) / (self.df - 4.0)
        return 1.0


@dataclass(frozen=True)
class ShockSpec:
    """Piecewise-constant parameter path theta(i).

    theta(i) = base + direction * magnitude for observations
    floor(n*tau1_star)+1 .. floor(n*tau2_star) (1-based) and base elsewhere.
    """

    base: GarchParams
    direction: tuple = ()
    magnitude: float = 0.0
    tau1_star: float = 0.0
    tau2_star: float = 0.0

    def __post_init__(self):
        d = self.base.d
        if not self.direction:
            object.__setattr__(self, "direction", (0.0,) * d)
        else:
            object.__setattr__(
                self, "direction", tuple(float(h) for h in self.direction))
        if len(self.direction) != d:
            raise ConfigError(
                f"direction has length {len(self.direction)}, expected {d}")
        if self.magnitude < 0.0:
            raise ConfigError(f"magnitude must be >= 0, got {self.magnitude}")
        for t in (self.tau1_star, self.tau2_star):
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"shock fractions must lie in [0,1], got {t}")
        if self.magnitude > 0.0 and not self.tau1_star < self.tau2_star:
            raise ConfigError(
                "tau1_star < tau2_star is required when magnitude > 0")
        # Constructing the shocked parameters validates non-negativity and
        # the beta-sum condition.
        self.shocked()

    def shocked(self) -> GarchParams:
        th = self.base.as_array() + self.magnitude * np.asarray(self.direction)
        return GarchParams.from_array(th, self.base.r, self.base.s)

    def validate_in(self, space: ParameterSpace) -> None:
        if not space.contains(self.base):
            raise ConfigError("base parameters lie outside the parameter space")
        if not space.contains(self.shocked()):
            raise ConfigError("shocked parameters lie outside the parameter space")


@dataclass(frozen=True)
class SeriesSample:
    """A simulated realization with its true conditional variances."""

    x: np.ndarray
    sigma2: np.ndarray
    seed: int
    burn_in: int
    innovations: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(self.sigma2 <= 0.0):
            raise ConfigError("sigma2 must be strictly positive")


@dataclass(frozen=True)
class StationarityCheck:
    """Monte Carlo gamma(theta) estimate with a 3-standard-error verdict.

    stationary is True when estimate + 3 se < 0, False when
    estimate - 3 se > 0, and None (indeterminate) in between.
    """

    gamma: float
    se: float
    stationary: Optional[bool]


def _fixed_point_sigma2(params: GarchParams) -> float:
    """Starting variance: unconditional mean when it exists, else the
    zero-history fixed point alpha0 / (1 - sum(betas))."""
    if params.persistence < 1.0:
        return params.alpha0 / (1.0 - params.persistence)
    return params.alpha0 / (1.0 - sum(params.betas))


def lyapunov_exponent(params: GarchParams, dist: InnovationDist,
                      m: int = 100_000, seed: int = 0) -> float:
    """Monte Carlo estimate of the top Lyapunov exponent gamma(theta).

    For r = s = 1 the coefficient matrices have rank one and the product
    telescopes, giving the scalar form E log(alpha1 zeta^2 + beta1) averaged
    over m draws.  In general the estimate is (1/m) log of the norm of the
    product A_m ... A_1, accumulated with renormalization every 50 steps so
    the product never overflows (log-norm increments are summed instead).
    The limit does not depend on the matrix norm used; the Frobenius norm is
    taken for cheapness.
    """
    if m < 10_000:
        raise ConfigError(f"m must be at least 10^4, got {m}")
    return stationarity_check(params, dist, m=m, seed=seed).gamma


def stationarity_check(params: GarchParams, dist: InnovationDist,
                       m: int = 100_000, seed: int = 0) -> StationarityCheck:
    """gamma(theta) estimate plus a 3-sigma stationarity verdict."""
    rng = np.random.default_rng(seed)
    r, s = params.r, params.s

    if r == 1 and s == 1:
        z2 = dist.sample(rng, m) ** 2
        terms = np.log(params.alphas[0] * z2 + params.betas[0])
        gamma = float(terms.mean())
        se = float(terms.std(ddof=1) / math.sqrt(m))
    else:
        k = r + s
        f = np.array([*params.alphas, *params.betas])
        base = np.zeros((k, k))
        for j in range(1, r):
            base[j, j - 1] = 1.0  # e_j rows
        if s >= 1:
            base[r] = f
        for j in range(r + 1, k):
            base[j, j - 1] = 1.0
        renorm = 50
        z2 = dist.sample(rng, m) ** 2
        prod = np.eye(k)
        increments = []
        logs = 0.0
        for i in range(m):
            a = base.copy()
            a[0] = f * z2[i]
            prod = a @ prod
            if (i + 1) % renorm == 0 or i == m - 1:
                nrm = np.linalg.norm(prod)
                if not np.isfinite(nrm) or nrm == 0.0:
                    raise ConfigError(
                        "matrix product left the representable range despite "
                        "renormalization; reduce the renormalization interval")
                increments.append(math.log(nrm))
                logs += math.log(nrm)
                prod /= nrm
        gamma = logs / m
        # Chunk increments are treated as approximately independent for the
        # error band; good enough for a 3-sigma membership verdict.
        inc = np.asarray(increments) / renorm
        se = float(inc.std(ddof=1) / math.sqrt(len(inc)))

    verdict: Optional[bool]
    if gamma + 3.0 * se < 0.0:
        verdict = True
    elif gamma - 3.0 * se > 0.0:
        verdict = False
    else:
        verdict = None
    return StationarityCheck(gamma=gamma, se=se, stationary=verdict)


def companion_spectral_radius(params: GarchParams) -> float:
    """Spectral radius of the s x s companion matrix of (beta_1..beta_s)."""
    s = params.s
    if s == 0:
        raise ConfigError("companion matrix undefined for s = 0")
    if s == 1:
        return abs(params.betas[0])
    comp = np.zeros((s, s))
    comp[0] = params.betas
    for j in range(1, s):
        comp[j, j - 1] = 1.0
    return float(np.abs(np.linalg.eigvals(comp)).max())


def simulate(spec: ShockSpec, n: int, dist: InnovationDist, seed: int = 0,
             burn_in: int = 1000, keep_innovations: bool = False) -> SeriesSample:
    """Simulate n observations under the (possibly shocked) parameter path.

    Burn-in draws use the base parameters and are discarded.  The pre-sample
    variance starts at the deterministic fixed point (unconditional variance
    when it exists).  A variance overflow -- possible when the shocked
    parameters are far outside strict stationarity -- raises
    SimulationOverflowError naming the offending observation index.
    """
    if burn_in < 0:
        raise ConfigError(f"burn_in must be >= 0, got {burn_in}")
    base = spec.base
    if n < base.d:
        raise ConfigError(f"n must be at least r+s+1 = {base.d}, got {n}")

    rng = np.random.default_rng(seed)
    z = dist.sample(rng, burn_in + n)

    if spec.magnitude > 0.0:
        shock_lo = int(math.floor(n * spec.tau1_star + 1e-9))  # 0-based start
        shock_hi = int(math.floor(n * spec.tau2_star + 1e-9))  # exclusive
    else:
        shock_lo, shock_hi = 0, 0

    sig2, err = _kernels.simulate_sigma2(
        z * z, base.as_array(), spec.shocked().as_array(), base.r, base.s,
        shock_lo, shock_hi, burn_in, _fixed_point_sigma2(base))
    if err >= 0:
        raise SimulationOverflowError(int(err) - burn_in)

    sig2 = np.asarray(sig2[burn_in:])
    zkept = z[burn_in:]
    x = zkept * np.sqrt(sig2)
    return SeriesSample(
        x=x, sigma2=sig2, seed=seed, burn_in=burn_in,
        innovations=zkept.copy() if keep_innovations else None)
