"""Shared fixtures: canonical parameter points and simulated series.

Series fixtures are module-scoped where the data is read-only, so the
expensive simulations run once per session.
"""
import numpy as np
import pytest

from garchsup import (GarchParams, InnovationDist, ParameterSpace, ShockSpec,
                      simulate)

# A comfortably stationary GARCH(1,1) point used across tests.
THETA_STAR = GarchParams(0.3, (0.4,), (0.5,))


@pytest.fixture(scope="session")
def space11() -> ParameterSpace:
    return ParameterSpace(r=1, s=1)


@pytest.fixture(scope="session")
def normal() -> InnovationDist:
    return InnovationDist("normal")


@pytest.fixture(scope="session")
def series_2000(normal) -> np.ndarray:
    """Null GARCH(1,1) series, theta* = (0.3, 0.4, 0.5), n = 2000."""
    return simulate(ShockSpec(THETA_STAR), 2000, normal, seed=101).x


@pytest.fixture(scope="session")
def series_4000(normal) -> np.ndarray:
    return simulate(ShockSpec(THETA_STAR), 4000, normal, seed=202).x


def random_theta(rng: np.random.Generator, r: int = 1, s: int = 1
                 ) -> GarchParams:
    """A random interior point of the default parameter space."""
    alpha0 = rng.uniform(0.05, 1.5)
    alphas = tuple(rng.uniform(0.05, 0.6 / r, size=r))
    betas = tuple(rng.uniform(0.05, 0.8 / s, size=s))
    return GarchParams(alpha0, alphas, betas)
