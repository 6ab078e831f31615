"""Detection and dating of a changed-parameter period in GARCH processes.

The package simulates strictly stationary (possibly variance-explosive)
GARCH(r,s) series, estimates parameters on sample windows by truncated
Gaussian QMLE, and tests whether some window's estimate departs from the
rest of the sample via a double-supremum statistic over a grid of candidate
windows, with Monte Carlo critical values, break dating, and confidence
intervals.  A simulation-study harness and a CLI front end sit on top.

Hot numerical kernels are compiled (Cython); a pure-Python/scipy fallback
is selected automatically when the extension is unavailable and can be
forced with the environment variable GARCHSUP_BACKEND=python.
"""
from ._kernels import backend_name
from ._stats import norm_cdf, norm_ppf
from .covariance import SandwichEstimate, estimate_v_i, sandwich
from .exceptions import (ConfigError, FitError, GarchsupError, IngestError,
                         InferenceError, SimulationOverflowError)
from .harness import (CellResult, StudyConfig, StudyResult, power_study,
                      scenario_params, size_study)
from .likelihood import (LikEval, Window, frac_index, neg_loglik,
                         neg_loglik_grad_hess, sigma2_path)
from .model import (GarchParams, InnovationDist, ParameterSpace, SeriesSample,
                    ShockSpec, StationarityCheck, companion_spectral_radius,
                    lyapunov_exponent, simulate, stationarity_check)
from .qmle import FitOptions, FitResult, fit_complement, fit_window
from .suptest import (SearchGrid, TestReport, WindowStat, critical_value,
                      decide_and_date, run_test, scan)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    # model
    "GarchParams", "ParameterSpace", "InnovationDist", "ShockSpec",
    "SeriesSample", "StationarityCheck", "lyapunov_exponent",
    "stationarity_check", "companion_spectral_radius", "simulate",
    # likelihood
    "Window", "LikEval", "frac_index", "sigma2_path", "neg_loglik",
    "neg_loglik_grad_hess",
    # qmle
    "FitOptions", "FitResult", "fit_window", "fit_complement",
    # covariance
    "SandwichEstimate", "estimate_v_i", "sandwich",
    # suptest
    "SearchGrid", "WindowStat", "TestReport", "scan", "critical_value",
    "decide_and_date", "run_test",
    # harness
    "StudyConfig", "CellResult", "StudyResult", "size_study", "power_study",
    "scenario_params",
    # stats helpers
    "norm_ppf", "norm_cdf",
    # exceptions
    "GarchsupError", "ConfigError", "IngestError", "FitError",
    "InferenceError", "SimulationOverflowError",
]
