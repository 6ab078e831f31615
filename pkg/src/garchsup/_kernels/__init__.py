"""Backend selection: compiled extension if built, numpy/scipy otherwise.

Set GARCHSUP_BACKEND=python to force the fallback (used by the benchmark
and the equivalence tests); GARCHSUP_BACKEND=cython raises if the extension
is missing instead of silently degrading.
"""
import os

_requested = os.environ.get("GARCHSUP_BACKEND", "").strip().lower()

if _requested in ("python", "pure", "fallback"):
    from . import pyfallback as _impl
    BACKEND = "python"
elif _requested in ("", "cython", "c"):
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        if _requested:
            raise
        from . import pyfallback as _impl
        BACKEND = "python"
else:
    raise RuntimeError(
        f"unknown GARCHSUP_BACKEND={_requested!r}; use 'cython' or 'python'")

garch_paths = _impl.garch_paths
masked_negloglik_grad = _impl.masked_negloglik_grad
simulate_sigma2 = _impl.simulate_sigma2


def backend_name() -> str:
    """Name of the active kernel backend ('cython' or 'python')."""
    return BACKEND
