"""Backend selection: numba-compiled kernels by default, pure numpy on request.

The hot loops (path simulation, Monte Carlo batches) exist twice: a numba
``@njit`` version and a vectorized numpy version.  Selection order:

1. explicit ``backend=`` argument at the call site,
2. the ``OVSDE_BACKEND`` environment variable (``"numba"`` or ``"numpy"``),
3. ``"numba"`` when importable, else ``"numpy"``.

``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os
import warnings

BACKEND_ENV_VAR = "OVSDE_BACKEND"

# stale-TBB probing warns on import in some environments; the omp/workqueue
# layers are used regardless
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

try:
    from numba import njit, prange, set_num_threads, get_num_threads

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - environment without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap

    prange = range

    def set_num_threads(n):
        pass

    def get_num_threads():
        return 1


def resolve_backend(backend: str | None = None) -> str:
    """Return the backend name to use, validating availability."""
    choice = backend or os.environ.get(BACKEND_ENV_VAR, "").strip().lower() or None
    if choice is None:
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {choice!r}; expected 'numba' or 'numpy'")
    if choice == "numba" and not NUMBA_AVAILABLE:
        warnings.warn("numba requested but not importable; falling back to numpy")
        return "numpy"
    return choice
