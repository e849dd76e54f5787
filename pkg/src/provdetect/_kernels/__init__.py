"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The active implementation is chosen once at import time from the
``PROVDETECT_KERNELS`` environment variable:

* ``auto`` (default) — numba if importable, else numpy
* ``numba``          — require numba, fail loudly if missing
* ``numpy``          — force the pure-numpy fallback

Both implementations compute the same quantities; they may differ by float
rounding in the last bits because summation orders differ.
``benchmarks/bench_kernels.py`` times one against the other.
"""

from __future__ import annotations

import os

_MODE = os.environ.get("PROVDETECT_KERNELS", "auto").lower()

if _MODE not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"PROVDETECT_KERNELS must be auto/numba/numpy, got {_MODE!r}"
    )

if _MODE in ("auto", "numba"):
    try:
        from . import numba_impl as _impl

        _BACKEND = "numba"
    except ImportError:
        if _MODE == "numba":
            raise RuntimeError(
                "PROVDETECT_KERNELS=numba but numba is not importable"
            )
        from . import numpy_impl as _impl

        _BACKEND = "numpy"
else:
    from . import numpy_impl as _impl

    _BACKEND = "numpy"

pairwise_sq_dists = _impl.pairwise_sq_dists
perplexity_search = _impl.perplexity_search
tsne_forces = _impl.tsne_forces
iforest_depths = _impl.iforest_depths


def active_backend() -> str:
    """Which kernel implementation this process is using."""
    return _BACKEND
