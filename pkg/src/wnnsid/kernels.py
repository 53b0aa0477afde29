"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy
fallback is bound. ``BACKEND`` names whichever was picked, and ``use`` lets
benchmarks and tests switch explicitly.
"""

import numpy as np

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def available():
    return ["compiled", "python"] if _compiled is not None else ["python"]


def _impl(name):
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    if name == "python":
        return _fallback
    raise ValueError(f"unknown backend {name!r}")


def use(name):
    """Bind the module-level kernels to backend ``name``."""
    global BACKEND, _active
    _active = _impl(name)
    BACKEND = name


_active = _impl(BACKEND)


def hankel_adjoint(B, r, n_ch, n_samples):
    return _active.hankel_adjoint(np.ascontiguousarray(B, dtype=float), r, n_ch, n_samples)


def gram_assemble(P, Q, r, n_ch, N):
    return _active.gram_assemble(
        np.ascontiguousarray(P, dtype=float), np.ascontiguousarray(Q, dtype=float), r, n_ch, N
    )


def state_recursion(A, drive, x0):
    return _active.state_recursion(
        np.ascontiguousarray(A, dtype=float),
        np.ascontiguousarray(drive, dtype=float),
        np.ascontiguousarray(x0, dtype=float),
    )
