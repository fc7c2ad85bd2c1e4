"""Backend selection for the hot loops.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy versions in ``_pykernels`` take over.  ``QTABU_PURE_PYTHON=1`` forces
the fallback.  ``BACKEND`` names the active one.
"""

import os

from . import _pykernels

STOP_MAX_ITERS = _pykernels.STOP_MAX_ITERS
STOP_TARGET = _pykernels.STOP_TARGET
STOP_CUTOFF = _pykernels.STOP_CUTOFF
STOP_STUCK = _pykernels.STOP_STUCK

_impl = _pykernels
BACKEND = "python"
if not os.environ.get("QTABU_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
    except ImportError:
        pass
    else:
        BACKEND = "cython"

flip_update = _impl.flip_update
tabu_run = _impl.tabu_run
sa_run = _impl.sa_run


def get_backend(name: str):
    """Return the kernel module called ``name`` (``"python"`` or ``"cython"``)."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
