"""Backend selection for the graph kernels.

The compiled module is used when it imports; setting ``NAELAB_PURE_PYTHON=1``
forces the reference implementation.
"""
import os

from naelab import _pykernels

if os.environ.get("NAELAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from naelab import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

CAP_EXCEEDED = _pykernels.CAP_EXCEEDED
count_cycles = _impl.count_cycles
ball_excess = _impl.ball_excess
signed_ball = _impl.signed_ball


def backend_module(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from naelab import _ckernels
        return _ckernels
    raise ValueError(name)
