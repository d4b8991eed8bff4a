"""Kernel selection: compiled Cython when importable, numpy fallback otherwise.

Set ``OHMLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from ohmlab import _fallback

if os.environ.get("OHMLAB_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from ohmlab import _kernels as _impl
    except ImportError:
        _impl = _fallback

COMPILED = _impl is not _fallback
pcg = _impl.pcg
enumerate_resistance = _impl.enumerate_resistance
