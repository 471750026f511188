"""Kernel backend selection.

The compiled extension is used when it has been built; set
``FREQSHIFT_KERNEL=python`` to force the numpy fallback.
"""
import os

BACKEND = "python"
if os.environ.get("FREQSHIFT_KERNEL", "").lower() != "python":
    try:
        from ._ckernels import loglik_point, loglik_scan

        BACKEND = "cython"
    except ImportError:
        pass
if BACKEND == "python":
    from ._pykernels import loglik_point, loglik_scan

__all__ = ["BACKEND", "loglik_point", "loglik_scan"]
