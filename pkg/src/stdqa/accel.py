"""Kernel acceleration switch.

Hot numeric loops (LSTM scans, CRF recursions, Viterbi) are compiled with
numba when it is available. Setting the environment variable
``STDQA_NO_NUMBA=1`` before import selects the pure-numpy fallback: the same
kernel source runs interpreted, which is slower but dependency-free and
easier to debug. ``benchmarks/bench_kernels.py`` compares the two paths.
"""

import os


def _numba_requested() -> bool:
    flag = os.environ.get("STDQA_NO_NUMBA", "").strip()
    return flag in ("", "0", "false", "no")


def _resolve_jit():
    if _numba_requested():
        try:
            from numba import njit as numba_njit

            return True, numba_njit
        except ImportError:
            pass
    return False, None


NUMBA_ENABLED, _numba_njit = _resolve_jit()


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if NUMBA_ENABLED:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def passthrough(func):
        return func

    return passthrough
