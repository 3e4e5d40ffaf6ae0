"""Kernel backend selection.

Prefers the compiled extension (``greenfarm._speedups``) and falls back
to the pure-Python implementation.  Set ``GREENFARM_PURE_PYTHON=1`` to
force the fallback, e.g. for benchmarking the two backends against each
other.
"""

import os

if os.environ.get("GREENFARM_PURE_PYTHON"):
    from greenfarm import _fallback as _impl

    BACKEND = "python"
else:
    try:
        from greenfarm import _speedups as _impl

        BACKEND = "cython"
    except ImportError:
        from greenfarm import _fallback as _impl

        BACKEND = "python"

erlang_b_steps = _impl.erlang_b_steps
simulate_window = _impl.simulate_window
