# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

Two kernels dominate the runtime of the whole package: the Erlang-B
recursion (up to 100k iterations per blocking evaluation) and the
per-window event processing of the loss-system simulator (millions of
arrival/completion events per experiment).  Both are implemented here in
Cython; ``greenfarm._fallback`` provides semantically identical
pure-Python versions that are selected automatically when this extension
is not built.
"""

import numpy as np

cimport numpy as cnp


def erlang_b_steps(double b, double x, long steps, double rho):
    """Apply ``steps`` forward Erlang-B recursion steps starting from B(x, rho) = b."""
    cdef long i
    for i in range(steps):
        b = rho * b / (x + 1.0 + rho * b)
        x += 1.0
    return b


cdef inline void _sift_down(double[::1] hc, double[::1] hd, long startpos, long pos):
    # heapq._siftdown equivalent: move leaf at `pos` towards the root.
    cdef double c = hc[pos]
    cdef double d = hd[pos]
    cdef long parent
    while pos > startpos:
        parent = (pos - 1) >> 1
        if c < hc[parent]:
            hc[pos] = hc[parent]
            hd[pos] = hd[parent]
            pos = parent
        else:
            break
    hc[pos] = c
    hd[pos] = d


cdef inline void _sift_up(double[::1] hc, double[::1] hd, long pos, long size):
    # heapq._siftup equivalent: move the root hole down, then sift the leaf back.
    cdef long startpos = pos
    cdef double c = hc[pos]
    cdef double d = hd[pos]
    cdef long child = 2 * pos + 1
    while child < size:
        if child + 1 < size and hc[child + 1] < hc[child]:
            child += 1
        hc[pos] = hc[child]
        hd[pos] = hd[child]
        pos = child
        child = 2 * pos + 1
    hc[pos] = c
    hd[pos] = d
    _sift_down(hc, hd, startpos, pos)


def simulate_window(double[::1] arr, double[::1] svc,
                    double[::1] comp0, double[::1] dur0,
                    long n, double t0, double t1):
    """Process one observation window of an n-server loss system.

    Parameters mirror greenfarm._fallback.simulate_window (the reference
    semantics); see that module for the full contract.
    """
    cdef long m = arr.shape[0]
    cdef long h0 = comp0.shape[0]
    cdef long cap = n if n > h0 else h0
    if cap < 1:
        cap = 1

    heap_c_arr = np.empty(cap, dtype=np.float64)
    heap_d_arr = np.empty(cap, dtype=np.float64)
    cdef double[::1] hc = heap_c_arr
    cdef double[::1] hd = heap_d_arr

    out_durs_arr = np.empty(h0 + m, dtype=np.float64)
    cdef double[::1] out_durs = out_durs_arr

    cdef long size = 0
    cdef long i
    cdef double busy_time = 0.0
    cdef double end

    for i in range(h0):
        hc[size] = comp0[i]
        hd[size] = dur0[i]
        size += 1
        _sift_down(hc, hd, 0, size - 1)
        end = comp0[i] if comp0[i] < t1 else t1
        busy_time += end - t0

    cdef long blocked = 0
    cdef long admitted = 0
    cdef long completions = 0
    cdef double t, c

    for i in range(m):
        t = arr[i]
        while size > 0 and hc[0] <= t:
            out_durs[completions] = hd[0]
            completions += 1
            size -= 1
            hc[0] = hc[size]
            hd[0] = hd[size]
            if size > 0:
                _sift_up(hc, hd, 0, size)
        if size < n:
            admitted += 1
            c = t + svc[i]
            end = c if c < t1 else t1
            busy_time += end - t
            hc[size] = c
            hd[size] = svc[i]
            size += 1
            _sift_down(hc, hd, 0, size - 1)
        else:
            blocked += 1

    while size > 0 and hc[0] <= t1:
        out_durs[completions] = hd[0]
        completions += 1
        size -= 1
        hc[0] = hc[size]
        hd[0] = hd[size]
        if size > 0:
            _sift_up(hc, hd, 0, size)

    return (blocked, admitted, completions,
            np.asarray(out_durs_arr[:completions]),
            busy_time,
            np.asarray(heap_c_arr[:size]).copy(),
            np.asarray(heap_d_arr[:size]).copy())
