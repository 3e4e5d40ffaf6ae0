"""Pure-Python kernels, used when the compiled extension is unavailable.

These are the reference semantics for ``greenfarm._speedups``; the two
backends must produce identical results (see tests/test_kernels.py).
"""

import heapq

import numpy as np


def erlang_b_steps(b, x, steps, rho):
    """Apply ``steps`` forward Erlang-B recursion steps starting from B(x, rho) = b."""
    for _ in range(steps):
        b = rho * b / (x + 1.0 + rho * b)
        x += 1.0
    return b


def simulate_window(arr, svc, comp0, dur0, n, t0, t1):
    """Process one observation window of an n-server loss system.

    Arrivals that find all ``n`` servers busy are blocked and lost.
    Completions occurring at exactly an arrival's timestamp free the
    server before the arrival is examined; completions at exactly ``t1``
    belong to this window.

    Parameters
    ----------
    arr : array of arrival times in [t0, t1), sorted ascending
    svc : array of service durations, aligned with ``arr``
    comp0, dur0 : completion times / service durations of jobs already in
        service at ``t0`` (heap-ordered or sorted by completion time)
    n : admission capacity (running servers)
    t0, t1 : window boundaries (hours)

    Returns
    -------
    (blocked, admitted, completions, completed_durations, busy_time,
     leftover_completion_times, leftover_durations)

    ``busy_time`` is the integral of the in-service count over the
    window, in server-hours.
    """
    heap = [(float(c), float(d)) for c, d in zip(comp0, dur0)]
    heapq.heapify(heap)

    busy_time = 0.0
    for c in comp0:
        busy_time += min(float(c), t1) - t0

    blocked = 0
    admitted = 0
    completed = []

    for t, s in zip(arr, svc):
        t = float(t)
        while heap and heap[0][0] <= t:
            completed.append(heapq.heappop(heap)[1])
        if len(heap) < n:
            admitted += 1
            c = t + float(s)
            busy_time += min(c, t1) - t
            heapq.heappush(heap, (c, float(s)))
        else:
            blocked += 1

    while heap and heap[0][0] <= t1:
        completed.append(heapq.heappop(heap)[1])

    left_c = np.array([c for c, _ in heap], dtype=np.float64)
    left_d = np.array([d for _, d in heap], dtype=np.float64)
    return (blocked, admitted, len(completed),
            np.array(completed, dtype=np.float64),
            busy_time, left_c, left_d)
