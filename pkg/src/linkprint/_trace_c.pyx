# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trace kernel. Mirrors `linkprint._trace_py` line by line."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    TRANSFER = 0
    IDLE = 1


cdef struct VState:
    int mode
    double rem
    double idle_next
    Py_ssize_t k


cdef int start_phase(VState* s, const double[:] pb, const double[:] pi,
                     const double[:] pj, const double[:, :] draws) except -1:
    cdef Py_ssize_t nph = pb.shape[0]
    cdef Py_ssize_t p
    cdef double b, i
    if s.k >= draws.shape[0]:
        raise RuntimeError("victim ran out of jitter draws")
    p = s.k % nph
    b = pb[p] * (1.0 + pj[p] * draws[s.k, 0])
    i = pi[p] * (1.0 + pj[p] * draws[s.k, 1])
    s.k += 1
    if b > 0:
        s.mode = TRANSFER
        s.rem = b
        s.idle_next = i
    else:
        s.mode = IDLE
        s.rem = i
        s.idle_next = 0.0
    return 0


cdef int alone(VState* s, double dt, double capacity, const double[:] pb,
               const double[:] pi, const double[:] pj,
               const double[:, :] draws) except -1:
    cdef double tf
    while True:
        if s.mode == TRANSFER:
            tf = s.rem / capacity
            if tf <= dt:
                dt -= tf
                if s.idle_next > 0:
                    s.mode = IDLE
                    s.rem = s.idle_next
                else:
                    start_phase(s, pb, pi, pj, draws)
                continue
            s.rem -= capacity * dt
            return 0
        if s.rem <= dt:
            dt -= s.rem
            start_phase(s, pb, pi, pj, draws)
            continue
        s.rem -= dt
        return 0


def probe_trace(double capacity, double overhead, double sigma, double kbytes,
                Py_ssize_t buffer_num, Py_ssize_t repeat_num,
                const double[:] pb, const double[:] pi, const double[:] pj,
                const double[:, :] draws, double offset, const double[:] noise):
    cdef Py_ssize_t nph = pb.shape[0]
    cdef double half = capacity * 0.5
    cdef cnp.ndarray[cnp.float64_t, ndim=1] points_arr = np.empty(buffer_num)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dur_arr = np.empty(buffer_num * repeat_num)
    cdef double[:] points = points_arr
    cdef double[:] durations = dur_arr
    cdef VState s
    cdef Py_ssize_t i, j, idx = 0
    cdef double total, left, elapsed, tp, tv, d, f

    if noise.shape[0] < buffer_num * repeat_num:
        raise ValueError("noise array too short")
    s.mode = IDLE
    s.rem = 0.0
    s.idle_next = 0.0
    s.k = 0
    if nph:
        start_phase(&s, pb, pi, pj, draws)
        alone(&s, offset, capacity, pb, pi, pj, draws)

    for i in range(buffer_num):
        total = 0.0
        for j in range(repeat_num):
            if nph:
                alone(&s, overhead, capacity, pb, pi, pj, draws)
            left = kbytes
            elapsed = 0.0
            while left > 0:
                if not nph:
                    elapsed += left / capacity
                    left = 0.0
                elif s.mode == TRANSFER:
                    tp = left / half
                    tv = s.rem / half
                    if tp < tv:
                        elapsed += tp
                        s.rem -= half * tp
                        left = 0.0
                    else:
                        elapsed += tv
                        left -= half * tv
                        if s.idle_next > 0:
                            s.mode = IDLE
                            s.rem = s.idle_next
                        else:
                            start_phase(&s, pb, pi, pj, draws)
                else:
                    tp = left / capacity
                    if tp < s.rem:
                        elapsed += tp
                        s.rem -= tp
                        left = 0.0
                    else:
                        elapsed += s.rem
                        left -= capacity * s.rem
                        start_phase(&s, pb, pi, pj, draws)
            d = overhead + elapsed
            f = 1.0 + sigma * noise[idx]
            if f < 0.01:
                f = 0.01
            d = d * f
            durations[idx] = d
            total += d
            idx += 1
        points[i] = 1.0 / (total / repeat_num)
    return points_arr, dur_arr
