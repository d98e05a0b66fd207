"""Pure-Python trace kernel, the fallback for `linkprint._trace_c`.

Both implement the same two-owner special case of the link model: the
probe runs kernels back to back and at most one victim transfer is in
flight, so the processor-sharing rate is either the full capacity or half
of it. Keep the arithmetic in this file and the .pyx in the same order;
the two must agree bit for bit.
"""

import numpy as np

TRANSFER = 0
IDLE = 1


def probe_trace(capacity, overhead, sigma, kbytes, buffer_num, repeat_num,
                pb, pi, pj, draws, offset, noise):
    """Return (points, durations) for one probe run.

    `points[i]` is the inverse mean measured duration of buffer i,
    `durations` holds every measured (noisy) kernel duration.
    """
    nph = len(pb)
    ndraw = len(draws)
    half = capacity * 0.5
    points = np.empty(buffer_num)
    durations = np.empty(buffer_num * repeat_num)

    # victim state
    mode = IDLE
    rem = 0.0
    idle_next = 0.0
    k = 0

    def start_phase(k):
        if k >= ndraw:
            raise RuntimeError("victim ran out of jitter draws")
        p = k % nph
        b = pb[p] * (1.0 + pj[p] * draws[k, 0])
        i = pi[p] * (1.0 + pj[p] * draws[k, 1])
        if b > 0:
            return TRANSFER, b, i, k + 1
        return IDLE, i, 0.0, k + 1

    def alone(dt, mode, rem, idle_next, k):
        while True:
            if mode == TRANSFER:
                tf = rem / capacity
                if tf <= dt:
                    dt -= tf
                    if idle_next > 0:
                        mode, rem = IDLE, idle_next
                    else:
                        mode, rem, idle_next, k = start_phase(k)
                    continue
                rem -= capacity * dt
                return mode, rem, idle_next, k
            if rem <= dt:
                dt -= rem
                mode, rem, idle_next, k = start_phase(k)
                continue
            rem -= dt
            return mode, rem, idle_next, k

    if nph:
        mode, rem, idle_next, k = start_phase(k)
        mode, rem, idle_next, k = alone(offset, mode, rem, idle_next, k)

    idx = 0
    for i in range(buffer_num):
        total = 0.0
        for _ in range(repeat_num):
            if nph:
                mode, rem, idle_next, k = alone(overhead, mode, rem, idle_next, k)
            left = kbytes
            elapsed = 0.0
            while left > 0:
                if not nph:
                    elapsed += left / capacity
                    left = 0.0
                elif mode == TRANSFER:
                    tp = left / half
                    tv = rem / half
                    if tp < tv:
                        elapsed += tp
                        rem -= half * tp
                        left = 0.0
                    else:
                        elapsed += tv
                        left -= half * tv
                        if idle_next > 0:
                            mode, rem = IDLE, idle_next
                        else:
                            mode, rem, idle_next, k = start_phase(k)
                else:
                    tp = left / capacity
                    if tp < rem:
                        elapsed += tp
                        rem -= tp
                        left = 0.0
                    else:
                        elapsed += rem
                        left -= capacity * rem
                        mode, rem, idle_next, k = start_phase(k)
            d = overhead + elapsed
            f = 1.0 + sigma * noise[idx]
            if f < 0.01:
                f = 0.01
            d = d * f
            durations[idx] = d
            total += d
            idx += 1
        points[i] = 1.0 / (total / repeat_num)
    return points, durations
