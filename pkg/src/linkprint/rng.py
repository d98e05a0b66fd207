"""Seed derivation.

All randomness comes from numpy's PCG64 bit generator. Independent streams
are derived with `numpy.random.SeedSequence` by hashing an entropy tuple, so
a stream for (run seed, class index, trace index) never overlaps another
cell's stream and does not depend on evaluation order.
"""

import numpy as np

MASK64 = (1 << 64) - 1

# stream purposes, mixed into the entropy tuple
CORPUS = 1
SPLIT = 2
MODEL = 3
OPEN_WORLD = 4
PROJECTION = 5
CV = 6
REPETITION = 7


def seed_sequence(*key):
    """SeedSequence for an arbitrary tuple of non-negative integers."""
    return np.random.SeedSequence([int(k) & MASK64 for k in key])


def generator(*key):
    return np.random.Generator(np.random.PCG64(seed_sequence(*key)))


def derive_seed(*key):
    """A 64-bit integer seed derived from `key`."""
    return int(seed_sequence(*key).generate_state(1, dtype=np.uint64)[0])


def trace_streams(base_seed, class_index, trace_index):
    """(victim_rng, probe_rng) for one trace.

    The victim stream feeds the initial phase offset and per-repetition
    jitter, the probe stream feeds measurement noise.
    """
    seq = seed_sequence(base_seed, CORPUS, class_index, trace_index)
    victim, probe = seq.spawn(2)
    return (np.random.Generator(np.random.PCG64(victim)),
            np.random.Generator(np.random.PCG64(probe)))
