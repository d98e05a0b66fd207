"""Fingerprinting co-located accelerators from shared-link contention, in simulation.

A probe repeatedly times small transfers over a link it shares with a
victim workload; the resulting throughput trace is classified to tell
which victim is running. Subpackages: `linksim` (the shared link),
`victims` (workload profiles), `probe` (trace collection), `dataset`,
`models`, `harness` (experiments) and `cli`.
"""

__version__ = "0.1.0"
