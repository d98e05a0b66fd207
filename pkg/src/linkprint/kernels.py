"""Selects the compiled kernels at import time.

Two hot paths have a Cython implementation: the probe trace simulation
and the conv -> batch-norm -> ReLU block of the 1-D convolutional model.
The compiled extensions are used when they were built; otherwise the
pure-Python/numpy fallbacks. Set ``LINKPRINT_KERNEL=python`` to force the
fallbacks.
"""

import os

from . import _conv_py, _trace_py

try:
    from . import _conv_c, _trace_c
except ImportError:  # extensions not built
    _conv_c = _trace_c = None

_forced = os.environ.get("LINKPRINT_KERNEL", "").lower() == "python"

if _trace_c is not None and not _forced:
    probe_trace = _trace_c.probe_trace
    conv_block = _conv_c
    BACKEND = "cython"
else:
    probe_trace = _trace_py.probe_trace
    conv_block = _conv_py
    BACKEND = "python"

IMPLEMENTATIONS = {"python": _trace_py.probe_trace}
CONV_IMPLEMENTATIONS = {"python": _conv_py}
if _trace_c is not None:
    IMPLEMENTATIONS["cython"] = _trace_c.probe_trace
    CONV_IMPLEMENTATIONS["cython"] = _conv_c
