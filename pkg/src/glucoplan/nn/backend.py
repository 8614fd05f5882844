"""Kernel backend selection: numba-compiled loops or pure numpy.

The recurrent kernels dominate runtime, so they ship in two versions.
Selection via the ``GLUCOPLAN_NUMBA`` env flag:

* ``0`` forces the pure-numpy path everywhere,
* ``1`` forces the numba path everywhere (ImportError if missing),
* unset/``auto`` picks per call: the fused numba loops win on
  latency-bound small batches, while numpy's SIMD transcendentals win on
  wide training batches (numba's exp/tanh stay scalar without SVML).

``benchmarks/lstm_kernel_bench.py`` compares the two paths.
"""
from __future__ import annotations

import os

try:
    from numba import njit  # noqa: F401
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

# Batches up to this size run the numba path in auto mode.
AUTO_BATCH_CUTOFF = 4

_env = os.environ.get("GLUCOPLAN_NUMBA", "auto").strip().lower()
if _env in ("1", "true", "yes", "on"):
    if not HAS_NUMBA:
        raise ImportError("GLUCOPLAN_NUMBA=1 but numba is not installed")
    _mode = "numba"
elif _env in ("0", "false", "no", "off"):
    _mode = "numpy"
else:
    _mode = "auto" if HAS_NUMBA else "numpy"


def use_numba(batch_size: int) -> bool:
    if _mode == "numba":
        return True
    if _mode == "numpy":
        return False
    return batch_size <= AUTO_BATCH_CUTOFF


def numba_enabled() -> bool:
    return _mode != "numpy"


def set_numba(enabled: bool) -> None:
    """Runtime override to a forced mode, used by tests and benchmarks."""
    global _mode
    if enabled and not HAS_NUMBA:
        raise ImportError("numba is not installed")
    _mode = "numba" if enabled else "numpy"


def set_auto() -> None:
    global _mode
    _mode = "auto" if HAS_NUMBA else "numpy"
