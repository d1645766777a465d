"""Kernel selection: compiled monodromy propagation when available.

The compiled extension and the numpy fallback implement the same contract
(`propagate_batch`); import-time selection prefers the extension unless
``TORSIONLAB_PURE_PYTHON`` is set to a truthy value.
``benchmarks/bench_monodromy.py`` compares the two.
"""

import os

from . import _monodromy_py

if os.environ.get("TORSIONLAB_PURE_PYTHON", "").strip() in ("", "0", "false", "False"):
    try:
        from . import _monodromy as _impl
    except ImportError:
        _impl = _monodromy_py
else:
    _impl = _monodromy_py

propagate_batch = _impl.propagate_batch
KERNEL_COMPILED = bool(getattr(_impl, "COMPILED", False))
KERNEL_NAME = "compiled" if KERNEL_COMPILED else "numpy"
