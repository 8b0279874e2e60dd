"""Pick the swarm kernel at import time.

The compiled extension is used when it imports; ``ADAPSCA_KERNEL=python``
forces the pure-Python fallback.
"""
import os

from . import _kernel_py

kernel = _kernel_py
if os.environ.get("ADAPSCA_KERNEL", "").lower() != "python":
    try:
        from . import _kernel as kernel  # type: ignore[no-redef]
    except ImportError:
        kernel = _kernel_py

NAME = kernel.NAME
