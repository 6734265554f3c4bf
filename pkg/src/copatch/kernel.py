"""Selects the emission kernel at import: compiled extension or pure Python.

Set COPATCH_KERNEL=python to force the fallback (used by the kernel
comparison benchmark and for debugging).
"""

import os

if os.environ.get("COPATCH_KERNEL", "").lower() in ("py", "python"):
    from . import _kernel_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernel_py as _impl

        BACKEND = "python"

patch_and_copy = _impl.patch_and_copy
emit_node = _impl.emit_node
