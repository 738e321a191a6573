"""Kernel selection: compiled extension if built, pure Python otherwise.

SNRG_KERNEL=c forces the compiled kernel (ImportError if unavailable),
SNRG_KERNEL=py forces the fallback.
"""

import os

_kernel = None


def get_kernel():
    global _kernel
    if _kernel is None:
        choice = os.environ.get("SNRG_KERNEL", "auto")
        if choice == "py":
            from . import pymatch as _mod
        elif choice == "c":
            from . import _cmatch as _mod
        else:
            try:
                from . import _cmatch as _mod
            except ImportError:
                from . import pymatch as _mod
        _kernel = _mod
    return _kernel


def kernel_name() -> str:
    return "compiled" if get_kernel().__name__.endswith("_cmatch") else "pure-python"


def available_kernels() -> dict:
    """All importable kernels, keyed by short name (for tests/benchmarks)."""
    from . import pymatch
    kernels = {"py": pymatch}
    try:
        from . import _cmatch
        kernels["c"] = _cmatch
    except ImportError:
        pass
    return kernels
