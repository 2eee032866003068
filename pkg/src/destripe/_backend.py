"""Pick the compiled kernels when available, else the numpy fallback.

Set ``DESTRIPE_BACKEND=python`` to force the fallback.
"""

import os

from . import _fallback

_fallback.NAME = "python"

try:
    from . import _kernels as _compiled
    _compiled.NAME = "compiled"
except ImportError:  # extension not built
    _compiled = None

_choice = os.environ.get("DESTRIPE_BACKEND", "").strip().lower()
if _choice == "python" or _compiled is None:
    default = _fallback
else:
    default = _compiled

HAVE_COMPILED = _compiled is not None


def get(name=None):
    """Return the kernel module for ``name`` (``"compiled"``/``"python"``)."""
    if name is None:
        return default
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
