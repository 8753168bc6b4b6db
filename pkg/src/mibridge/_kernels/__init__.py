"""Hot-kernel backend selection.

Imports the compiled Cython core when available, falling back to the
pure-NumPy reference implementation otherwise.  Set ``MIBRIDGE_KERNELS`` to
``python`` or ``cython`` to force a backend (``cython`` raises if the
extension is missing).  Both backends follow the same random-stream
protocol, so results are interchangeable for a given seed.
"""

import os

from . import _fallback

_choice = os.environ.get("MIBRIDGE_KERNELS", "auto").lower()

if _choice == "python":
    _impl = _fallback
elif _choice == "cython":
    from . import _core as _impl
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
fcs_update_column = _impl.fcs_update_column
ols_coef = _impl.ols_coef


def get_backend(name=None):
    """Return the kernel namespace for ``name`` ('python', 'cython' or None=active)."""
    if name is None or name == BACKEND:
        return _impl
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")
