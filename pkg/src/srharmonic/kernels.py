"""Backend selection for the hot integration kernel.

The compiled extension ``srharmonic._kernels`` is used when it imports, the
NumPy fallback otherwise. Pass ``backend="python"`` to force the fallback.
"""

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

BACKEND = "python" if _compiled is None else "compiled"


def get_backend(name=None):
    """Kernel module for ``name`` (default: the one selected at import)."""
    name = name or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None


def rkmk4_flow(c, sharp_matrix, g0, lam0, dt, steps, controls=None, backend=None):
    return get_backend(backend).rkmk4_flow(c, sharp_matrix, g0, lam0, float(dt), int(steps), controls)
