"""Hot kernels of the norm estimators.

The compiled extension is used when it has been built; otherwise the numpy
implementation is selected at import. Both expose ``slot_solve`` and
``derived_norms`` with identical signatures.
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

DEFAULT_BACKEND = "cython" if _ckernels is not None else "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    """Kernel module by name; ``None`` selects the default (compiled when available)."""
    key = DEFAULT_BACKEND if name is None else name
    try:
        return _BACKENDS[key]
    except KeyError:
        raise ValueError(
            f"unknown or unavailable kernel backend {name!r}; available: {available_backends()}"
        ) from None
