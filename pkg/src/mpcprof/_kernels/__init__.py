"""Kernel backend selection.

Two interchangeable backends provide the hot loops: a compiled Cython
extension (`fast`) and a pure numpy implementation (`pure`). The active one
is chosen at import time and exposed through module-level aliases. Selection
is controlled by the MPCPROF_KERNELS environment variable:

    auto (default)  use the compiled backend if importable, else pure
    fast            require the compiled backend, fail otherwise
    pure            force the numpy backend
"""

from __future__ import annotations

import os

from ..errors import ConfigurationError

_VALID = ("auto", "fast", "pure")
_requested = os.environ.get("MPCPROF_KERNELS", "auto").strip().lower()
if _requested not in _VALID:
    raise ConfigurationError(
        f"MPCPROF_KERNELS={_requested!r} not one of {_VALID}"
    )

if _requested == "pure":
    from . import pure as _impl
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "fast":
            raise ConfigurationError(
                "MPCPROF_KERNELS=fast but the compiled extension is not available; "
                "reinstall with a C compiler or use MPCPROF_KERNELS=pure"
            ) from None
        from . import pure as _impl

ACTIVE_BACKEND: str = _impl.BACKEND_NAME

quantize = _impl.quantize
bank_readout = _impl.bank_readout
field_from_params = _impl.field_from_params
window_error_mag = _impl.window_error_mag
refine_sweep = _impl.refine_sweep


def get_backend(name: str | None = None):
    """Return a backend module by name ('pure' or 'fast'); None = active one.

    Used by the benchmark to time both implementations side by side.
    """
    if name is None:
        return _impl
    if name == "pure":
        from . import pure
        return pure
    if name == "fast":
        try:
            from . import _fast  # type: ignore[attr-defined]
        except ImportError:
            raise ConfigurationError("compiled kernel backend is not available") from None
        return _fast
    raise ConfigurationError(f"unknown kernel backend {name!r}")


def available_backends() -> list[str]:
    out = ["pure"]
    try:
        from . import _fast  # type: ignore[attr-defined]  # noqa: F401
        out.insert(0, "fast")
    except ImportError:
        pass
    return out
