"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always available. LENTPARTICLE_BACKEND=python|cython forces a choice
(forcing cython raises if the extension is missing).
"""

import os

_choice = os.environ.get("LENTPARTICLE_BACKEND", "auto").lower()

if _choice == "python":
    from . import _kernels_py as kernels
elif _choice == "cython":
    from . import _kernels_cy as kernels  # noqa: F401  (ImportError is the contract)
elif _choice == "auto":
    try:
        from . import _kernels_cy as kernels
    except ImportError:
        from . import _kernels_py as kernels
else:
    raise RuntimeError(
        f"LENTPARTICLE_BACKEND={_choice!r} not understood (auto, python, cython)")

BACKEND = kernels.backend_name()
