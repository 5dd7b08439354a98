"""Kernel backend selection.

The compiled extension is preferred when importable; set ELVIS_KERNELS=pure
to force the numpy fallback (or ELVIS_KERNELS=cython to fail loudly if the
extension is missing).
"""

import os

_requested = os.environ.get("ELVIS_KERNELS", "auto")

if _requested == "pure":
    from . import pure as _impl

    BACKEND = "pure"
elif _requested == "cython":
    from . import _ckernels as _impl  # type: ignore[attr-defined]

    BACKEND = "cython"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import pure as _impl

        BACKEND = "pure"

sobel_block_means = _impl.sobel_block_means
absdiff_block_means = _impl.absdiff_block_means
diffusion_fill_plane = _impl.diffusion_fill_plane

__all__ = [
    "BACKEND",
    "sobel_block_means",
    "absdiff_block_means",
    "diffusion_fill_plane",
]
