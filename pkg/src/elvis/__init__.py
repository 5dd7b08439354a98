"""Block-removal video compression pipeline.

Server side: per-block complexity analysis drives row-wise block removal
(frame shrinking) before encoding, with the removed coordinates shipped in a
compact compressed sidecar. Client side: frames are stretched back to full
resolution and the placeholder blocks are restored by a pluggable in-painter.
An experiment engine sweeps configurations against size-matched benchmarks.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
