"""Spectral refutation and Gaussian-wave SDP witnesses for random regular NAE-3SAT."""
from naelab.kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
