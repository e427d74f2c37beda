"""Label-aware neural tangent kernels: analytic kernels, the finite-width hierarchy, and experiments."""

from .kernels_analytic import MCConfig, expected_k2, expected_k2_matrix, expected_k4
from .net2 import TwoLayerNet, init_net

__all__ = ["MCConfig", "TwoLayerNet", "expected_k2", "expected_k2_matrix", "expected_k4", "init_net"]
__version__ = "0.1.0"
