"""Numerical workbench for Ritt_E and sectorial functional calculus."""
from ._kernels import BACKEND
from .errors import RittlabError

__version__ = "0.1.0"

__all__ = ["BACKEND", "RittlabError", "__version__"]
