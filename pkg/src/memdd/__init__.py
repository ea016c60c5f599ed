"""Memory-DD: a dendrite-inspired recurrent cell with exact manual BPTT."""

from .cells import ModelSpec, Model, init_model
from .kernels import BACKEND

__all__ = ["ModelSpec", "Model", "init_model", "BACKEND"]
__version__ = "0.1.0"
