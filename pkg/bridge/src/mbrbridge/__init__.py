"""Neural pairwise utilities and sentence embeddings, exported for mbrkit."""

__version__ = "0.1.0"

from .config import BridgeConfig, BridgeError
from .export import export_embeddings, export_utility_matrices
