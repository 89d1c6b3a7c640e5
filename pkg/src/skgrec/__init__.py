"""Entity-aware multi-vector academic paper recommendation."""

__version__ = "0.1.0"
