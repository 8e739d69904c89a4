"""Visual-reasoning multi-agent harness for Euclidean TSP/mTSP experiments."""

__version__ = "0.1.0"
