"""uccmap: factorized unitary coupled cluster to coupled cluster conversion."""

__version__ = "0.1.0"
