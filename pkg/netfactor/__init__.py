"""Structure-preserving multi-level network factorization (NumPy + SciPy)."""

__version__ = "0.1.0"
