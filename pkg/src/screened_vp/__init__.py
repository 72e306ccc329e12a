"""Numerical laboratory for linear and nonlinear stability of screened Vlasov-Poisson equilibria."""
import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

__version__ = "0.1.0"
