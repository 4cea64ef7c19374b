"""Numerical lab for weighted Hodge Laplacians on Gaussian-weighted
product models: discrete exterior calculus assembly, low-spectrum solves,
two-route cohomology, compression/extension maps, decay diagnostics."""

from . import maps, model, operators, schwartz, spectral, topology  # noqa: F401

__version__ = "0.1.0"
