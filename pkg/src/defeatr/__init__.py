"""defeatr: defeaturing error estimation for 2D Poisson problems.

Solve a Poisson problem on a geometrically simplified (defeatured) domain,
then bound the energy-norm error committed by removing a feature using
only boundary data on the feature outline -- no solve on the exact domain
is needed.  Estimators cover Dirichlet boundary features (replaced by
Dirichlet or Neumann data) and internal Dirichlet features, plus a
first-order corrected solution for internal features.
"""
from . import boundary, correction, errors, estimators, experiments, fem, mesh

__version__ = "0.1.0"

__all__ = [
    "boundary",
    "correction",
    "errors",
    "estimators",
    "experiments",
    "fem",
    "mesh",
    "__version__",
]
