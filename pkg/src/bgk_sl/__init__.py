"""Semi-Lagrangian solver for the 1D BGK model with a convergence harness."""

from .field import DistributionField
from .grid import GridSpec, build_grid
from .harness import ConvergenceReport, scaling_study, validate_mesh
from .scheme import run, step

__all__ = ["DistributionField", "GridSpec", "build_grid", "ConvergenceReport", "scaling_study",
           "validate_mesh", "run", "step"]
