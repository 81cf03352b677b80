"""Exact stage-wise distributions, boundaries and simulation for group sequential designs."""

from ._backend import BACKEND
from .asymptotics import (LimitCDF, LocalAlternative, RatioLimits, degeneracy_demo, limit_cdf_conditional,
                          limit_cdf_design)
from .boundaries import BoundarySolution, SpendingPlan, achieved_spending, solve, solve_explicit, solve_pocock
from .design import (Hypotheses, OperationalCharacteristics, SequentialDesign, cumulative_sizes,
                     operational_characteristics, validate_design)
from .errors import *  # noqa: F401,F403
from .mcengine import (EmpiricalDist, SimConfig, SimulationResult, TrialRecord, empirical_views, ks_distance,
                       run_simulation)
from .subdensity import (DistributionView, GridDensity, StageDistributions, compute_anatomy, design_view,
                         final_view, interim_view, is_possible_path, view_for)

__version__ = "0.1.0"
