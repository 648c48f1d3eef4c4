"""Distortion-cost bounds for estimation with a helper that knows the interference."""
from .core import BoundResult, bconv, h2, h2_inv
from .binary import (
    AuxiliaryPolicy,
    BinaryProblem,
    HelperPolicy,
    ach_thm2_binary,
    causal_search,
    causal_zero_necessary,
    dmin_half,
    gp_capacity_cost,
    lb_cor2,
    lb_cor3,
    lb_cor4,
    lb_thm3,
    lb_thm4,
    zero_dist_noncausal,
)
from .erasure import ErasureProblem, dmin_erasure
from .gaussian import (
    GaussianProblem,
    Thm5Params,
    VerduParams,
    ach_thm5,
    lb_gs,
    lb_gws,
    lb_prop6,
    lb_prop6_max,
    lb_thm7,
    lb_thm7_max,
    zero_dist_gaussian,
)
from .gaussian_sv import (
    GaussianSVProblem,
    QuadSolution,
    ach_thm8,
    gap_thm10,
    lb_prop7,
    lb_prop8,
    lb_thm9,
    mse_alpha,
)
from .montecarlo import SimConfig, claim2_counts, sim_binary_half, sim_erasure, sim_gaussian_uncoded

__version__ = "0.1.0"
