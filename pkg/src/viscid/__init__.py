"""viscid: a numerical laboratory for 1D viscous scalar conservation laws
with nonnegative measure initial data.

Core pieces: flux descriptions with weak-convexity certification, measure
initial data with mollified projections, the heat kernel with its sharp norm
identities, two independent solvers (monotone finite volume and a Duhamel
fixed point) plus a solver for the integrated equation, closed-form source
oracles, and a battery of quantitative decay/structure checks.
"""

from .errors import (BlockSizeError, ConfigurationError, DomainTooSmallError,
                     InstabilityError, PreconditionError, UnsupportedFluxError,
                     ViscidError)
from .flux import (FluxSpec, PCondParams, PCondReport, certify_p_condition,
                   eval_flux, eval_flux_deriv, phi_eta, theta_eta,
                   verify_growth, verify_p_condition)
from .initial_data import (GridFunction, MeasureData, PiecewisePoly, dirac,
                           mass, mollify)
from .kernel import HeatKernelParams, KERNEL_NORM_CONSTANTS, convolve, g_eval, kernel_norm
from .solver import (SolverConfig, Trajectory, auto_domain, hj_gradient,
                     hj_initial, nwave_extent, oracle_burgers_inviscid,
                     oracle_burgers_viscous, oracle_heat, run, run_duhamel,
                     run_fv, run_fv_many, run_hj)
from .analysis import (DecayContext, DecayFit, EstimateCheck, NASH_CORPUS_CONSTANT,
                       SweepConfig, UniquenessConfig, check_decay_bounds,
                       check_nash, check_spacetime, check_structural,
                       default_window, eps_sweep, fit_decay, hj_residual,
                       inviscid_limit, mollification_time, nash_corpus,
                       nash_ratio, norm, primitive, uniqueness_probe)

__version__ = "0.1.0"
