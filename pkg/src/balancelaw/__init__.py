"""A priori estimates for scalar balance laws ``u_t + Div f(t, x, u) = F(t, x, u)``.

Dimensional constants, problem descriptions with audited hypotheses, a
monotone finite-volume solver, a fixed-point solver for convolution
sources, explicit envelopes for total variation and L1 stability, and
discrete entropy residuals that certify the computed solutions.
"""
from .bounds import (
    EnvelopeSeries,
    conservation_envelope,
    kernel_stability_bound,
    phi,
    radiating_l1_bound,
    radiating_tv_envelope,
    reduction_conservation,
    reduction_constant_speed,
    reduction_static,
    stability_envelope,
    stability_envelope_symmetric,
    tv_envelope,
    tv_envelope_weak,
)
from .certify import ScenarioConfig, load_scenario, refinement_study, run_scenario, shipped_scenarios
from .constants import (
    MollifierSpec,
    ball_volume,
    default_mollifier,
    dim_constants,
    kappa,
    kappa0,
    mollifier_constants,
    mollifier_identities,
    plateau_mollifier,
    wallis,
)
from .entropy import entropy_residual, initial_trace_check
from .errors import *  # noqa: F401,F403
from .grid import GridFn, UniformGrid, l1_distance_ball, l1_norm, mollified_tv, total_variation
from .model import FluxField, HypothesisReport, ProblemSpec, SamplingBox, SourceField, audit_hypotheses
from .nonlocal_source import (
    KernelSpec,
    contraction_horizon,
    convolve,
    exponential_kernel,
    gaussian_kernel,
    kernel_from_csv,
    picard_solve,
    top_hat_kernel,
)
from .problems import make_initial, make_problem
from .solver import Trajectory, cfl_dt, solve, step

__version__ = "0.1.0"
