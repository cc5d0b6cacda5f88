"""Renormalization-group flow for marginally perturbed scaling kernels."""

from ._version import __version__
from .blocksolver import BlockSolution, Nonlinearity, SolverParams, solve_block
from .config import RunConfig, load_config
from .funcspace import GridSpec, SpectralFunction, weighted_norm
from .kernel import ScalingKernel, fixed_point_profile, heat_kernel
from .marginal import (
    critical_exponent,
    decay_bracket,
    decay_coefficient,
    decay_limit,
    marginal_constants,
    overlap_constant,
)
from .rgflow import FlowConfig, FlowTrace, run_flow, write_trace_csv
from .timechange import TimeChange
from .verify import VerificationReport, direct_integrate, run_verification

__all__ = [
    "__version__",
    "BlockSolution",
    "FlowConfig",
    "FlowTrace",
    "GridSpec",
    "Nonlinearity",
    "RunConfig",
    "ScalingKernel",
    "SolverParams",
    "SpectralFunction",
    "TimeChange",
    "VerificationReport",
    "critical_exponent",
    "decay_bracket",
    "decay_coefficient",
    "decay_limit",
    "direct_integrate",
    "fixed_point_profile",
    "heat_kernel",
    "load_config",
    "marginal_constants",
    "overlap_constant",
    "run_flow",
    "run_verification",
    "solve_block",
    "weighted_norm",
    "write_trace_csv",
]
