"""Exact analysis of finite average-reward MDPs with (nearly) separable structure.

The separable baseline (action-only transitions, additively split rewards)
admits a constant optimal policy in closed form; under bounded epsilon-scale
perturbations of both reward and kernel, that policy stays within O(epsilon)
of optimal.  This package computes the closed form, solves the general
problem exactly for comparison, and measures the perturbation constants and
gap scaling empirically.
"""

__version__ = "0.1.0"

from .baseline import BaselineSolution, acoe_residual, maximizer_profile, per_action_gain, solve_baseline
from .chain import (
    ChainSolution,
    analyze_chain,
    fundamental_and_group_inverse,
    gain,
    invariant_distribution,
    is_irreducible,
    solve_poisson,
)
from .errors import (
    AssemblyInfeasible,
    CapExceeded,
    CompatibilityViolation,
    CrossCheckFailure,
    NonConvergence,
    NotIrreducible,
    SepMdpError,
    SingularSystem,
)
from .model import Mdp, Policy, SeparableSpec, assemble, epsilon_max, restrict, validate_mdp
from .montecarlo import SimEstimate, simulate_gain
from .perturb import (
    ExpansionReport,
    SweepReport,
    UniformC,
    first_order_expansion,
    measure_uniform_C,
    sample_instance,
    sweep,
)
from .solvers import (
    PolicySolution,
    brute_force,
    policy_evaluation,
    policy_iteration,
    relative_value_iteration,
)

__all__ = [
    "__version__",
    "Mdp",
    "SeparableSpec",
    "Policy",
    "validate_mdp",
    "assemble",
    "epsilon_max",
    "restrict",
    "ChainSolution",
    "is_irreducible",
    "invariant_distribution",
    "fundamental_and_group_inverse",
    "gain",
    "solve_poisson",
    "analyze_chain",
    "BaselineSolution",
    "per_action_gain",
    "solve_baseline",
    "acoe_residual",
    "maximizer_profile",
    "PolicySolution",
    "policy_evaluation",
    "policy_iteration",
    "brute_force",
    "relative_value_iteration",
    "ExpansionReport",
    "SweepReport",
    "UniformC",
    "first_order_expansion",
    "measure_uniform_C",
    "sweep",
    "sample_instance",
    "SimEstimate",
    "simulate_gain",
    "SepMdpError",
    "AssemblyInfeasible",
    "NotIrreducible",
    "SingularSystem",
    "CompatibilityViolation",
    "CapExceeded",
    "NonConvergence",
    "CrossCheckFailure",
]
