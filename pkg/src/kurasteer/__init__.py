"""Optimal control of the mean-field Kuramoto-Sakaguchi equation.

Spectral forward/adjoint solvers for the nonlocal oscillator-density PDE,
reduced gradients for velocity, interaction-strength and additive-source
controls, an Armijo descent loop, and independent validation oracles.
"""

from .coupling import (
    CouplingParams,
    PolarOrder,
    circular_moments,
    interaction_field,
    interaction_field_adjoint,
    order_parameter,
)
from .dynamics import (
    CFLError,
    ControlMode,
    ControlSet,
    ControlShape,
    NumericsError,
    ResolutionWarning,
    TimeGrid,
    Trajectory,
    adjoint_rhs,
    solve_adjoint,
    solve_state,
    state_rhs_advective,
)
from .grid import CircleGrid, Field, d2dtheta2, ddtheta, diffuse, integrate, random_bandlimited
from .optimizer import (
    CostWeights,
    GradientCheckReport,
    IterationRecord,
    OcpProblem,
    OptResult,
    OptimizerConfig,
    cost,
    gradient_check,
    optimize,
    reduced_gradient,
    sync_series,
)
from .oracles import (
    FixedPointResult,
    ParticleEnsemble,
    bessel_ratio,
    interaction_field_quadrature,
    simulate_particles,
    stationary_density,
    stationary_fixed_point,
)
from .scenarios import DensitySpec

__version__ = "0.1.0"

__all__ = [
    "CFLError",
    "CircleGrid",
    "ControlMode",
    "ControlSet",
    "ControlShape",
    "CostWeights",
    "CouplingParams",
    "DensitySpec",
    "Field",
    "FixedPointResult",
    "GradientCheckReport",
    "IterationRecord",
    "NumericsError",
    "OcpProblem",
    "OptResult",
    "OptimizerConfig",
    "ParticleEnsemble",
    "PolarOrder",
    "ResolutionWarning",
    "TimeGrid",
    "Trajectory",
    "adjoint_rhs",
    "bessel_ratio",
    "circular_moments",
    "cost",
    "d2dtheta2",
    "ddtheta",
    "diffuse",
    "gradient_check",
    "integrate",
    "interaction_field",
    "interaction_field_adjoint",
    "interaction_field_quadrature",
    "optimize",
    "order_parameter",
    "random_bandlimited",
    "reduced_gradient",
    "simulate_particles",
    "solve_adjoint",
    "solve_state",
    "state_rhs_advective",
    "stationary_density",
    "stationary_fixed_point",
    "sync_series",
]
