"""Density evolution, thresholds and Monte-Carlo checks for self-healing
interdependent cyber-physical networks."""

from .de_engine import (
    SteadyState,
    SystemParams,
    Trajectory,
    de_step,
    de_trajectory,
    epsilon_s,
    one_to_one_step,
    one_to_one_trajectory,
    taylor_coefficients,
)
from .degree_dist import (
    DegreeDistribution,
    build_er_truncated,
    build_scale_free,
    evaluate,
    from_coefficients,
    mean_degree,
    parse_distribution,
    point_mass,
    sample_degree,
    second_derivative_at_one,
)
from .delay_de import (
    DelayParams,
    SlotTrajectory,
    contagion_slot,
    delayed_de_step,
    delayed_trajectory,
    theorem5_closed_form,
)
from .threshold_opt import OptimizeResult, ThresholdResult, epsilon_max, optimize_lambda, sweep

__version__ = "0.1.0"
