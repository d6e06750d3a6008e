"""subdiff: controlled SDEs under inverse-stable time changes.

Simulation of stable subordinators and their first-passage inverses,
time-changed Levy noise, Euler integration of controlled dynamics,
Hamiltonian/adjoint evaluation for the associated maximum principle,
regression-based Picard solving of the time-changed backward SDE, and
common-random-number Monte Carlo verification of optimal controls.
"""
from .bsde import BsdeSpec, PicardIterate, PicardReport, picard_diagnostics, picard_solve
from .errors import (DivergenceError, GainSingularityError, InsufficientPathError,
                     MonteCarloError, OptimizerDivergedError, ParameterError,
                     QuadratureError, RegressionRankError, SubdiffError)
from .forward_sde import (ControlProblem, ControlSignal, ControlledPath, SmoothFn,
                          coarsen_bundle, generator_l1, generator_l2, ito_residual,
                          simulate_forward, simulate_forward_stacked, stack_bundles)
from .hamiltonian import (AdjointTriple, concavity_spot_check, hamiltonian_general,
                          hamiltonian_simple, maximize_hamiltonian, terminal_adjoint)
from .levy_noise import (DiscreteJumps, JumpMeasureSpec, NoiseBundle, StepJumps,
                         compensated_integral, make_bundle, measure_integral,
                         sample_noise, standard_normal_measure)
from .mc import (ComparisonReport, PerformanceEstimate, TimeGrid, compare_controls,
                 estimate_performance, perturbation_family, sample_ensemble)
from .problems import (FIGURE_PRESETS, ConsumptionConfig, FigureTable,
                       RegulatorConfig, consumption_control, consumption_gain,
                       consumption_policy, consumption_problem,
                       consumption_stop_rule, flat_fraction, regulator_control,
                       regulator_gain, regulator_policy, regulator_problem,
                       reproduce_figure)
from .rng import master_stream, path_stream
from .subordinator import (InversePath, OperationalGrid, StableParams,
                           SubordinatorPath, inverse_moment, inverse_on_grid,
                           invert_subordinator, simulate_covering_path,
                           simulate_subordinator, stable_increments)

__version__ = "0.1.0"
