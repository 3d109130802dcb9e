"""Neural-network topology optimization with strain-energy conditioning fields."""

__version__ = "0.1.0"

from .condfield import ConditioningField, gamma_filter, log_filter, make_field, percentile_99, sample_bilinear
from .errors import NumericError, OptimizationAborted, ParameterError, SolverError
from .fem import (BoundarySpec, FieldSolution, GridDomain, MaterialModel, assemble_and_solve,
                  compliance_sensitivity, element_stiffness, strain_energy_field)
from .harness import SweepResult, SweepSpec, convergence_speedup, run_sweep, summarize
from .network import AdamState, NetworkParams, adam_step, backward, forward, init_params
from .optimize import (ConvergenceHistory, LossTerms, OptimizationConfig, alpha_at, initial_reference,
                       loss, loss_density_gradient, render_density, run_optimization)
from .problems import PRESETS, ProblemSpec, problem_from_config
from .simp import SIMPConfig, oc_update, run_simp, sensitivity_filter
