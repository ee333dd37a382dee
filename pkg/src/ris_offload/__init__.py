"""Min-max task-offloading delay for RIS-assisted edge computing.

Library layout:
    model     scenario types and closed-form delay expressions
    lift      quadratic lifts of both optimization stages into trace form
    sdp       trace-constrained SDP solving and vector extraction
    rounding  randomized rounding of the fractional stage-1 solution
    exact     bisection bandwidth allocator and brute-force oracle
    harness   Monte Carlo sweeps with paired sampling and CSV output
    cli       command-line entry point (solve / sweep / verify)
"""

from .errors import (BisectionNonConvergenceError, ConfigurationError,
                     DegenerateSolutionError, DimensionMismatchError,
                     EnumerationLimitError, InfeasibleAllocationError,
                     RisOffloadError, SdpError, SdpInfeasibleError,
                     SdpNonConvergenceError, SdpUnboundedError)
from .model import (Allocation, DecisionVector, Scenario, ScenarioConfig,
                    UserParams, build_scenario, local_delay, offload_delay,
                    sample_scenario, total_delay, worst_case_delay)
from .lift import (Stage1Lift, Stage2Lift, build_stage1, build_stage2,
                   dump_matrices, eval_quadratic)
from .sdp import (SdpProblem, SdpSolution, SolverTolerances, extract_vector,
                  solve, stage1_sdp_problem, stage2_sdp_problem)
from .rounding import (RoundingPolicy, posterior_probabilities,
                       sample_decisions, select_best)
from .exact import (BisectionConfig, allocate_bandwidth, brute_force)
from .harness import (ExperimentConfig, SweepResult, run_sweep, run_trial,
                      solve_instance)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
