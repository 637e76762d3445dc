"""fluxlab: numerical laboratory for the half-line heat equation with a
nonlinear boundary flux and Radon-measure data."""

__version__ = "0.1.0"

from .fluxlaw import (AdmissibilityResult, FluxLaw, InconclusiveTailError,
                      NonmonotoneLawError, admissibility_integral)
from .kernels import (HeatBallQuery, MeasureData, boundary_heat_ball_measure,
                      heat_ball_measure, heat_kernel, linear_solution,
                      mirrored_kernel, weak_norm)
from .selfsimilar import (ProfileExistence, ProfileInconclusiveError,
                          SelfSimilarProfile, WhittakerParams, decaying_profile,
                          envelope_check, existence_sweep, profile_constant,
                          self_similar_solution, whittaker_params)
from .spectral_weighted import (ConvergedToZeroError, NoDescentError,
                                WeightedEigenResult, WeightedGrid, apply_operator,
                                assemble_LK, eigen_smallest, functional_J,
                                minimize_J)
from .trace_volterra import (FieldSnapshot, GradedTimeGrid,
                             ImageSeriesTooShortError, InadmissibleDataError,
                             NewtonStallError, TraceSolution, reconstruct_field,
                             scale_solution, solve_interval_trace, solve_trace)
from .fdm_oracle import FdmConfig, solve_fdm, solve_fdm_interval
from .harness import (DichotomyReport, MarcinkiewiczReport, TestFunction,
                      UnclassifiableError, contraction_check, dichotomy_sweep,
                      marcinkiewicz_check, scaling_identity_check, weak_residual)
