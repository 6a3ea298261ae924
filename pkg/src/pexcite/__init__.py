"""Persistent-excitation structure of vector regressors.

Sliding-window PE tests, PE-subspace estimation and decomposition,
regularity diagnostics and gradient adaptive-law simulation.
"""

__version__ = "0.1.0"

from .errors import DivergenceError, GeometryError, InputError, RangeError
from .signals import (GammaSchedule, SampledSignal, TimeGrid, add, apply_linear_map, constant,
                      envelope_scale, gamma_eval, pathological_pair, sample_sinusoid_mix, stack,
                      zeros)
from .excitation import (ExcitationTimes, GramSweep, PEVerdict, RecurrenceClass,
                         build_gram_sweep, classify_recurrence, directional_pe_test,
                         excitation_times, matrix_pe_test)
from .geometry import (ObliqueProjector, PEDecomposition, ProjectionPair, Subspace, complement,
                       map_subspace, max_angle, oblique_projector, pe_decompose,
                       principal_angles, projection_pair, span, subspace_intersect,
                       subspace_sum)
from .estimator import (PEReport, RegularityReport, estimate_pe_subspace, probe_nonpe_set,
                        regularity_diagnostic)
from .adaptive import (AdaptiveProblem, RunResult, check_affine_set_membership,
                       check_error_regulation, prior_knowledge_target, retention_experiment,
                       simulate_gradient_law)
