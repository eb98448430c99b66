"""Prony systems, Prony leaves and error amplification for clustered spike trains."""

from .core import (DegenerateSpreadError, DimensionMismatchError, ModelTransform, MomentVector,
                   PronyError, RegularityParams, Signal, apply_transform, in_error_set,
                   in_moment_parallelepiped, is_regular, moment_metric, moments, normalize)
from .inversion import (FULL, ErrorSweepRecord, InversionResult, Status, hausdorff_distance,
                        leaf_reconstruction_error, prony_solve, sample_error_set, scaling_sweep,
                        worst_case_errors)
from .leaves import (CurveKind, LeafPointCloud, LeafSpec, SamplingConfig, TwoNodeCurveClass,
                     classify_two_node_curve, complete_leaf_point, leaf_projection_high_q,
                     leaf_section_filter, sample_leaf_low_q)
from .linalg import (AffineSolutionSet, hankel_solution_set, leaf_amplitudes_low_q,
                     vandermonde_amplitudes)
from .polynomial import (MonicRealPolynomial, NotHyperbolicError, is_hyperbolic,
                         moment_recurrence_check, root_mapping, vieta_map)

__version__ = "0.1.0"
