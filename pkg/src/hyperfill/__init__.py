"""Multiscale ball calculus on finite metric measure spaces.

Builds leveled ball graphs over point clouds, computes sequence and
function quasinorms graded by scale, and runs trace/extension operators
between a space and a distinguished subset, with a verification harness
for the norm equivalences the construction is designed to satisfy.
"""

from ._kernels import BACKEND
from ._version import __version__
from .calculus import (Partition, build_partition, discrete_derivative,
                       edge_blend, level_blend,
                       partition_lipschitz_quotient, poisson_extension,
                       telescoping_integral)
from .errors import ConfigError, GateError, HyperfillError, NumericalError
from .filling import (Filling, NestedFilling, audit_filling, audit_nested,
                      build_filling, build_nested_filling, filling_from_dict,
                      filling_to_dict, nested_from_dict, nested_to_dict,
                      overlap_audit)
from .hajlasz import HajlaszGradient, hajlasz_norm
from .norms import (NormVariant, SmoothnessParams, TraceAdmissibility,
                    admissibility, besov_fn_norm, besov_seq_norm,
                    half_ball_substitute, lp_norm, nonhom_norm,
                    trace_smoothness_window, triebel_fn_norm,
                    triebel_seq_norm)
from .space import (FiniteMetricMeasureSpace, IfsMap, IfsSystem, SubsetMask,
                    ahlfors_fit, cantor_mask, codim_regularity_check,
                    doubling_audit, ifs_attractor, mask_from_descriptor,
                    mask_to_descriptor, middle_thirds_system, porosity_scan,
                    sierpinski_system, space_from_descriptor,
                    space_to_descriptor, subspace, unit_cube_space)
from .trace import (ExtensionResult, SobolevCertificate, TraceResult,
                    codim_mass_band, extend_besov, extend_sobolev,
                    nonhom_extend, nonhom_trace, trace_besov, trace_triebel)
from .verify import (ExperimentReport, audit_approx_density,
                     audit_nonhom_split, audit_norm_variants,
                     audit_porosity_qindependence, audit_small_p_embedding,
                     audit_theorem_suite)

__all__ = [
    "BACKEND", "__version__",
    "ConfigError", "GateError", "HyperfillError", "NumericalError",
    "FiniteMetricMeasureSpace", "SubsetMask", "IfsMap", "IfsSystem",
    "unit_cube_space", "ifs_attractor", "middle_thirds_system",
    "sierpinski_system", "cantor_mask", "subspace", "space_from_descriptor",
    "space_to_descriptor", "mask_from_descriptor", "mask_to_descriptor",
    "ahlfors_fit", "doubling_audit", "porosity_scan",
    "codim_regularity_check",
    "Filling", "NestedFilling", "build_filling", "build_nested_filling",
    "audit_filling", "audit_nested", "overlap_audit",
    "filling_to_dict", "filling_from_dict", "nested_to_dict",
    "nested_from_dict",
    "poisson_extension", "discrete_derivative", "Partition",
    "build_partition", "partition_lipschitz_quotient",
    "level_blend", "edge_blend", "telescoping_integral",
    "SmoothnessParams", "NormVariant", "TraceAdmissibility",
    "half_ball_substitute", "lp_norm",
    "besov_seq_norm", "triebel_seq_norm", "besov_fn_norm", "triebel_fn_norm",
    "nonhom_norm", "admissibility", "trace_smoothness_window",
    "HajlaszGradient", "hajlasz_norm",
    "TraceResult", "ExtensionResult", "SobolevCertificate",
    "trace_besov", "extend_besov", "trace_triebel", "extend_sobolev",
    "nonhom_trace", "nonhom_extend", "codim_mass_band",
    "ExperimentReport", "audit_norm_variants",
    "audit_porosity_qindependence", "audit_nonhom_split",
    "audit_small_p_embedding", "audit_approx_density", "audit_theorem_suite",
]
