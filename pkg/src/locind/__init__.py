"""Local indistinguishability versus circuit complexity: local lemma bounds,
shallow-circuit simulation, approximate codes, W states and MPS/LSM tools."""

from .aqec import (Code, clifford_average_overlap, code_condition_report, commuting_projector_certificate,
                   distinguishability_bound, distinguishing_operator, parent_certificate,
                   subsystem_variance, sv_lower_bound_check, u1_filling_bound, verify_distinguishability)
from .circuits import (Circuit, Connectivity, Gate, LocalOperator, apply_circuit, circuit_lightcone,
                       clustering_check, lightcone_function, reduced_density_matrix)
from .lll import (DependencyGraph, Event, JointDistribution, LllAssignment, exact_none_probability,
                  glll_bound, solve_x0, symmetric_bound, verify_lopsided_condition)
from .mps import (ChargeAssignment, MPSTensor, TiledCircuit, canonicalize, circuit_to_imps,
                  clustering_constant, large_gauge_transform, lsm_report, momentum_phase,
                  ring_truncation, transfer_matrix)
from .wstate import build_w, patch_excitation, w_bound_report, w_code, w_correlation_norm

__version__ = "0.1.0"

__all__ = [
    "Code", "clifford_average_overlap", "code_condition_report", "commuting_projector_certificate",
    "distinguishability_bound", "distinguishing_operator", "parent_certificate", "subsystem_variance",
    "sv_lower_bound_check", "u1_filling_bound", "verify_distinguishability",
    "Circuit", "Connectivity", "Gate", "LocalOperator", "apply_circuit", "circuit_lightcone",
    "clustering_check", "lightcone_function", "reduced_density_matrix",
    "DependencyGraph", "Event", "JointDistribution", "LllAssignment", "exact_none_probability",
    "glll_bound", "solve_x0", "symmetric_bound", "verify_lopsided_condition",
    "ChargeAssignment", "MPSTensor", "TiledCircuit", "canonicalize", "circuit_to_imps",
    "clustering_constant", "large_gauge_transform", "lsm_report", "momentum_phase",
    "ring_truncation", "transfer_matrix",
    "build_w", "patch_excitation", "w_bound_report", "w_code", "w_correlation_norm",
]
