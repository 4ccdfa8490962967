"""MIP model building, LP export and solution cross-checking."""

from .formulations import (
    CrosscheckReport,
    build_optimistic_mip,
    build_pessimistic_mip,
    certified_alpha_bounds,
    compute_alpha_bounds,
    compute_big_m,
    crosscheck_solution,
    optimistic_assignment,
    pessimistic_alpha_thresholds,
    pessimistic_certificate,
    quantum_alpha_bounds,
    resolve_alpha_bounds,
    selection_from_solution,
    value_quantum,
)
from .model import (
    MipModel,
    parse_solution_text,
    read_solution_file,
    to_lp_string,
    write_exchange_file,
    write_start_file,
)

__all__ = [
    "CrosscheckReport", "MipModel", "build_optimistic_mip", "build_pessimistic_mip",
    "certified_alpha_bounds", "compute_alpha_bounds", "compute_big_m", "crosscheck_solution",
    "optimistic_assignment", "parse_solution_text", "pessimistic_alpha_thresholds",
    "pessimistic_certificate", "quantum_alpha_bounds", "read_solution_file",
    "resolve_alpha_bounds", "selection_from_solution", "to_lp_string", "value_quantum",
    "write_exchange_file", "write_start_file",
]
