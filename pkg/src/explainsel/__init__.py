"""Instance feature selection for data-driven explainable optimization."""

from .core import (
    Dataset,
    EvalConfig,
    EvalResult,
    FeatureColumn,
    NeighborClassification,
    classify_neighbors,
    evaluate_objective,
    evaluate_selection,
    featurewise_distance,
    generate_synthetic_dataset,
    load_dataset,
    save_dataset,
    selected_instance_distance,
    solution_distance_matrix,
)
from .solvers import KOptConfig, SearchResult, exact_enumeration, k_opt_search, random_selection_baseline

__version__ = "0.1.0"
