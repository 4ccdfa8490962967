"""Shortest-path experiment lab."""

from .explain import (
    EXP_WEIGHTED,
    UNIFORM,
    PathDataset,
    build_path_dataset,
    most_explainable_path,
    nearest_points,
    path_hamming_matrix,
    relative_length,
)
from .experiment import ExperimentConfig, ExperimentResult, load_network, run_experiment
from .features import FeatureTable, GridSpec, build_grid_features, edge_cells, edge_feature_table
from .graph import (
    NegativeCycleError,
    PathSolution,
    RoadGraph,
    ScenarioSet,
    UnreachableError,
    label_correcting_path,
    shortest_path,
)
from .io import load_data_dir, load_graph, load_scenarios, save_graph, save_scenarios
from .synthetic import congestion_scenarios, grid_road_network
