"""Small hand-checkable datasets.

``toy_dataset`` is a three-instance shortest-path example on a two-edge
graph: feature ``upper`` is the cost of the upper s-t edge, ``lower`` the
cost of the lower one, and the solution distance is 0 when two instances use
the same edge, 1 otherwise.

``knapsack_dataset`` is a four-instance project-budgeting example with five
instance features, one of them categorical, and two solution features
(project selection rate, majority-of-best-sector indicator).
"""

from __future__ import annotations

import numpy as np

from .core import Dataset, FeatureColumn, solution_distance_matrix

TOY_UPPER = (1.0, 1.9, 3.0)
TOY_LOWER = (1.4, 1.5, 1.4)
# chosen edge per instance: 0 = upper, 1 = lower
TOY_PATHS = (0, 1, 1)

KNAPSACK_FEATURES = {
    "budget": (5, 14, 6, 12),
    "best_group": ("healthcare", "education", "education", "healthcare"),
    "ratio_above_2": (1, 1, 0, 0),
    "n_projects": (8, 8, 8, 7),
    "best_second_ratio": (1.04, 1.07, 1.50, 1.33),
}
KNAPSACK_SOLUTION_FEATURES = ((0.25, 0.0), (0.25, 0.0), (0.5, 1.0), (0.57, 1.0))


def toy_dataset() -> Dataset:
    paths = np.asarray(TOY_PATHS)
    dx = (paths[:, None] != paths[None, :]).astype(float)
    cols = (FeatureColumn.numeric("upper", TOY_UPPER), FeatureColumn.numeric("lower", TOY_LOWER))
    return Dataset(cols, dx)


def knapsack_dataset() -> Dataset:
    cols = []
    for name, vals in KNAPSACK_FEATURES.items():
        if name == "best_group":
            cols.append(FeatureColumn.categorical(name, vals))
        else:
            cols.append(FeatureColumn.numeric(name, vals))
    return Dataset(tuple(cols), solution_distance_matrix(KNAPSACK_SOLUTION_FEATURES))


BUILTIN = {"toy": toy_dataset, "knapsack": knapsack_dataset}
