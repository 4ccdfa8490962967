"""Domain types and k-nearest-neighbour objective evaluation.

A :class:`Dataset` holds ``N`` historic data points: a table of ``p`` instance
features (numeric or categorical) and a precomputed ``N x N`` matrix of
solution distances.  A feature selection is scored by summing, over every data
point, the solution distances to its ``k`` nearest neighbours measured in the
1-norm over the selected features.  Distance ties at the k-th position are
resolved optimistically (smallest solution distances) or pessimistically
(largest).

All indices are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"
OPTIMISTIC = "optimistic"
PESSIMISTIC = "pessimistic"

DEFAULT_TIE_TOLERANCE = 1e-9


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FeatureColumn:
    """One instance feature observed on every data point.

    Categorical values are stored as integer codes into ``categories``.
    """

    name: str
    kind: str
    values: np.ndarray
    categories: tuple = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        dtype = np.int64 if self.kind == CATEGORICAL else np.float64
        values = np.array(self.values, dtype=dtype).reshape(-1)
        if self.kind == NUMERIC and not np.all(np.isfinite(values)):
            raise ValueError(f"feature {self.name!r}: non-finite value")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def numeric(cls, name: str, values: Iterable[float]) -> "FeatureColumn":
        return cls(name, NUMERIC, np.asarray(list(values), dtype=float))

    @classmethod
    def categorical(cls, name: str, labels: Iterable) -> "FeatureColumn":
        """Encode arbitrary hashable labels, codes in order of first appearance."""
        labels = list(labels)
        categories: list = []
        index: dict = {}
        codes = []
        for lab in labels:
            if lab not in index:
                index[lab] = len(categories)
                categories.append(lab)
            codes.append(index[lab])
        return cls(name, CATEGORICAL, np.asarray(codes, dtype=np.int64), tuple(categories))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    def labels(self) -> list:
        if self.kind == CATEGORICAL and self.categories:
            return [self.categories[c] for c in self.values]
        return self.values.tolist()

    def pairwise(self) -> np.ndarray:
        """N x N matrix of featurewise distances."""
        v = self.values
        if self.kind == CATEGORICAL:
            return (v[:, None] != v[None, :]).astype(float)
        return np.abs(v[:, None] - v[None, :])


@dataclass(frozen=True, eq=False)
class Dataset:
    """Historic data points: instance features plus solution distances.

    The object is immutable after construction, so it can be shared between
    threads evaluating different selections.
    """

    features: tuple
    solution_distance: np.ndarray
    symmetry_tolerance: float = 1e-9
    _values: np.ndarray = field(init=False, repr=False, compare=False)
    _categorical: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        features = tuple(self.features)
        if len(features) < 1:
            raise ValueError("dataset needs at least one feature")
        n = len(features[0])
        if n < 2:
            raise ValueError("dataset needs at least two data points")
        for col in features:
            if len(col) != n:
                raise ValueError(f"feature {col.name!r} has {len(col)} values, expected {n}")
        names = [col.name for col in features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        dx = np.array(self.solution_distance, dtype=float)
        if dx.shape != (n, n):
            raise ValueError(f"solution_distance must be {n}x{n}, got {dx.shape}")
        if not np.all(np.isfinite(dx)) or np.any(dx < 0):
            raise ValueError("solution distances must be finite and nonnegative")
        if np.any(np.diag(dx) != 0):
            raise ValueError("solution_distance must have a zero diagonal")
        if not np.allclose(dx, dx.T, rtol=0, atol=self.symmetry_tolerance):
            raise ValueError("solution_distance must be symmetric")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "solution_distance", _frozen(dx))
        values = np.column_stack([col.values.astype(float) for col in features])
        object.__setattr__(self, "_values", _frozen(values))
        cat = np.array([col.kind == CATEGORICAL for col in features])
        object.__setattr__(self, "_categorical", _frozen(cat))

    @classmethod
    def from_arrays(
        cls,
        instance_features,
        solution_distance=None,
        *,
        solution_features=None,
        names: Sequence[str] | None = None,
        normalize: bool = False,
    ) -> "Dataset":
        """Build a numeric-only dataset from an ``N x p`` array.

        Exactly one of ``solution_distance`` or ``solution_features`` must be
        given.  With ``normalize`` every column is min-max scaled to [0, 1]
        (constant columns become 0).
        """
        x = np.asarray(instance_features, dtype=float)
        if x.ndim != 2:
            raise ValueError("instance_features must be a 2-d array")
        if names is None:
            names = [f"f{j}" for j in range(x.shape[1])]
        cols = [FeatureColumn.numeric(nm, x[:, j]) for j, nm in enumerate(names)]
        if (solution_distance is None) == (solution_features is None):
            raise ValueError("give exactly one of solution_distance or solution_features")
        if solution_distance is None:
            solution_distance = solution_distance_matrix(solution_features)
        ds = cls(tuple(cols), solution_distance)
        return ds.normalized() if normalize else ds

    @property
    def n_points(self) -> int:
        return self.solution_distance.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def feature_names(self) -> list[str]:
        return [col.name for col in self.features]

    @property
    def values(self) -> np.ndarray:
        """N x p matrix of feature values (categorical columns as codes)."""
        return self._values

    @property
    def categorical_mask(self) -> np.ndarray:
        return self._categorical

    def feature_index(self, key) -> int:
        """Resolve a feature name or integer index."""
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < self.n_features:
                raise IndexError(f"feature index {key} out of range")
            return int(key)
        try:
            return self.feature_names.index(key)
        except ValueError:
            raise KeyError(f"unknown feature {key!r}") from None

    def constant_features(self) -> list[int]:
        return [f for f, col in enumerate(self.features) if col.is_constant]

    def normalized(self) -> "Dataset":
        cols = []
        for col in self.features:
            if col.kind == NUMERIC:
                lo, hi = col.values.min(), col.values.max()
                scaled = (col.values - lo) / (hi - lo) if hi > lo else np.zeros(len(col))
                cols.append(FeatureColumn(col.name, NUMERIC, scaled))
            else:
                cols.append(col)
        return Dataset(tuple(cols), self.solution_distance)

    def subset_features(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.features[f] for f in indices), self.solution_distance)

    def permuted(self, perm: Sequence[int]) -> "Dataset":
        """Relabel data points: new point ``a`` is old point ``perm[a]``."""
        perm = np.asarray(perm)
        cols = tuple(
            FeatureColumn(c.name, c.kind, c.values[perm], c.categories) for c in self.features
        )
        return Dataset(cols, self.solution_distance[np.ix_(perm, perm)])

    def to_dict(self) -> dict:
        feats = []
        for col in self.features:
            feats.append({"name": col.name, "kind": col.kind, "values": col.labels()})
        return {
            "n_points": self.n_points,
            "features": feats,
            "solution_distance": self.solution_distance.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, *, normalize: bool = False) -> "Dataset":
        """Parse the JSON dataset schema (see README)."""
        try:
            raw_features = data["features"]
        except KeyError:
            raise ValueError("dataset JSON lacks 'features'") from None
        cols = []
        for entry in raw_features:
            kind = entry.get("kind", NUMERIC)
            if kind == CATEGORICAL:
                cols.append(FeatureColumn.categorical(entry["name"], entry["values"]))
            elif kind == NUMERIC:
                cols.append(FeatureColumn.numeric(entry["name"], entry["values"]))
            else:
                raise ValueError(f"feature {entry.get('name')!r}: unknown kind {kind!r}")
        has_dx = "solution_distance" in data
        has_sf = "solution_features" in data
        if has_dx == has_sf:
            raise ValueError("give exactly one of 'solution_distance' or 'solution_features'")
        dx = (
            np.asarray(data["solution_distance"], dtype=float)
            if has_dx
            else solution_distance_matrix(data["solution_features"])
        )
        ds = cls(tuple(cols), dx)
        if "n_points" in data and int(data["n_points"]) != ds.n_points:
            raise ValueError(f"n_points={data['n_points']} but data has {ds.n_points} points")
        return ds.normalized() if normalize else ds


def load_dataset(path, *, normalize: bool = False) -> Dataset:
    with open(path) as fh:
        return Dataset.from_dict(json.load(fh), normalize=normalize)


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(json.dumps(dataset.to_dict(), indent=1) + "\n")


@dataclass(frozen=True)
class EvalConfig:
    k: int = 1
    mode: str = PESSIMISTIC
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.mode not in (OPTIMISTIC, PESSIMISTIC):
            raise ValueError(f"mode must be {OPTIMISTIC!r} or {PESSIMISTIC!r}")
        if self.tie_tolerance < 0:
            raise ValueError("tie_tolerance must be nonnegative")

    def check(self, dataset: Dataset) -> None:
        if self.k > dataset.n_points - 1:
            raise ValueError(f"k={self.k} exceeds N-1={dataset.n_points - 1}")


@dataclass(frozen=True)
class NeighborClassification:
    point: int
    epsilon: float
    strict: tuple
    borderline: tuple
    k_bar: int


@dataclass(frozen=True, eq=False)
class EvalResult:
    objective: float
    contributions: np.ndarray
    neighbors: tuple

    @property
    def per_point(self) -> list[tuple[float, tuple]]:
        return list(zip(self.contributions.tolist(), self.neighbors))


def _selection_indices(dataset: Dataset, selection) -> np.ndarray:
    sel = sorted({dataset.feature_index(f) for f in selection})
    if not sel:
        raise ValueError("feature selection must be nonempty")
    return np.asarray(sel, dtype=int)


def featurewise_distance(dataset: Dataset, i: int, j: int, f: int) -> float:
    n = dataset.n_points
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"point index out of range for N={n}")
    f = dataset.feature_index(f)
    a, b = dataset.values[i, f], dataset.values[j, f]
    if dataset.categorical_mask[f]:
        return 0.0 if a == b else 1.0
    return float(abs(a - b))


def selected_instance_distance(dataset: Dataset, i: int, j: int, selection) -> float:
    sel = _selection_indices(dataset, selection)
    return float(sum(featurewise_distance(dataset, i, j, int(f)) for f in sel))


def instance_distance_matrix(dataset: Dataset, selection) -> np.ndarray:
    """N x N matrix of 1-norm instance distances over the selected features."""
    sel = _selection_indices(dataset, selection)
    vals = dataset.values
    n = dataset.n_points
    out = np.zeros((n, n))
    for f in sel:
        v = vals[:, f]
        if dataset.categorical_mask[f]:
            out += v[:, None] != v[None, :]
        else:
            out += np.abs(v[:, None] - v[None, :])
    return out


def solution_distance_matrix(solution_features) -> np.ndarray:
    """Pairwise 1-norm distances between rows of an ``N x q`` matrix."""
    x = np.asarray(solution_features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("solution_features must be an N x q array with q >= 1")
    return np.abs(x[:, None, :] - x[None, :, :]).sum(axis=2)


def _kth_threshold(dist: np.ndarray, k: int) -> np.ndarray:
    """Row-wise k-th smallest off-diagonal distance; ``dist`` has inf on the diagonal."""
    return np.partition(dist, k - 1, axis=1)[:, k - 1]


def _masked_distances(dataset: Dataset, selection) -> np.ndarray:
    dist = instance_distance_matrix(dataset, selection)
    np.fill_diagonal(dist, np.inf)
    return dist


def classify_neighbors(dataset: Dataset, i: int, selection, config: EvalConfig) -> NeighborClassification:
    config.check(dataset)
    if not 0 <= i < dataset.n_points:
        raise IndexError(f"point {i} out of range")
    row = _masked_distances(dataset, selection)[i]
    return _classify_row(i, row, config)


def _classify_row(i: int, row: np.ndarray, config: EvalConfig) -> NeighborClassification:
    k, tau = config.k, config.tie_tolerance
    eps = float(np.partition(row, k - 1)[k - 1])
    strict = np.flatnonzero(row < eps - tau)
    border = np.flatnonzero(np.abs(row - eps) <= tau)
    return NeighborClassification(
        point=i,
        epsilon=eps,
        strict=tuple(int(j) for j in strict),
        borderline=tuple(int(j) for j in border),
        k_bar=k - len(strict),
    )


def _fill_order(dx_row: np.ndarray, border: np.ndarray, mode: str) -> np.ndarray:
    """Borderline indices in fill order; equal solution distances go by smallest index."""
    key = dx_row[border] if mode == OPTIMISTIC else -dx_row[border]
    return border[np.argsort(key, kind="stable")]


def evaluate_selection(dataset: Dataset, selection, config: EvalConfig) -> EvalResult:
    """Objective value of a selection with per-point contributions and neighbour sets."""
    config.check(dataset)
    dist = _masked_distances(dataset, selection)
    dx = dataset.solution_distance
    contributions = np.empty(dataset.n_points)
    neighbors = []
    for i in range(dataset.n_points):
        cls = _classify_row(i, dist[i], config)
        strict = np.asarray(cls.strict, dtype=int)
        fill = _fill_order(dx[i], np.asarray(cls.borderline, dtype=int), config.mode)[: cls.k_bar]
        chosen = np.concatenate([strict, fill])
        contributions[i] = dx[i, strict].sum() + dx[i, fill].sum()
        neighbors.append(tuple(sorted(int(j) for j in chosen)))
    return EvalResult(float(contributions.sum()), _frozen(contributions), tuple(neighbors))


def evaluate_objective(dataset: Dataset, selection, config: EvalConfig) -> float:
    """Objective value only; vectorised fast path used by the search routines.

    Equals ``evaluate_selection(...).objective`` up to floating-point
    summation order.
    """
    config.check(dataset)
    dist = _masked_distances(dataset, selection)
    return float(_objective_from_distances(dist, dataset.solution_distance, config).sum())


def _objective_from_distances(dist: np.ndarray, dx: np.ndarray, config: EvalConfig) -> np.ndarray:
    k, tau = config.k, config.tie_tolerance
    eps = _kth_threshold(dist, k)[:, None]
    strict = dist < eps - tau
    border = np.abs(dist - eps) <= tau
    contrib = np.where(strict, dx, 0.0).sum(axis=1)
    k_bar = k - strict.sum(axis=1)
    n_border = border.sum(axis=1)
    exact = n_border == k_bar
    contrib[exact] += np.where(border[exact], dx[exact], 0.0).sum(axis=1)
    rows = np.flatnonzero(~exact)
    if rows.size:
        sign = 1.0 if config.mode == OPTIMISTIC else -1.0
        keyed = np.where(border[rows], sign * dx[rows], np.inf)
        keyed.sort(axis=1)
        csum = np.cumsum(keyed, axis=1)
        contrib[rows] += sign * csum[np.arange(rows.size), k_bar[rows] - 1]
    return contrib


def generate_synthetic_dataset(
    n_points: int,
    n_features: int,
    n_solution_features: int,
    seed: int,
    *,
    n_informative: int = 2,
    decimals: int | None = None,
) -> Dataset:
    """Reproducible random dataset in which a few features drive the solutions.

    The first ``n_informative`` instance features (after a seeded shuffle of
    column order) determine binary solution features through random linear
    thresholds; the remaining columns are noise.  ``decimals`` rounds feature
    values so that distance ties occur.
    """
    if n_points < 2 or n_features < 1 or n_solution_features < 1:
        raise ValueError("need n_points >= 2, n_features >= 1, n_solution_features >= 1")
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n_points, n_features))
    if decimals is not None:
        x = np.round(x, decimals)
    n_inf = min(n_informative, n_features)
    order = rng.permutation(n_features)
    informative = x[:, order[:n_inf]]
    weights = rng.normal(size=(n_inf, n_solution_features))
    offsets = rng.normal(scale=0.5, size=n_solution_features)
    latent = informative @ weights + offsets + rng.normal(scale=0.3, size=(n_points, n_solution_features))
    sol = (latent > 0).astype(float)
    names = [f"f{j}" for j in range(n_features)]
    return Dataset.from_arrays(x, solution_features=sol, names=names)
