"""Mixed-integer formulations of optimal feature selection.

Variable naming (indices 0-based, ``i != j`` data points, ``f`` features):

optimistic model
    ``b_f`` (binary, feature selected), ``y_i_j`` (binary, j is a neighbour of
    i), ``d_i_j`` (selected-feature distance), ``eps_i`` (neighbour threshold).
    Counts: ``p + N(N-1)`` binaries, ``N(N-1) + N`` continuous,
    ``3N(N-1) + N + 2`` rows.

pessimistic model
    ``b_f``; per point ``alpha_i``, ``gamma_i``; per pair ``beta_i_j``,
    ``delta_i_j``; products ``w_f_i = b_f * alpha_i`` and
    ``z_f_i_j = b_f * beta_i_j``.  Counts: ``p`` binaries,
    ``2N + 2N(N-1) + pN + pN(N-1)`` continuous,
    ``2N(N-1) + N + 2 + 3pN^2`` rows.

The pessimistic model is the LP dual of the per-point worst-case neighbour
selection problem, with the distance-times-dual products linearised through
``b``.  With ``eval_k="equality"`` (default) the neighbour count is an
equality, ``gamma_i`` is free, and for every fixed ``b`` the continuous
optimum equals the pessimistic objective of that selection, provided each
``alpha_i`` may reach the selection's threshold (see
:func:`pessimistic_alpha_thresholds`).  ``eval_k="inequality"`` keeps
``gamma_i >= 0``; that relaxation can overestimate the pessimistic value.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    PESSIMISTIC,
    Dataset,
    EvalConfig,
    evaluate_selection,
    instance_distance_matrix,
)
from ..solvers import enumeration_size
from .model import BINARY, EQ, GE, LE, MipModel

log = logging.getLogger(__name__)

BIG_M_MARGIN = 1e-6
CERTIFIED_BUDGET = 20000


def _feature_distances(dataset: Dataset) -> np.ndarray:
    """p x N x N array of featurewise distances."""
    return np.stack([col.pairwise() for col in dataset.features])


def compute_big_m(dataset: Dataset) -> float:
    """Upper bound on every selected-feature distance: max full 1-norm distance plus margin.

    Falls back to 1.0 when all instances coincide.
    """
    full = _feature_distances(dataset).sum(axis=0)
    m = float(full.max())
    return m * (1 + BIG_M_MARGIN) if m > 0 else 1.0


def compute_alpha_bounds(dataset: Dataset) -> np.ndarray:
    """Per-point bound ``max_j dX(i,j) / min_{f: d_f(i,j) > 0} d_f(i,j)``.

    Pairs with no differing feature are skipped; a point with no usable pair
    gets 0.  The bound is only safe for the ``eval_k="inequality"`` model.
    """
    fd = _feature_distances(dataset)
    dx = dataset.solution_distance
    n = dataset.n_points
    out = np.zeros(n)
    for i in range(n):
        best = 0.0
        for j in range(n):
            if j == i:
                continue
            nz = fd[:, i, j][fd[:, i, j] > 0]
            if nz.size:
                best = max(best, dx[i, j] / nz.min())
        out[i] = best
    return out


def pessimistic_alpha_thresholds(dataset: Dataset, selection, k: int, tie_tolerance: float = 1e-9) -> np.ndarray:
    """Smallest ``alpha_i`` at which the dual attains the pessimistic value of ``selection``.

    With P the pessimistic neighbour set of i, this is the largest ratio
    ``(dX(i,l) - dX(i,j)) / (d(i,l) - d(i,j))`` over ``j in P``, ``l not in P``
    with ``d(i,l) > d(i,j)``, floored at 0.
    """
    cfg = EvalConfig(k, PESSIMISTIC, tie_tolerance)
    res = evaluate_selection(dataset, selection, cfg)
    dist = instance_distance_matrix(dataset, selection)
    dx = dataset.solution_distance
    n = dataset.n_points
    out = np.zeros(n)
    for i in range(n):
        chosen = np.asarray(res.neighbors[i])
        others = np.setdiff1d(np.delete(np.arange(n), i), chosen)
        if others.size == 0:
            continue
        gap = dist[i, others][None, :] - dist[i, chosen][:, None]
        gain = dx[i, others][None, :] - dx[i, chosen][:, None]
        ok = gap > tie_tolerance
        if np.any(ok):
            out[i] = max(0.0, float((gain[ok] / gap[ok]).max()))
    return out


def certified_alpha_bounds(dataset: Dataset, L: int, k: int, tie_tolerance: float = 1e-9,
                           budget: int = CERTIFIED_BUDGET) -> np.ndarray:
    """Maximum of :func:`pessimistic_alpha_thresholds` over all selections of size 1..L."""
    p = dataset.n_features
    if enumeration_size(p, L) > budget:
        raise ValueError("too many selections for certified alpha bounds")
    out = np.zeros(dataset.n_points)
    for size in range(1, min(L, p) + 1):
        for sel in itertools.combinations(range(p), size):
            out = np.maximum(out, pessimistic_alpha_thresholds(dataset, sel, k, tie_tolerance))
    return out


def value_quantum(dataset: Dataset, max_decimals: int = 9) -> float | None:
    """Largest ``10**-d`` such that every numeric feature value is a multiple of it.

    Distance gaps between any two selections are then multiples of the
    quantum.  Returns None when no ``d <= max_decimals`` fits.
    """
    vals = dataset.values[:, ~dataset.categorical_mask]
    if vals.size == 0:
        return 1.0
    scale = max(1.0, float(np.abs(vals).max()))
    for d in range(max_decimals + 1):
        scaled = vals * 10.0**d
        if np.abs(scaled - np.round(scaled)).max() <= 1e-6 * max(1.0, scale * 10.0**d * 1e-9):
            return 10.0**-d
    return None


def quantum_alpha_bounds(dataset: Dataset, gap: float) -> np.ndarray:
    """``(max_j dX(i,j) - min_j dX(i,j)) / gap`` for a lower bound ``gap`` on positive distance gaps."""
    dx = np.array(dataset.solution_distance)
    np.fill_diagonal(dx, np.nan)
    return (np.nanmax(dx, axis=1) - np.nanmin(dx, axis=1)) / gap


def resolve_alpha_bounds(dataset: Dataset, L: int, k: int, method="auto", tie_tolerance: float = 1e-9):
    """Return ``(bounds, method_used)``.

    ``auto`` tries certified enumeration, then the decimal-quantum bound, then
    the tie tolerance as gap bound (valid for the evaluator's tie semantics).
    """
    if not isinstance(method, str):
        return np.asarray(method, dtype=float), "explicit"
    if method == "pairwise":
        return compute_alpha_bounds(dataset), "pairwise"
    if method in ("auto", "certified") and enumeration_size(dataset.n_features, L) <= CERTIFIED_BUDGET:
        return certified_alpha_bounds(dataset, L, k, tie_tolerance), "certified"
    if method == "certified":
        raise ValueError("too many selections for certified alpha bounds")
    if method in ("auto", "quantum"):
        q = value_quantum(dataset)
        if q is not None:
            return quantum_alpha_bounds(dataset, q), "quantum"
        if method == "quantum":
            raise ValueError("feature values do not lie on a decimal grid")
        log.warning("alpha bounds fall back to tie tolerance %g as distance gap", tie_tolerance)
        return quantum_alpha_bounds(dataset, tie_tolerance), "tolerance"
    raise ValueError(f"unknown alpha bound method {method!r}")


def _check_params(dataset: Dataset, L: int, k: int) -> None:
    if not 1 <= k <= dataset.n_points - 1:
        raise ValueError(f"need 1 <= k <= N-1 = {dataset.n_points - 1}")
    if not 1 <= L <= dataset.n_features:
        raise ValueError(f"need 1 <= L <= p = {dataset.n_features}")


def _pairs(n: int):
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _add_cardinality(model: MipModel, p: int, L: int) -> None:
    terms = [(f"b_{f}", 1.0) for f in range(p)]
    model.add_constraint("L_min", terms, GE, 1)
    model.add_constraint("L_max", terms, LE, L)


def build_optimistic_mip(dataset: Dataset, L: int, k: int, big_m: float | None = None) -> MipModel:
    _check_params(dataset, L, k)
    n, p = dataset.n_points, dataset.n_features
    fd = _feature_distances(dataset)
    dx = dataset.solution_distance
    M = compute_big_m(dataset) if big_m is None else float(big_m)
    pairs = _pairs(n)
    model = MipModel("optimistic_feature_selection")
    model.metadata.update(formulation="optimistic", N=n, p=p, k=k, L=L, big_m=repr(M))
    for f in range(p):
        model.add_var(f"b_{f}", BINARY)
    for i, j in pairs:
        model.add_var(f"y_{i}_{j}", BINARY)
    for i, j in pairs:
        model.add_var(f"d_{i}_{j}")
    for i in range(n):
        model.add_var(f"eps_{i}")
    model.set_objective((f"y_{i}_{j}", dx[i, j]) for i, j in pairs)
    for i in range(n):
        model.add_constraint(f"k_neighbors_{i}", [(f"y_{i}_{j}", 1.0) for j in range(n) if j != i], GE, k)
    _add_cardinality(model, p, L)
    for i, j in pairs:
        model.add_constraint(
            f"instance_diff_{i}_{j}",
            [(f"d_{i}_{j}", 1.0)] + [(f"b_{f}", -fd[f, i, j]) for f in range(p)],
            EQ, 0,
        )
    for i, j in pairs:
        model.add_constraint(f"neighboring1_{i}_{j}",
                             [(f"d_{i}_{j}", 1.0), (f"eps_{i}", -1.0), (f"y_{i}_{j}", M)], LE, M)
    for i, j in pairs:
        model.add_constraint(f"neighboring2_{i}_{j}",
                             [(f"eps_{i}", 1.0), (f"d_{i}_{j}", -1.0), (f"y_{i}_{j}", -M)], LE, 0)
    return model


def build_pessimistic_mip(dataset: Dataset, L: int, k: int, alpha_bounds="auto",
                          eval_k: str = "equality", tie_tolerance: float = 1e-9) -> MipModel:
    """Dualised worst-case model with envelope-linearised ``b * alpha`` and ``b * beta`` products.

    ``alpha_bounds`` is an explicit length-N array or a method name accepted
    by :func:`resolve_alpha_bounds`.
    """
    _check_params(dataset, L, k)
    if eval_k not in ("equality", "inequality"):
        raise ValueError("eval_k must be 'equality' or 'inequality'")
    n, p = dataset.n_points, dataset.n_features
    fd = _feature_distances(dataset)
    dx = dataset.solution_distance
    U, method = resolve_alpha_bounds(dataset, L, k, alpha_bounds, tie_tolerance)
    if U.shape != (n,) or np.any(U < 0):
        raise ValueError("alpha bounds must be a nonnegative length-N vector")
    pairs = _pairs(n)
    gamma_lo = -math.inf if eval_k == "equality" else 0.0

    model = MipModel("pessimistic_feature_selection")
    model.metadata.update(formulation="pessimistic", N=n, p=p, k=k, L=L,
                          eval_k=eval_k, alpha_bounds=method)
    for f in range(p):
        model.add_var(f"b_{f}", BINARY)
    for i in range(n):
        model.add_var(f"alpha_{i}", upper=U[i])
    for i in range(n):
        model.add_var(f"gamma_{i}", lower=gamma_lo)
    for i, j in pairs:
        model.add_var(f"beta_{i}_{j}", upper=U[i])
    for i, j in pairs:
        model.add_var(f"delta_{i}_{j}")
    for f in range(p):
        for i in range(n):
            model.add_var(f"w_{f}_{i}", upper=U[i])
    for f in range(p):
        for i, j in pairs:
            model.add_var(f"z_{f}_{i}_{j}", upper=U[i])

    obj = []
    for i, j in pairs:
        obj.extend((f"z_{f}_{i}_{j}", fd[f, i, j]) for f in range(p))
    obj.extend((f"gamma_{i}", float(k)) for i in range(n))
    obj.extend((f"delta_{i}_{j}", 1.0) for i, j in pairs)
    model.set_objective(obj)

    _add_cardinality(model, p, L)
    for i, j in pairs:
        terms = [(f"w_{f}_{i}", fd[f, i, j]) for f in range(p)]
        terms += [(f"gamma_{i}", 1.0), (f"delta_{i}_{j}", 1.0)]
        model.add_constraint(f"b_cons_{i}_{j}", terms, GE, dx[i, j])
    for i in range(n):
        terms = [(f"beta_{i}_{j}", 1.0) for j in range(n) if j != i] + [(f"alpha_{i}", -float(k))]
        model.add_constraint(f"alpha_bound_{i}", terms, GE, 0)
    for i, j in pairs:
        model.add_constraint(f"beta_bound_{i}_{j}", [(f"alpha_{i}", 1.0), (f"beta_{i}_{j}", -1.0)], GE, 0)

    def envelope(aux: str, var: str, f: int, u: float):
        model.add_constraint(f"{aux}_ub_b", [(aux, 1.0), (f"b_{f}", -u)], LE, 0)
        model.add_constraint(f"{aux}_ub_v", [(aux, 1.0), (var, -1.0)], LE, 0)
        model.add_constraint(f"{aux}_lb", [(aux, 1.0), (var, -1.0), (f"b_{f}", -u)], GE, -u)

    for f in range(p):
        for i in range(n):
            envelope(f"w_{f}_{i}", f"alpha_{i}", f, U[i])
    for f in range(p):
        for i, j in pairs:
            envelope(f"z_{f}_{i}_{j}", f"beta_{i}_{j}", f, U[i])
    return model


def optimistic_assignment(dataset: Dataset, selection, k: int, tie_tolerance: float = 1e-9) -> dict:
    """Feasible point of the optimistic model realising the optimistic value of ``selection``."""
    from ..core import OPTIMISTIC

    cfg = EvalConfig(k, OPTIMISTIC, tie_tolerance)
    res = evaluate_selection(dataset, selection, cfg)
    sel = {dataset.feature_index(f) for f in selection}
    dist = instance_distance_matrix(dataset, selection)
    n = dataset.n_points
    x = {f"b_{f}": float(f in sel) for f in range(dataset.n_features)}
    for i in range(n):
        chosen = set(res.neighbors[i])
        x[f"eps_{i}"] = max(float(dist[i, j]) for j in chosen)
        for j in range(n):
            if j != i:
                x[f"y_{i}_{j}"] = float(j in chosen)
                x[f"d_{i}_{j}"] = float(dist[i, j])
    return x


def pessimistic_certificate(dataset: Dataset, selection, k: int, alpha=None, tie_tolerance: float = 1e-9) -> dict:
    """Closed-form continuous optimum of the pessimistic model for fixed ``b``.

    Uses ``alpha_i`` = the selection's threshold (or the supplied vector),
    ``beta_i_j = alpha_i`` on the pessimistic neighbours, ``gamma_i`` = the
    smallest reduced score ``dX - alpha d`` among them and
    ``delta_i_j = max(0, dX - alpha d - gamma)``.  Its objective equals the
    pessimistic value; together with the primal neighbour indicator this
    certifies optimality by weak duality.
    """
    cfg = EvalConfig(k, PESSIMISTIC, tie_tolerance)
    res = evaluate_selection(dataset, selection, cfg)
    if alpha is None:
        alpha = pessimistic_alpha_thresholds(dataset, selection, k, tie_tolerance)
    sel = {dataset.feature_index(f) for f in selection}
    dist = instance_distance_matrix(dataset, selection)
    dx = dataset.solution_distance
    n, p = dataset.n_points, dataset.n_features
    x = {f"b_{f}": float(f in sel) for f in range(p)}
    for i in range(n):
        a = float(alpha[i])
        chosen = set(res.neighbors[i])
        reduced = {j: dx[i, j] - a * dist[i, j] for j in range(n) if j != i}
        g = min(reduced[j] for j in chosen)
        x[f"alpha_{i}"] = a
        x[f"gamma_{i}"] = g
        for f in range(p):
            x[f"w_{f}_{i}"] = a if f in sel else 0.0
        for j in range(n):
            if j == i:
                continue
            beta = a if j in chosen else 0.0
            x[f"beta_{i}_{j}"] = beta
            x[f"delta_{i}_{j}"] = max(0.0, reduced[j] - g)
            for f in range(p):
                x[f"z_{f}_{i}_{j}"] = beta if f in sel else 0.0
    return x


def selection_from_solution(values: dict, n_features: int) -> tuple:
    """Selected feature indices from solver values of ``b_f``."""
    return tuple(f for f in range(n_features) if values.get(f"b_{f}", 0.0) > 0.5)


@dataclass(frozen=True)
class CrosscheckReport:
    selection: tuple
    mip_objective_claimed: float
    core_objective: float
    match: bool
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "selection": list(self.selection),
            "mip_objective_claimed": self.mip_objective_claimed,
            "core_objective": self.core_objective,
            "match": self.match,
            "tolerance": self.tolerance,
        }


def crosscheck_solution(dataset: Dataset, selection, claimed: float, eval_config: EvalConfig,
                        rel_tol: float = 1e-6) -> CrosscheckReport:
    """Compare a solver's claimed objective with the evaluator's value for the same selection."""
    core = evaluate_selection(dataset, selection, eval_config).objective
    match = abs(core - claimed) <= rel_tol * max(1.0, abs(core))
    sel = tuple(sorted(dataset.feature_index(f) for f in selection))
    return CrosscheckReport(sel, float(claimed), core, bool(match), rel_tol)
