"""Search routines over feature selections.

* :func:`exact_enumeration` - brute force over every selection of size 1..L.
* :func:`k_opt_search` - multi-start swap local search with sampled
  neighbourhoods, first-improvement acceptance and an early cut-off after a
  fixed number of improving moves.
* :func:`random_selection_baseline` - statistics of uniformly random size-L
  selections.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, EvalConfig, evaluate_objective

DEFAULT_ENUMERATION_BUDGET = 10**6


@dataclass(frozen=True)
class KOptConfig:
    """Parameters of :func:`k_opt_search`.

    ``improving_moves_cutoff=None`` disables the early cut-off, so each pass
    scans its whole sampled move pool.
    """

    L: int
    swap_size: int = 1
    max_sampled_moves: int = 1000
    improving_moves_cutoff: int | None = 10
    start_candidates: int = 10
    restarts: int = 5
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        counters = [self.L, self.swap_size, self.max_sampled_moves, self.start_candidates,
                    self.restarts, self.workers]
        if self.improving_moves_cutoff is not None:
            counters.append(self.improving_moves_cutoff)
        if any(c < 1 for c in counters):
            raise ValueError("all KOptConfig counters must be >= 1")
        if self.swap_size > self.L:
            raise ValueError("swap_size must not exceed L")


@dataclass
class SearchResult:
    best_selection: tuple
    best_objective: float
    trace: list = field(default_factory=list)
    evaluations: int = 0


def _unrank_combination(rank: int, n: int, r: int) -> tuple:
    """The ``rank``-th r-subset of range(n) in lexicographic order."""
    out = []
    x = 0
    for slot in range(r, 0, -1):
        while True:
            count = math.comb(n - x - 1, slot - 1)
            if rank < count:
                out.append(x)
                x += 1
                break
            rank -= count
            x += 1
    return tuple(out)


class _Evaluator:
    def __init__(self, dataset: Dataset, eval_config: EvalConfig, workers: int):
        self.dataset = dataset
        self.eval_config = eval_config
        self.workers = workers
        self.count = 0

    def __call__(self, selection) -> float:
        self.count += 1
        return evaluate_objective(self.dataset, selection, self.eval_config)

    def many(self, selections) -> list[float]:
        """Evaluate a batch; results are returned in input order."""
        self.count += len(selections)
        fn = lambda s: evaluate_objective(self.dataset, s, self.eval_config)  # noqa: E731
        if self.workers > 1 and len(selections) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                return list(pool.map(fn, selections))
        return [fn(s) for s in selections]


def _sample_moves(current: tuple, p: int, K: int, budget: int, rng: np.random.Generator) -> list[tuple]:
    """Distinct K-swap neighbours of ``current`` in a seeded random order."""
    selected = list(current)
    unselected = [f for f in range(p) if f not in set(current)]
    n_out = math.comb(len(selected), K)
    n_in = math.comb(len(unselected), K)
    total = n_out * n_in
    if total == 0:
        return []
    m = min(budget, total)
    ranks = rng.permutation(total)[:m] if total <= 10 * budget else rng.choice(total, m, replace=False)
    moves = []
    for rank in ranks:
        r_out, r_in = divmod(int(rank), n_in)
        drop = {selected[a] for a in _unrank_combination(r_out, len(selected), K)}
        add = [unselected[a] for a in _unrank_combination(r_in, len(unselected), K)]
        moves.append(tuple(sorted([f for f in selected if f not in drop] + add)))
    return moves


def restart_seeds(seed: int, restarts: int) -> list[np.random.SeedSequence]:
    """Independent per-restart seed sequences spawned from ``seed``."""
    return np.random.SeedSequence(seed).spawn(restarts)


def k_opt_search(dataset: Dataset, config: KOptConfig, eval_config: EvalConfig) -> SearchResult:
    """Multi-start K-swap local search.

    Each restart draws ``start_candidates`` random selections of size exactly
    ``L`` and starts from the best.  An outer iteration samples up to
    ``max_sampled_moves`` distinct swaps of ``swap_size`` selected features
    against as many unselected ones, all relative to the selection held at the
    start of the iteration.  Candidates are scanned in sampled order and any
    candidate better than the incumbent replaces it at once; after
    ``improving_moves_cutoff`` replacements a fresh pool is drawn around the
    new incumbent.  A pass without improvement ends the restart.

    Restart ``r`` uses the r-th child of ``SeedSequence(seed)``, so the
    result does not depend on ``workers``.
    """
    p, L, K = dataset.n_features, config.L, config.swap_size
    if L > p:
        raise ValueError(f"L={L} exceeds the number of features p={p}")
    if K > min(L, p - L):
        raise ValueError(f"swap size K={K} infeasible for L={L}, p={p}")
    eval_config.check(dataset)
    evaluate = _Evaluator(dataset, eval_config, config.workers)
    chunk = max(1, 4 * config.workers)
    trace = []
    best_sel, best_obj = None, math.inf

    for r, seq in enumerate(restart_seeds(config.seed, config.restarts)):
        rng = np.random.default_rng(seq)
        starts = [tuple(sorted(rng.choice(p, L, replace=False).tolist())) for _ in range(config.start_candidates)]
        start_objs = evaluate.many(starts)
        a = int(np.argmin(start_objs))
        current, current_obj = starts[a], start_objs[a]
        iteration = 0
        trace.append((r, iteration, current_obj))
        while True:
            iteration += 1
            pool = _sample_moves(current, p, K, config.max_sampled_moves, rng)
            improvements = 0
            done = False
            for lo in range(0, len(pool), chunk):
                batch = pool[lo:lo + chunk]
                objs = evaluate.many(batch)
                for pos, (cand, obj) in enumerate(zip(batch, objs)):
                    if obj < current_obj:
                        current, current_obj = cand, obj
                        improvements += 1
                        if config.improving_moves_cutoff is not None and improvements >= config.improving_moves_cutoff:
                            # candidates evaluated past the cut-off are not counted
                            evaluate.count -= len(batch) - pos - 1
                            done = True
                            break
                if done:
                    break
            trace.append((r, iteration, current_obj))
            if improvements == 0:
                break
        if current_obj < best_obj:
            best_sel, best_obj = current, current_obj

    return SearchResult(best_sel, best_obj, trace, evaluate.count)


def enumeration_size(p: int, L: int, min_size: int = 1) -> int:
    return sum(math.comb(p, l) for l in range(min_size, min(L, p) + 1))


def exact_enumeration(
    dataset: Dataset,
    L: int,
    eval_config: EvalConfig,
    *,
    min_size: int = 1,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
    rel_tol: float = 1e-12,
) -> SearchResult:
    """Minimum over all selections with ``min_size <= |s| <= L``.

    Objectives within ``rel_tol`` of each other count as equal and the
    lexicographically smallest selection tuple wins.
    """
    p = dataset.n_features
    if L < 1 or min_size < 1 or min_size > L:
        raise ValueError("need 1 <= min_size <= L")
    total = enumeration_size(p, L, min_size)
    if total > budget:
        raise ValueError(f"{total} selections exceed the enumeration budget {budget}")
    eval_config.check(dataset)
    best_sel, best_obj = None, math.inf
    count = 0
    for size in range(min_size, min(L, p) + 1):
        for sel in itertools.combinations(range(p), size):
            obj = evaluate_objective(dataset, sel, eval_config)
            count += 1
            tol = rel_tol * max(1.0, abs(best_obj)) if best_obj < math.inf else 0.0
            if obj < best_obj - tol or (abs(obj - best_obj) <= tol and sel < best_sel):
                best_sel, best_obj = sel, obj
    return SearchResult(best_sel, best_obj, [], count)


@dataclass(frozen=True)
class BaselineStats:
    mean: float
    std: float
    min: float
    max: float
    objectives: tuple
    selections: tuple


def random_selection_baseline(
    dataset: Dataset, L: int, repeats: int, eval_config: EvalConfig, seed: int
) -> BaselineStats:
    """Evaluate ``repeats`` independent uniform size-L selections."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    p = dataset.n_features
    if L > p or L < 1:
        raise ValueError(f"need 1 <= L <= p={p}")
    rng = np.random.default_rng(seed)
    sels = [tuple(sorted(rng.choice(p, L, replace=False).tolist())) for _ in range(repeats)]
    objs = np.array([evaluate_objective(dataset, s, eval_config) for s in sels])
    return BaselineStats(
        float(objs.mean()), float(objs.std()), float(objs.min()), float(objs.max()),
        tuple(objs.tolist()), tuple(sels),
    )
