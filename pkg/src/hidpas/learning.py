"""Structure learning (K2 greedy search) and CPT parameter fitting.

Scores are computed in log space with log-gamma sums; the raw factorial
form overflows long before realistic dataset sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BayesNet, Cpt, Dag, Variable

SCORE_EPS = 1e-12  # a candidate parent must beat the current score by this


@dataclass(frozen=True)
class DiscreteDataset:
    """Fully observed discrete data: one Variable per column, int state rows."""

    variables: tuple[Variable, ...]
    rows: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != len(self.variables):
            if rows.size == 0:
                rows = rows.reshape(0, len(self.variables))
            else:
                raise ValueError(
                    f"rows shape {rows.shape} does not match {len(self.variables)} columns"
                )
        for i, var in enumerate(self.variables):
            if rows.shape[0] and int(rows[:, i].max(initial=0)) >= var.arity:
                raise ValueError(f"column {var.name} holds a state index >= arity {var.arity}")
            if rows.shape[0] and int(rows[:, i].min(initial=0)) < 0:
                raise ValueError(f"column {var.name} holds a negative state index")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def row_count(self) -> int:
        return int(self.rows.shape[0])

    def column_index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise ValueError(f"no column named {name!r}")


@dataclass(frozen=True)
class CountStatistics:
    """Frequency counts for one variable under a parent set.

    counts has shape (q, r): parent configurations (row-major, last parent
    fastest) by child states. marginals are the per-configuration totals.
    """

    variable: int
    parents: tuple[int, ...]
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def arity(self) -> int:
        return int(self.counts.shape[1])


@dataclass(frozen=True)
class LearnConfig:
    order: tuple[int, ...]
    max_parents: int = 2
    smoothing: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        if self.max_parents < 0:
            raise ValueError("max_parents must be >= 0")
        if self.smoothing < 0:
            raise ValueError("smoothing must be >= 0")


def count_statistics(
    data: DiscreteDataset, var: int, parents: Sequence[int]
) -> CountStatistics:
    """Exact N_ijk counts; configurations never seen in the data count 0."""
    n_cols = len(data.variables)
    parents = tuple(parents)
    if not 0 <= var < n_cols:
        raise ValueError(f"unknown column id {var}")
    for p in parents:
        if not 0 <= p < n_cols:
            raise ValueError(f"unknown column id {p}")
    if var in parents:
        raise ValueError("variable cannot be its own parent")

    r = data.variables[var].arity
    q = 1
    for p in parents:
        q *= data.variables[p].arity

    if data.row_count == 0:
        return CountStatistics(var, parents, np.zeros((q, r), dtype=np.int64))

    cfg = np.zeros(data.row_count, dtype=np.int64)
    for p in parents:
        cfg = cfg * data.variables[p].arity + data.rows[:, p]
    flat = np.bincount(cfg * r + data.rows[:, var], minlength=q * r)
    return CountStatistics(var, parents, flat.reshape(q, r))


def k2_local_log_score(stats: CountStatistics) -> float:
    """Natural log of the local marginal-likelihood score.

    Per configuration j: lgamma(r) - lgamma(N_j + r) + sum_k lgamma(N_jk + 1).
    Zero-count configurations contribute exactly 0.
    """
    r = stats.arity
    score = 0.0
    lg_r = math.lgamma(r)
    for j in range(stats.counts.shape[0]):
        n_j = int(stats.marginals[j])
        if n_j == 0:
            continue
        score += lg_r - math.lgamma(n_j + r)
        for n_jk in stats.counts[j]:
            if n_jk > 1:
                score += math.lgamma(int(n_jk) + 1)
    return score


def k2_search(data: DiscreteDataset, config: LearnConfig) -> Dag:
    """Greedy parent selection along a fixed variable ordering.

    For each variable, repeatedly add the single earlier-order candidate that
    most increases the local log score; stop when no candidate strictly
    increases it or the parent budget is exhausted. Ties between equally
    scoring candidates go to the lowest variable id.
    """
    n = len(data.variables)
    if sorted(config.order) != list(range(n)):
        raise ValueError("order must be a permutation of the dataset column ids")
    if config.max_parents >= n > 0:
        raise ValueError("max_parents must be < variable count")

    parent_sets: list[tuple[int, ...]] = [()] * n
    for pos, var in enumerate(config.order):
        candidates = set(config.order[:pos])
        parents: list[int] = []
        current = k2_local_log_score(count_statistics(data, var, parents))
        while len(parents) < config.max_parents and candidates:
            scored = [
                (k2_local_log_score(count_statistics(data, var, parents + [c])), c)
                for c in sorted(candidates)
            ]
            best_score = max(s for s, _ in scored)
            best = min(c for s, c in scored if s == best_score)
            if best_score > current + SCORE_EPS:
                parents.append(best)
                candidates.discard(best)
                current = best_score
            else:
                break
        parent_sets[var] = tuple(parents)
    return Dag(variables=data.variables, parents=tuple(parent_sets))


def fit_cpts(data: DiscreteDataset, dag: Dag, smoothing: float = 1.0) -> BayesNet:
    """Smoothed frequency CPTs: (N_jk + s) / (N_j + r*s), uniform when both 0."""
    if tuple(v.name for v in dag.variables) != tuple(v.name for v in data.variables):
        raise ValueError("dag variables do not match dataset columns")
    cpts = []
    for var in dag.variables:
        stats = count_statistics(data, var.id, dag.parents[var.id])
        counts = stats.counts.astype(float)
        r = var.arity
        denom = stats.marginals.astype(float) + r * smoothing
        table = np.empty_like(counts)
        empty = denom == 0  # only possible with smoothing 0
        if np.any(~empty):
            table[~empty] = (counts[~empty] + smoothing) / denom[~empty, None]
        table[empty] = 1.0 / r
        cpts.append(Cpt(var.id, dag.parents[var.id], table))
    return BayesNet(dag=dag, cpts=tuple(cpts))
