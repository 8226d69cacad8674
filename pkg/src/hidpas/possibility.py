"""Probability-to-possibility transformation, necessity, hybrid propagation.

The transformation sorts the distribution, assigns each state the sum of all
probabilities not larger than its own (grouped so ties share one value), and
maps the results back to the original positions. On strictly decreasing
distributions this equals the closed-form power transform; the tail-sum form
extends it continuously to ties and zeros.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .core import BayesNet, Evidence
from .jtree import (
    MAX_MIN,
    SUM_PRODUCT,
    JunctionTree,
    Potential,
    build_tree_for_net,
    initialize_potentials,
    net_factors,
    propagate,
    query_marginal,
)

log = logging.getLogger(__name__)

ZERO_GUARD = 1e-12  # probabilities below this are treated as exact zeros
NORM_TOL = 1e-9


def prob_to_poss(p: Sequence[float]) -> np.ndarray:
    """Transform a probability distribution into a possibility distribution.

    The top-ranked state gets exactly 1; every other state gets the sum of
    all probabilities at or below its own (equal probabilities share equal
    possibility); exact zeros stay zero. Output is order-preserving and
    satisfies necessity(pi) <= p <= pi statewise.
    """
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a nonempty probability vector")
    if np.any(arr < 0):
        raise ValueError("probabilities must be >= 0")
    total = math.fsum(arr.tolist())
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, not 1")

    values = np.where(arr < ZERO_GUARD, 0.0, arr)
    out = np.zeros_like(values)
    top = values.max()
    if top == 0.0:
        raise ValueError("distribution has no mass above the zero guard")

    levels = sorted(set(values.tolist()), reverse=True)  # distinct, descending
    level_poss: dict[float, float] = {}
    for lev in levels:
        if lev == 0.0:
            level_poss[lev] = 0.0
        elif lev == top:
            level_poss[lev] = 1.0
        else:
            tail = math.fsum(v for v in values.tolist() if v <= lev)
            level_poss[lev] = min(1.0, tail)

    # A unique top state carries the only positive necessity, which is
    # 1 - (second possibility). That value must not exceed the top state's
    # probability, so the second level is floored at the smallest float
    # >= 1 - top; inputs summing slightly under 1 would otherwise breach
    # the necessity <= probability bound.
    if len(levels) > 1 and np.count_nonzero(values == top) == 1:
        second = levels[1]
        floor = 1.0 - top
        if Fraction(floor) < 1 - Fraction(top):
            floor = math.nextafter(floor, math.inf)
        level_poss[second] = min(1.0, max(level_poss[second], floor))

    for i, v in enumerate(values.tolist()):
        out[i] = level_poss[v]
    return out


def necessity(pi: Sequence[float]) -> np.ndarray:
    """Necessity of each singleton state: 1 - max possibility of the others."""
    arr = np.asarray(pi, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a nonempty possibility vector")
    if arr.size == 1:
        return np.ones(1)
    order = np.argsort(arr, kind="stable")
    top, second = arr[order[-1]], arr[order[-2]]
    out = np.empty_like(arr)
    for i, v in enumerate(arr):
        others_max = second if i == order[-1] else top
        out[i] = 1.0 - others_max
    return np.maximum(out, 0.0)


def is_informative(triple: Sequence[float], tau: float) -> bool:
    """True when the possibility-necessity gap is within the threshold."""
    n, _, pi = triple
    return pi - n <= tau


@dataclass(frozen=True)
class HybridMarginal:
    """Per-state (necessity, probability, possibility) for one query variable."""

    variable: int
    necessity: tuple[float, ...]
    probability: tuple[float, ...]
    possibility: tuple[float, ...]

    def __post_init__(self):
        for name in ("necessity", "probability", "possibility"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        n = len(self.probability)
        if len(self.necessity) != n or len(self.possibility) != n:
            raise ValueError("component lengths differ")
        for nec, pos in zip(self.necessity, self.possibility):
            if not 0.0 <= nec <= pos <= 1.0:
                raise ValueError(f"necessity {nec} / possibility {pos} out of order")
        if abs(math.fsum(self.probability) - 1.0) > NORM_TOL:
            raise ValueError("probabilities do not sum to 1")
        if abs(max(self.possibility) - 1.0) > NORM_TOL:
            raise ValueError("possibilities are not normalized to max 1")

    @property
    def arity(self) -> int:
        return len(self.probability)

    def triple(self, state: int) -> tuple[float, float, float]:
        return (self.necessity[state], self.probability[state], self.possibility[state])

    def gap(self, state: int) -> float:
        return self.possibility[state] - self.necessity[state]

    def informative(self, state: int, tau: float) -> bool:
        return self.gap(state) <= tau

    def sandwich_violation(self) -> float:
        """Largest statewise breach of necessity <= probability <= possibility."""
        worst = 0.0
        for n, p, pi in zip(self.necessity, self.probability, self.possibility):
            worst = max(worst, n - p, p - pi)
        return max(worst, 0.0)


def transformed_factors(net: BayesNet) -> list[Potential]:
    """Possibilistic twin of a net: every CPT row transformed independently."""
    out = []
    for var in net.dag.variables:
        cpt = net.cpts[var.id]
        rows = np.vstack([prob_to_poss(row) for row in cpt.table])
        shape = tuple(net.dag.arity(p) for p in cpt.parents) + (var.arity,)
        out.append(Potential(cpt.parents + (var.id,), rows.reshape(shape)))
    return out


class HybridPropagator:
    """Caches the shared tree structure and both factor sets for one net.

    Step 1 transforms every CPT row, step 2 builds a single junction tree,
    step 3 runs sum-product and max-min calibration under the same evidence.
    """

    def __init__(self, net: BayesNet, strategy: str = "min-fill",
                 order: Sequence[int] | None = None):
        self.net = net
        self.structure: JunctionTree = build_tree_for_net(net, strategy, order)
        self._prob = initialize_potentials(self.structure, net_factors(net), SUM_PRODUCT)
        self._poss = initialize_potentials(self.structure, transformed_factors(net), MAX_MIN)

    def query(self, evidence: Evidence | Mapping[int, int] | None,
              targets: Sequence[int]) -> dict[int, HybridMarginal]:
        ev = evidence if isinstance(evidence, Evidence) else Evidence(dict(evidence or {}))
        ev.check(self.net)
        prob_cal = propagate(self._prob, ev)
        poss_cal = propagate(self._poss, ev)
        out: dict[int, HybridMarginal] = {}
        for var in targets:
            p = query_marginal(prob_cal, var)
            pi = query_marginal(poss_cal, var)
            n = necessity(pi)
            hm = HybridMarginal(var, tuple(n), tuple(p), tuple(pi))
            violation = hm.sandwich_violation()
            if violation > 0:
                log.debug(
                    "post-propagation interval breach %.3g on variable %d", violation, var
                )
            out[var] = hm
        return out


def hybrid_propagate(
    net: BayesNet,
    evidence: Evidence | Mapping[int, int] | None,
    targets: Sequence[int],
    strategy: str = "min-fill",
) -> dict[int, HybridMarginal]:
    """Interval-valued marginals for the targets under shared hard evidence."""
    return HybridPropagator(net, strategy).query(evidence, targets)
