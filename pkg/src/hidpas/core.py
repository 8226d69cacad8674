"""Discrete Bayesian network data model: variables, DAG, CPTs, evidence.

All state indices are 0-based internally; state labels are kept for I/O.
Parent configurations are enumerated row-major with the last parent varying
fastest, and that ordering is part of the CPT file contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Mapping, Sequence

import numpy as np

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Variable:
    """A discrete random variable with a finite, ordered set of states."""

    id: int
    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def arity(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class Dag:
    """Directed graph over variables, one ordered parent tuple per variable.

    Construction is permissive: cycles and bad references are reported by
    validate_network rather than raised here, so that broken inputs can be
    inspected.
    """

    variables: tuple[Variable, ...]
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "parents", tuple(tuple(p) for p in self.parents))
        if len(self.variables) != len(self.parents):
            raise ValueError("one parent tuple required per variable")

    def variable(self, vid: int) -> Variable:
        if not 0 <= vid < len(self.variables):
            raise ValueError(f"unknown variable id {vid}")
        return self.variables[vid]

    def arity(self, vid: int) -> int:
        return self.variable(vid).arity

    @property
    def var_count(self) -> int:
        return len(self.variables)

    def edges(self) -> Iterator[tuple[int, int]]:
        for child, ps in enumerate(self.parents):
            for p in ps:
                yield p, child

    def topological_order(self) -> list[int] | None:
        """Kahn's algorithm; None if the graph has a directed cycle."""
        n = len(self.variables)
        indeg = [0] * n
        children: list[list[int]] = [[] for _ in range(n)]
        for child, ps in enumerate(self.parents):
            for p in ps:
                if 0 <= p < n:
                    indeg[child] += 1
                    children[p].append(child)
        ready = sorted(i for i in range(n) if indeg[i] == 0)
        out: list[int] = []
        while ready:
            v = ready.pop(0)
            out.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        return out if len(out) == n else None


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table for one variable.

    table has shape (q, r): one row per parent configuration in
    parent_configurations order, one column per child state.
    """

    variable: int
    parents: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        tbl = np.asarray(self.table, dtype=float)
        tbl.setflags(write=False)
        object.__setattr__(self, "table", tbl)


@dataclass(frozen=True)
class BayesNet:
    """A DAG plus one CPT per variable (aligned by variable id)."""

    dag: Dag
    cpts: tuple[Cpt, ...]

    def __post_init__(self):
        object.__setattr__(self, "cpts", tuple(self.cpts))

    @property
    def variables(self) -> tuple[Variable, ...]:
        return self.dag.variables

    def variable(self, vid: int) -> Variable:
        return self.dag.variable(vid)

    def cpt(self, vid: int) -> Cpt:
        self.dag.variable(vid)
        return self.cpts[vid]

    def var_id(self, name: str) -> int:
        for v in self.dag.variables:
            if v.name == name:
                return v.id
        raise ValueError(f"no variable named {name!r}")


@dataclass(frozen=True)
class Evidence:
    """Hard evidence: observed state index per variable."""

    assignments: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments))

    def check(self, net: BayesNet) -> None:
        for vid, state in self.assignments.items():
            var = net.dag.variable(vid)
            if not 0 <= state < var.arity:
                raise ValueError(
                    f"evidence state {state} out of range for {var.name} "
                    f"(arity {var.arity})"
                )

    def __bool__(self) -> bool:
        return bool(self.assignments)


@dataclass(frozen=True)
class Violation:
    """One broken invariant found by validate_network."""

    variable: int | None
    kind: str
    message: str

    def __str__(self) -> str:
        where = f"var {self.variable}: " if self.variable is not None else ""
        return f"[{self.kind}] {where}{self.message}"


def parent_configurations(net: BayesNet, var: int) -> list[tuple[int, ...]]:
    """All parent-state configurations of var, last parent varying fastest.

    A variable with no parents yields the single empty configuration.
    """
    net.dag.variable(var)  # raises on unknown id
    parents = net.dag.parents[var]
    return list(product(*(range(net.dag.arity(p)) for p in parents)))


def config_index(parent_arities: Sequence[int], config: Sequence[int]) -> int:
    """Row index of a parent configuration under the row-major convention."""
    idx = 0
    for arity, state in zip(parent_arities, config):
        idx = idx * arity + state
    return idx


def joint_probability(net: BayesNet, assignment: Mapping[int, int]) -> float:
    """Product of the CPT entries selected by a full assignment."""
    missing = [v.id for v in net.dag.variables if v.id not in assignment]
    if missing:
        raise ValueError(f"assignment misses variables {missing}")
    prob = 1.0
    for var in net.dag.variables:
        cpt = net.cpts[var.id]
        arities = [net.dag.arity(p) for p in cpt.parents]
        row = config_index(arities, [assignment[p] for p in cpt.parents])
        prob *= float(cpt.table[row, assignment[var.id]])
    return prob


def validate_network(net: BayesNet) -> list[Violation]:
    """Report every broken invariant; an empty list means the net is valid."""
    out: list[Violation] = []
    n = len(net.dag.variables)

    for i, var in enumerate(net.dag.variables):
        if var.id != i:
            out.append(Violation(i, "id", f"variable at position {i} has id {var.id}"))
        if var.arity < 2:
            out.append(Violation(i, "arity", f"{var.name} has arity {var.arity} < 2"))
        if len(set(var.states)) != len(var.states):
            out.append(Violation(i, "duplicate-state", f"{var.name} repeats a state label"))

    refs_ok = True
    for child, parents in enumerate(net.dag.parents):
        for p in parents:
            if not 0 <= p < n:
                out.append(Violation(child, "unknown-parent", f"parent id {p} does not exist"))
                refs_ok = False
            elif p == child:
                out.append(Violation(child, "self-parent", "variable is its own parent"))
        if len(set(parents)) != len(parents):
            out.append(Violation(child, "duplicate-parent", "repeated parent id"))

    if refs_ok and net.dag.topological_order() is None:
        # name the vars left over after peeling all acyclic ones
        indeg = [0] * n
        for child, ps in enumerate(net.dag.parents):
            indeg[child] = len(ps)
        children = [[] for _ in range(n)]
        for child, ps in enumerate(net.dag.parents):
            for p in ps:
                children[p].append(child)
        ready = [i for i in range(n) if indeg[i] == 0]
        seen = 0
        while ready:
            v = ready.pop()
            seen += 1
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        stuck = sorted(i for i in range(n) if indeg[i] > 0)
        out.append(Violation(None, "cycle", f"directed cycle through variables {stuck}"))

    if len(net.cpts) != n:
        out.append(Violation(None, "missing-cpt", f"{len(net.cpts)} CPTs for {n} variables"))
        return out

    for var in net.dag.variables:
        cpt = net.cpts[var.id]
        if cpt.variable != var.id:
            out.append(Violation(var.id, "cpt-mismatch", f"CPT is for variable {cpt.variable}"))
            continue
        if tuple(cpt.parents) != tuple(net.dag.parents[var.id]):
            out.append(
                Violation(var.id, "cpt-mismatch",
                          f"CPT parents {cpt.parents} != dag parents {net.dag.parents[var.id]}")
            )
            continue
        if any(not 0 <= p < n for p in cpt.parents):
            continue  # already reported on the dag side
        q = 1
        for p in cpt.parents:
            q *= net.dag.arity(p)
        if cpt.table.shape != (q, var.arity):
            out.append(
                Violation(var.id, "cpt-shape",
                          f"table shape {cpt.table.shape} != ({q}, {var.arity})")
            )
            continue
        if np.any(cpt.table < 0) or np.any(cpt.table > 1):
            out.append(Violation(var.id, "range", "CPT entry outside [0, 1]"))
        sums = cpt.table.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
        configs = list(product(*(range(net.dag.arity(p)) for p in cpt.parents)))
        for j in bad:
            out.append(
                Violation(var.id, "row-sum",
                          f"row {configs[j]} sums to {sums[j]:.12g}, not 1")
            )
    return out
