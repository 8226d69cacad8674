"""Junction-tree construction and semiring-parameterized message passing.

Two calibration modes share one tree structure: sum-product for probability
marginals and max-min for possibility marginals. The max-min mode needs no
separator division because min is idempotent; distribute-phase messages
simply overwrite separators and are absorbed by min.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import BayesNet, Dag, Evidence

SUM_PRODUCT = "sum-product"
MAX_MIN = "max-min"


class ImpossibleEvidenceError(RuntimeError):
    """The asserted evidence has probability / possibility zero."""


@dataclass(frozen=True)
class UndirectedGraph:
    nodes: tuple[int, ...]
    adjacency: Mapping[int, frozenset[int]]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        adj = {n: frozenset(self.adjacency.get(n, ())) for n in self.nodes}
        for n, nbrs in adj.items():
            if n in nbrs:
                raise ValueError(f"self-loop on node {n}")
            for m in nbrs:
                if n not in adj.get(m, frozenset()):
                    raise ValueError(f"asymmetric edge {n}-{m}")
        object.__setattr__(self, "adjacency", adj)

    def neighbors(self, node: int) -> frozenset[int]:
        return self.adjacency[node]


@dataclass(frozen=True)
class Potential:
    """Nonnegative table over an ordered variable scope, one axis per variable."""

    scope: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        tbl = np.asarray(self.table, dtype=float)
        if tbl.ndim != len(self.scope):
            raise ValueError("table rank does not match scope size")
        if np.any(tbl < 0):
            raise ValueError("potential entries must be >= 0")
        tbl.setflags(write=False)
        object.__setattr__(self, "table", tbl)


@dataclass(frozen=True)
class JunctionTree:
    """Clusters plus maximum-weight spanning-tree edges with separators.

    cluster scopes and separators are sorted variable-id tuples; tables (when
    present) have one axis per scope variable in that order.
    """

    clusters: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int, tuple[int, ...]], ...]
    semiring: str | None = None
    arities: Mapping[int, int] | None = None
    cluster_tables: tuple[np.ndarray, ...] | None = None
    separator_tables: tuple[np.ndarray, ...] | None = None

    def containing_clusters(self, var: int) -> list[int]:
        return [i for i, c in enumerate(self.clusters) if var in c]

    @property
    def variables(self) -> set[int]:
        out: set[int] = set()
        for c in self.clusters:
            out.update(c)
        return out


def moralize(dag: Dag) -> UndirectedGraph:
    """Drop edge directions and connect every pair of co-parents."""
    nodes = tuple(v.id for v in dag.variables)
    adj: dict[int, set[int]] = {n: set() for n in nodes}
    for child, parents in enumerate(dag.parents):
        for p in parents:
            adj[p].add(child)
            adj[child].add(p)
        for i, a in enumerate(parents):
            for b in parents[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
    return UndirectedGraph(nodes, {n: frozenset(s) for n, s in adj.items()})


def choose_order(
    graph: UndirectedGraph,
    strategy: str = "min-fill",
    order: Sequence[int] | None = None,
) -> list[int]:
    """Elimination ordering: the caller's own, or greedy min-fill.

    min-fill repeatedly eliminates the node whose removal adds the fewest
    fill edges, breaking ties by lowest node id.
    """
    if strategy == "given":
        if order is None:
            raise ValueError("strategy 'given' requires an order")
        return list(order)
    if strategy != "min-fill":
        raise ValueError(f"unknown ordering strategy {strategy!r}")

    adj = {n: set(graph.adjacency[n]) for n in graph.nodes}
    out: list[int] = []
    remaining = set(graph.nodes)
    while remaining:
        best_node, best_fill = -1, None
        for n in sorted(remaining):
            nbrs = [m for m in adj[n] if m in remaining]
            fill = sum(
                1
                for i, a in enumerate(nbrs)
                for b in nbrs[i + 1:]
                if b not in adj[a]
            )
            if best_fill is None or fill < best_fill:
                best_node, best_fill = n, fill
        nbrs = [m for m in adj[best_node] if m in remaining]
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
        remaining.discard(best_node)
        out.append(best_node)
    return out


def elimination_clusters(
    graph: UndirectedGraph, order: Sequence[int]
) -> list[frozenset[int]]:
    """Eliminate nodes in order, collecting {node} | neighbors clusters.

    Neighbors of the eliminated node are pairwise connected first (fill-in),
    so the produced clusters triangulate the graph. Clusters contained in an
    earlier cluster are dropped.
    """
    if sorted(order) != sorted(graph.nodes):
        raise ValueError("order must be a permutation of the graph nodes")
    adj = {n: set(graph.adjacency[n]) for n in graph.nodes}
    clusters: list[frozenset[int]] = []
    for x in order:
        nbrs = adj[x]
        cluster = frozenset(nbrs | {x})
        for i, a in enumerate(sorted(nbrs)):
            for b in sorted(nbrs)[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
        for m in nbrs:
            adj[m].discard(x)
        del adj[x]
        if not any(cluster <= earlier for earlier in clusters):
            clusters.append(cluster)
    return clusters


def build_tree(clusters: Sequence[frozenset[int]]) -> JunctionTree:
    """Maximum-weight spanning tree over the cluster graph.

    Edge weight is the separator size; zero-weight edges are excluded, so
    disconnected moral graphs yield a forest. Ties prefer the
    lexicographically smaller cluster index pair.
    """
    scopes = tuple(tuple(sorted(c)) for c in clusters)
    candidates = []
    for i in range(len(scopes)):
        for j in range(i + 1, len(scopes)):
            sep = tuple(sorted(set(scopes[i]) & set(scopes[j])))
            if sep:
                candidates.append((-len(sep), i, j, sep))
    candidates.sort()

    parent = list(range(len(scopes)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _, i, j, sep in candidates:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j, sep))
    return JunctionTree(clusters=scopes, edges=tuple(edges))


def has_running_intersection(jt: JunctionTree) -> bool:
    """For every variable, the clusters containing it form a connected subtree."""
    adj: dict[int, set[int]] = {i: set() for i in range(len(jt.clusters))}
    for i, j, _ in jt.edges:
        adj[i].add(j)
        adj[j].add(i)
    for var in jt.variables:
        holders = set(jt.containing_clusters(var))
        start = min(holders)
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v in holders and v not in seen:
                    seen.add(v)
                    stack.append(v)
        if seen != holders:
            return False
    return True


def format_tree(jt: JunctionTree, names: Mapping[int, str] | None = None) -> str:
    """Debug dump: one `cluster {..} -- sep {..} -- cluster {..}` line per edge."""

    def label(ids: Iterable[int]) -> str:
        items = [names[v] if names else str(v) for v in ids]
        return "{" + ",".join(items) + "}"

    if not jt.edges:
        return "\n".join(f"cluster {label(c)}" for c in jt.clusters)
    lines = [
        f"cluster {label(jt.clusters[i])} -- sep {label(sep)} -- cluster {label(jt.clusters[j])}"
        for i, j, sep in jt.edges
    ]
    return "\n".join(lines)


def _embed(table: np.ndarray, scope: Sequence[int], target: Sequence[int]) -> np.ndarray:
    """Table aligned to the axes of a superset scope (broadcastable view)."""
    positions = [scope.index(v) for v in target if v in scope]
    moved = np.transpose(table, positions)
    dims = iter(moved.shape)
    shape = [next(dims) if t in scope else 1 for t in target]
    return moved.reshape(shape)


def _marginalize(table: np.ndarray, scope: tuple[int, ...],
                 keep: tuple[int, ...], mode: str) -> np.ndarray:
    axes = tuple(i for i, v in enumerate(scope) if v not in keep)
    if not axes:
        return table
    if mode == SUM_PRODUCT:
        return table.sum(axis=axes)
    return table.max(axis=axes)


def _divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise quotient with the 0/0 := 0 convention."""
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den != 0)
    return out


def initialize_potentials(
    jt: JunctionTree,
    factors: Sequence[Potential],
    semiring: str = SUM_PRODUCT,
) -> JunctionTree:
    """Assign each factor to its lowest-index containing cluster.

    Cluster and separator tables start at the multiplicative identity (1 for
    both semirings); factors are multiplied in (sum-product) or min-combined
    (max-min).
    """
    if semiring not in (SUM_PRODUCT, MAX_MIN):
        raise ValueError(f"unknown semiring {semiring!r}")
    arities: dict[int, int] = {}
    for f in factors:
        for v, size in zip(f.scope, f.table.shape):
            if arities.setdefault(v, size) != size:
                raise ValueError(f"conflicting arity for variable {v}")
    for c in jt.clusters:
        for v in c:
            if v not in arities:
                raise ValueError(f"no factor mentions cluster variable {v}")

    tables = [np.ones(tuple(arities[v] for v in c)) for c in jt.clusters]
    for f in factors:
        scope = set(f.scope)
        home = next((i for i, c in enumerate(jt.clusters) if scope <= set(c)), None)
        if home is None:
            raise RuntimeError(f"factor over {f.scope} fits no cluster; tree is malformed")
        aligned = _embed(f.table, f.scope, jt.clusters[home])
        if semiring == SUM_PRODUCT:
            tables[home] = tables[home] * aligned
        else:
            tables[home] = np.minimum(tables[home], aligned)

    seps = [np.ones(tuple(arities[v] for v in sep)) for _, _, sep in jt.edges]
    for t in tables + seps:
        t.setflags(write=False)
    return replace(
        jt,
        semiring=semiring,
        arities=dict(arities),
        cluster_tables=tuple(tables),
        separator_tables=tuple(seps),
    )


def _components_and_schedule(jt: JunctionTree):
    """Per tree component: (root, collect order) with parent edge bookkeeping.

    collect order is a post-order list of (node, parent, edge index); the
    distribute phase replays it reversed.
    """
    adj: dict[int, list[tuple[int, int]]] = {i: [] for i in range(len(jt.clusters))}
    for e, (i, j, _) in enumerate(jt.edges):
        adj[i].append((j, e))
        adj[j].append((i, e))
    seen: set[int] = set()
    plans = []
    for root in range(len(jt.clusters)):
        if root in seen:
            continue
        seen.add(root)
        order: list[tuple[int, int, int]] = []
        stack: list[tuple[int, int, int]] = [(root, -1, -1)]
        visit: list[tuple[int, int, int]] = []
        while stack:
            node, par, edge = stack.pop()
            visit.append((node, par, edge))
            for nb, e in adj[node]:
                if nb != par:
                    seen.add(nb)
                    stack.append((nb, node, e))
        # children before parents
        order = [entry for entry in reversed(visit) if entry[1] != -1]
        plans.append((root, order))
    return plans


def propagate(jt: JunctionTree, evidence: Evidence | Mapping[int, int] | None = None) -> JunctionTree:
    """Two-phase collect/distribute calibration from the lowest cluster index.

    Evidence zeroes every table entry inconsistent with an observed state.
    Raises ImpossibleEvidenceError when calibration annihilates a component.
    """
    if jt.cluster_tables is None or jt.semiring is None:
        raise ValueError("potentials must be initialized before propagation")
    mode = jt.semiring
    tables = [t.copy() for t in jt.cluster_tables]
    seps = [s.copy() for s in jt.separator_tables]

    observed = evidence.assignments if isinstance(evidence, Evidence) else dict(evidence or {})
    for var, state in observed.items():
        holders = jt.containing_clusters(var)
        if not holders:
            raise ValueError(f"evidence variable {var} is absent from the tree")
        if not 0 <= state < jt.arities[var]:
            raise ValueError(f"evidence state {state} out of range for variable {var}")
        for i in holders:
            axis = jt.clusters[i].index(var)
            mask = np.zeros(jt.arities[var])
            mask[state] = 1.0
            shape = [1] * tables[i].ndim
            shape[axis] = jt.arities[var]
            tables[i] = tables[i] * mask.reshape(shape)

    def absorb(target: int, message: np.ndarray, edge: int, sep_scope: tuple[int, ...]):
        aligned_old = seps[edge]
        if mode == SUM_PRODUCT:
            ratio = _divide(message, aligned_old)
            tables[target] = tables[target] * _embed(ratio, sep_scope, jt.clusters[target])
        else:
            tables[target] = np.minimum(
                tables[target], _embed(message, sep_scope, jt.clusters[target])
            )
        seps[edge] = message

    plans = _components_and_schedule(jt)
    members: list[list[int]] = []
    for root, order in plans:
        for node, par, edge in order:  # collect: leaves toward root
            sep_scope = jt.edges[edge][2]
            message = _marginalize(tables[node], jt.clusters[node], sep_scope, mode)
            absorb(par, message, edge, sep_scope)
        for node, par, edge in reversed(order):  # distribute: root toward leaves
            sep_scope = jt.edges[edge][2]
            message = _marginalize(tables[par], jt.clusters[par], sep_scope, mode)
            absorb(node, message, edge, sep_scope)
        if not np.any(tables[root]):
            raise ImpossibleEvidenceError(
                "evidence has zero probability/possibility in this network"
            )
        members.append([root] + [node for node, _, _ in order])

    if mode == MAX_MIN and len(plans) > 1:
        # min does not cancel under normalization the way a product does:
        # evidence in one forest component caps every other component's
        # possibility at that component's best value.
        comp_of = {c: k for k, comp in enumerate(members) for c in comp}
        tops = [max(float(tables[c].max()) for c in comp) for comp in members]
        caps = [min(t for i, t in enumerate(tops) if i != k)
                for k in range(len(members))]
        for c, k in comp_of.items():
            if caps[k] < 1.0:
                tables[c] = np.minimum(tables[c], caps[k])
        for e, (i, _, _) in enumerate(jt.edges):
            if caps[comp_of[i]] < 1.0:
                seps[e] = np.minimum(seps[e], caps[comp_of[i]])

    for t in tables + seps:
        t.setflags(write=False)
    return replace(jt, cluster_tables=tuple(tables), separator_tables=tuple(seps))


def query_marginal(jt: JunctionTree, var: int, normalize: bool = True) -> np.ndarray:
    """Marginal of a calibrated tree over one variable.

    Sum-product marginals are renormalized to sum 1; max-min marginals are
    renormalized so their maximum is 1.
    """
    if jt.cluster_tables is None:
        raise ValueError("tree is not calibrated")
    holders = jt.containing_clusters(var)
    if not holders:
        raise ValueError(f"variable {var} is absent from the tree")
    return marginal_from_cluster(jt, holders[0], var, normalize)


def marginal_from_cluster(
    jt: JunctionTree, cluster: int, var: int, normalize: bool = True
) -> np.ndarray:
    """Marginal read off one specific containing cluster (for agreement checks)."""
    scope = jt.clusters[cluster]
    if var not in scope:
        raise ValueError(f"variable {var} not in cluster {cluster}")
    out = _marginalize(jt.cluster_tables[cluster], scope, (var,), jt.semiring)
    if not normalize:
        return out
    total = out.sum() if jt.semiring == SUM_PRODUCT else out.max()
    if total == 0:
        raise ImpossibleEvidenceError("marginal is identically zero")
    return out / total


def net_factors(net: BayesNet) -> list[Potential]:
    """One potential per CPT with scope (parents..., child)."""
    out = []
    for var in net.dag.variables:
        cpt = net.cpts[var.id]
        shape = tuple(net.dag.arity(p) for p in cpt.parents) + (var.arity,)
        out.append(Potential(cpt.parents + (var.id,), cpt.table.reshape(shape)))
    return out


def build_tree_for_net(net: BayesNet, strategy: str = "min-fill",
                       order: Sequence[int] | None = None) -> JunctionTree:
    """Moralize, order, eliminate, and build the spanning tree for a net."""
    graph = moralize(net.dag)
    elim = choose_order(graph, strategy, order)
    return build_tree(elimination_clusters(graph, elim))
