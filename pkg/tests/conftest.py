from __future__ import annotations

import os

import numpy as np
import pytest

from hidpas.core import BayesNet, Cpt, Dag, Variable

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
SCENARIO_DIR = os.path.join(DATA_DIR, "scenario")


@pytest.fixture
def two_node_net() -> BayesNet:
    """A -> B with P(A=1)=0.6, P(B=1|A=0)=0.2, P(B=1|A=1)=0.9."""
    a = Variable(0, "A", ("a0", "a1"))
    b = Variable(1, "B", ("b0", "b1"))
    dag = Dag((a, b), ((), (0,)))
    return BayesNet(dag, (
        Cpt(0, (), np.array([[0.4, 0.6]])),
        Cpt(1, (0,), np.array([[0.8, 0.2], [0.1, 0.9]])),
    ))


@pytest.fixture
def collider_net() -> BayesNet:
    """A -> C <- B: co-parents for moralization checks."""
    a = Variable(0, "A", ("0", "1"))
    b = Variable(1, "B", ("0", "1"))
    c = Variable(2, "C", ("0", "1"))
    dag = Dag((a, b, c), ((), (), (0, 1)))
    return BayesNet(dag, (
        Cpt(0, (), np.array([[0.3, 0.7]])),
        Cpt(1, (), np.array([[0.6, 0.4]])),
        Cpt(2, (0, 1), np.array([
            [0.9, 0.1], [0.5, 0.5], [0.4, 0.6], [0.2, 0.8],
        ])),
    ))


@pytest.fixture
def chain5_net() -> BayesNet:
    """Five-variable chain with mixed arities, enough for nontrivial trees."""
    variables = (
        Variable(0, "v0", ("s0", "s1")),
        Variable(1, "v1", ("s0", "s1", "s2")),
        Variable(2, "v2", ("s0", "s1")),
        Variable(3, "v3", ("s0", "s1", "s2")),
        Variable(4, "v4", ("s0", "s1")),
    )
    parents = ((), (0,), (1,), (2,), (3,))
    rng = np.random.default_rng(99)
    cpts = []
    for v in variables:
        q = 1 if not parents[v.id] else variables[parents[v.id][0]].arity
        rows = rng.random((q, v.arity)) + 0.1
        rows /= rows.sum(axis=1, keepdims=True)
        cpts.append(Cpt(v.id, parents[v.id], rows))
    return BayesNet(Dag(variables, parents), tuple(cpts))


def data_path(*parts: str) -> str:
    return os.path.join(DATA_DIR, *parts)
