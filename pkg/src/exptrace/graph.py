"""Conditional-dependence graphs read off a parameter matrix."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class Graph:
    """Undirected graph on vertices ``0..p-1`` with symmetric ordered edges."""

    p: int
    edges: frozenset

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at {i}")
            if (j, i) not in self.edges:
                raise ValueError(f"edge ({i}, {j}) lacks its reverse")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError(f"edge ({i}, {j}) out of range")

    @classmethod
    def from_pairs(cls, p: int, pairs) -> "Graph":
        edges = set()
        for i, j in pairs:
            edges |= {(int(i), int(j)), (int(j), int(i))}
        return cls(p, frozenset(edges))

    def undirected_edges(self) -> list:
        return sorted((i, j) for i, j in self.edges if i < j)

    def one_based(self) -> set:
        return {(i + 1, j + 1) for i, j in self.edges}

    def __le__(self, other: "Graph") -> bool:
        return self.edges <= other.edges


def edge_set(M, tol: float = DEFAULT_TOL) -> Graph:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if tol < 0:
        raise ValueError("tol must be non-negative")
    big = np.abs(M) > tol
    np.fill_diagonal(big, False)
    big = big | big.T
    return Graph.from_pairs(len(M), zip(*np.nonzero(big)))


def dependence_closure(g: Graph) -> Graph:
    """Connect every pair of vertices in the same connected component."""
    if not g.edges:
        return g
    rows, cols = zip(*g.edges)
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.p, g.p))
    _, labels = connected_components(adj, directed=False)
    pairs = [(i, j) for i in range(g.p) for j in range(g.p) if i != j and labels[i] == labels[j]]
    return Graph.from_pairs(g.p, pairs)


def export_dot(g: Graph, labels: Optional[Sequence[str]] = None) -> str:
    """DOT text with 1-based node names unless labels are given."""
    names = list(labels) if labels is not None else [str(i + 1) for i in range(g.p)]
    if len(names) != g.p:
        raise ValueError("need one label per vertex")

    def q(s):
        return s if s.isidentifier() or s.isdigit() else json.dumps(s)

    lines = ["graph G {"]
    lines += [f"  {q(n)};" for n in names]
    lines += [f"  {q(names[i])} -- {q(names[j])};" for i, j in g.undirected_edges()]
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_adjacency(g: Graph) -> dict:
    return {"p": g.p, "edges": [[i + 1, j + 1] for i, j in g.undirected_edges()]}


def from_adjacency(d: dict) -> Graph:
    return Graph.from_pairs(int(d["p"]), [(i - 1, j - 1) for i, j in d["edges"]])


def mixture_graphs(model, M, tol: float = DEFAULT_TOL) -> dict:
    """Per-level graphs ``E1``, ``E2`` over the Gaussian block and their intersection."""
    M = np.asarray(M, dtype=float)
    k = model.p - 1
    g1 = edge_set(M[:k, :k], tol)
    g2 = edge_set(M[k:, k:], tol)
    return {"E1": g1, "E2": g2, "shared": Graph(k, g1.edges & g2.edges)}
