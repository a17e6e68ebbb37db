"""Fisher information, Wald tests and Holm-adjusted confidence subgraphs.

Fisher matrices live on the free coordinates and are per-sample: the
information of ``n`` observations is ``n * F``.  Restriction Jacobians are
supplied with respect to matrix entries and pulled back to free coordinates
by summing over each symmetric orbit, which keeps quadratic forms independent
of how symmetric pairs are parametrized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaincc

from .errors import ConfigError, InferenceError, ParameterError
from .estimator import FitResult
from .graph import Graph
from .model import TraceModel, as_dataset
from .normalizer import moments

MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class FisherTensor:
    matrix: np.ndarray
    n: int
    source: str
    space: object = field(repr=False, default=None)

    @property
    def condition_number(self) -> float:
        ev = np.linalg.eigvalsh(self.matrix)
        if ev[0] <= 0:
            return math.inf
        return float(ev[-1] / ev[0])

    def entry_tensor(self) -> np.ndarray:
        """Expand to ``Cov(T_ij, T_kl)`` indexed over all matrix entries."""
        sp = self.space
        scale = 1.0 / np.outer(sp.multiplicity, sp.multiplicity)
        full = sp.aggregator.T @ (self.matrix * scale) @ sp.aggregator
        return full.reshape(sp.q, sp.q, sp.q, sp.q)


@dataclass(frozen=True, eq=False)
class Restriction:
    """Smooth restriction ``lambda(M) = 0`` with ``m`` components.

    ``jacobian`` returns the ``(m, q, q)`` array of partial derivatives with
    respect to matrix entries.
    """

    m: int
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    @staticmethod
    def single_entry(i: int, j: int, q: int) -> "Restriction":
        def jac(M):
            J = np.zeros((1, q, q))
            J[0, i, j] = 1.0
            return J
        return Restriction(1, lambda M: np.array([M[i, j]]), jac, f"M[{i + 1},{j + 1}]")

    @staticmethod
    def entry_difference(i: int, j: int, k: int, l: int, q: int) -> "Restriction":
        def jac(M):
            J = np.zeros((1, q, q))
            J[0, i, j] += 1.0
            J[0, k, l] -= 1.0
            return J
        return Restriction(1, lambda M: np.array([M[i, j] - M[k, l]]), jac,
                           f"M[{i + 1},{j + 1}]-M[{k + 1},{l + 1}]")

    @staticmethod
    def entry_set(entries, q: int) -> "Restriction":
        entries = [tuple(int(v) for v in e) for e in entries]

        def jac(M):
            J = np.zeros((len(entries), q, q))
            for r, (i, j) in enumerate(entries):
                J[r, i, j] = 1.0
            return J
        label = ",".join(f"M[{i + 1},{j + 1}]" for i, j in entries)
        return Restriction(len(entries), lambda M: np.array([M[i, j] for i, j in entries]), jac,
                           label)

    def scaled(self, c: float) -> "Restriction":
        return Restriction(self.m, lambda M: c * self.value(M), lambda M: c * self.jacobian(M),
                           f"{c:g}*({self.label})")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: int
    p_value: float
    restriction: str = ""

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        return {"restriction": self.restriction, "W": self.statistic, "dof": self.dof,
                "p": self.p_value}

    @classmethod
    def from_dict(cls, d) -> "TestResult":
        return cls(float(d["W"]), int(d["dof"]), float(d["p"]), d.get("restriction", ""))


@dataclass(frozen=True, eq=False)
class SubgraphResult:
    graph: Graph
    alpha: float
    p_values: dict
    adjusted: dict

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "edges": [[i + 1, j + 1] for i, j in self.graph.undirected_edges()],
            "p_values": [[i + 1, j + 1, p] for (i, j), p in sorted(self.p_values.items())],
            "adjusted": [[i + 1, j + 1, p] for (i, j), p in sorted(self.adjusted.items())],
        }


# ---------------------------------------------------------------------------
# Fisher information
# ---------------------------------------------------------------------------


def empirical_fisher(model: TraceModel, data) -> FisherTensor:
    """Sample covariance (1/(n-1)) of the free-coordinate statistics."""
    ds = as_dataset(model, data)
    if ds.n < 2:
        raise ConfigError("empirical Fisher information needs n >= 2")
    Phi = model.features(ds.rows)
    D = Phi - Phi.mean(axis=0)
    F = D.T @ D / (ds.n - 1)
    return FisherTensor((F + F.T) / 2, ds.n, "empirical", model.space)


def model_fisher(model: TraceModel, M, strategy=None, n: int = 1) -> FisherTensor:
    """Per-sample information ``Cov_M(T)`` over free coordinates."""
    b = moments(model, M, strategy, order=2)
    return FisherTensor(b.cov_stat, int(n), "model", model.space)


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------


def chi_square_sf(w: float, m: int) -> float:
    """Upper tail of the chi-square law with ``m`` degrees of freedom."""
    if m < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if w < 0:
        raise ValueError("statistic must be non-negative")
    return float(gammaincc(m / 2.0, w / 2.0))


def wald_from_covariance(lam, V, label: str = "") -> TestResult:
    """``W = lam^T V^{-1} lam`` referenced to chi-square(m)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    try:
        W = float(lam @ np.linalg.solve(V, lam))
    except np.linalg.LinAlgError:
        raise InferenceError("restriction covariance is singular") from None
    W = max(W, 0.0)
    return TestResult(W, len(lam), chi_square_sf(W, len(lam)), label)


def _free_jacobian(space, J):
    m = J.shape[0]
    return J.reshape(m, -1) @ space.aggregator.T


def wald_statistic(fit: FitResult, fisher: FisherTensor, r: Restriction) -> TestResult:
    sp = fit.model.space
    F = fisher.matrix
    if fisher.condition_number >= MAX_CONDITION:
        raise InferenceError(f"Fisher information is singular (condition {fisher.condition_number:.3g})")
    J = _free_jacobian(sp, np.asarray(r.jacobian(fit.m_hat), dtype=float))
    if J.shape[0] != r.m:
        raise ConfigError("jacobian row count differs from the restriction count")
    if np.linalg.matrix_rank(J) < r.m:
        raise InferenceError("restriction jacobian is rank deficient")
    V = J @ np.linalg.solve(F, J.T) / fisher.n
    return wald_from_covariance(r.value(fit.m_hat), V, r.label)


def edge_test(fit: FitResult, fisher: FisherTensor, i: int, j: int,
              literal: bool = False) -> TestResult:
    """Wald test of ``M_ij = 0``.

    ``literal=True`` uses the simplified ``n * F_kk * M_ij**2`` with ``F_kk``
    the diagonal information of the free coordinate; it matches the default
    only when the information matrix is diagonal.
    """
    sp = fit.model.space
    if i == j:
        raise ConfigError("edge tests need i != j")
    if not sp.is_free(i, j):
        raise ParameterError(f"entry ({i + 1}, {j + 1}) is fixed at zero and cannot be tested")
    if literal:
        k = sp.coord_index(i, j)
        W = float(fisher.n * fisher.matrix[k, k] * fit.m_hat[i, j] ** 2)
        return TestResult(W, 1, chi_square_sf(W, 1), f"M[{i + 1},{j + 1}]")
    return wald_statistic(fit, fisher, Restriction.single_entry(i, j, sp.q))


def holm(p_values: dict, alpha: float):
    """Holm step-down; returns (rejected keys, adjusted p-values)."""
    items = sorted(p_values.items(), key=lambda kv: (kv[1], kv[0]))
    m = len(items)
    rejected = []
    adjusted = {}
    running = 0.0
    stopped = False
    for rank, (key, p) in enumerate(items):
        running = max(running, min(1.0, (m - rank) * p))
        adjusted[key] = running
        if not stopped and p <= alpha / (m - rank):
            rejected.append(key)
        else:
            stopped = True
    return rejected, adjusted


def confidence_subgraph(fit: FitResult, fisher: FisherTensor, alpha: float,
                        literal: bool = False) -> SubgraphResult:
    if not 0 < alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    sp = fit.model.space
    pvals = {}
    for i in range(sp.q):
        for j in range(i + 1, sp.q):
            if sp.is_free(i, j):
                pvals[(i, j)] = edge_test(fit, fisher, i, j, literal).p_value
    rejected, adjusted = holm(pvals, alpha)
    return SubgraphResult(Graph.from_pairs(sp.q, rejected), alpha, pvals, adjusted)


def subgraph_from_pvalues(p: int, p_values: dict, alpha: float) -> SubgraphResult:
    rejected, adjusted = holm(p_values, alpha)
    return SubgraphResult(Graph.from_pairs(p, rejected), alpha, dict(p_values), adjusted)
