"""Maximum likelihood for exponential trace models.

The per-sample negative log-likelihood is ``<M, Tbar> + gamma(M)`` up to a
constant.  It is convex in ``M`` with gradient ``Tbar - E_M[T]`` and Hessian
``Cov_M(T)``, so a damped Newton iteration over the free coordinates is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, NonExistenceError, NormalizerError
from .model import Dataset, TraceModel, as_dataset, trace_inner, validate_parameter
from .normalizer import EvalStrategy, default_strategy, log_normalizer, moments


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Sample average of the statistic, ``Tbar = (1/n) sum_i T(x_i)``."""

    entries: np.ndarray
    n: int
    free: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 200
    grad_tol: float = 1e-8
    init: Optional[np.ndarray] = None
    backtrack: float = 0.5
    armijo: float = 1e-4
    divergence_bound: float = 1e6
    strategy: Optional[EvalStrategy] = None
    # Multiplies the objective; n reproduces the summed negative log-likelihood.
    scale: float = 1.0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        for name in ("grad_tol", "divergence_bound", "scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ConfigError("backtrack must lie in (0, 1)")
        if not 0 < self.armijo < 0.5:
            raise ConfigError("armijo must lie in (0, 0.5)")


@dataclass(frozen=True, eq=False)
class FitResult:
    m_hat: np.ndarray
    log_norm_hat: float
    objective: float
    iterations: int
    final_grad_norm: float
    converged: bool
    stationarity_gap: float
    n: int
    gram: GramMatrix = field(repr=False)
    model: TraceModel = field(repr=False)
    strategy: EvalStrategy = field(repr=False)
    history: tuple = field(default=(), repr=False)
    message: str = ""

    def log_likelihood(self, data=None) -> float:
        """Full log-likelihood at ``m_hat``, base terms included."""
        if data is None:
            raise ValueError("the base-term sum needs the data")
        return log_likelihood(self.model, self.m_hat, data, self.strategy)


def gram_matrix(model: TraceModel, data) -> GramMatrix:
    ds = as_dataset(model, data)
    T = model.stat(ds.rows)
    entries = T.mean(axis=0)
    return GramMatrix(entries=entries, n=ds.n, free=model.space.aggregate(entries))


def objective(model: TraceModel, M, gram: GramMatrix, strategy=None) -> float:
    """``<M, Tbar> + gamma(M)``."""
    return trace_inner(M, gram.entries) + log_normalizer(model, M, strategy)


def gradient(model: TraceModel, M, gram: GramMatrix, strategy=None) -> np.ndarray:
    """Gradient over free coordinates: orbit sums of ``Tbar - E_M[T]``."""
    b = moments(model, M, strategy, order=1)
    return gram.free - b.mean_free


def hessian(model: TraceModel, M, strategy=None) -> np.ndarray:
    """Hessian over free coordinates, the covariance of the orbit-summed statistic."""
    return moments(model, M, strategy, order=2).cov_stat


def log_likelihood(model: TraceModel, M, data, strategy=None) -> float:
    ds = as_dataset(model, data)
    gram = gram_matrix(model, ds)
    base = float(np.sum(model.log_base(ds.rows)))
    return -ds.n * objective(model, M, gram, strategy) + base


# ---------------------------------------------------------------------------
# Initialisation and degeneracy checks
# ---------------------------------------------------------------------------


def _logit_diag(freq):
    f = np.clip(freq, 1e-3, 1 - 1e-3)
    return np.log((1 - f) / f)


def default_init(model: TraceModel, gram: GramMatrix, z_rate: Optional[float] = None) -> np.ndarray:
    """Diagonal start solving the independent-coordinate moment equations."""
    G = gram.entries
    diag = np.diag(G).copy()
    fam = model.family
    q = model.q
    init = np.zeros(q)
    if fam in ("gaussian", "nonparanormal"):
        # Tbar_jj = mean(x_j^2) / 2 and the precision is 1 / mean(x_j^2).
        init = 1.0 / (2.0 * diag)
    elif fam in ("ising", "multinomial_ising"):
        init = _logit_diag(diag)
    elif fam == "mixture_gaussian_binary":
        # Tbar_jj of block k is pi_k * E[y_j^2 | z=k] / 2.
        pis = np.array([1.0 - z_rate, z_rate]) if z_rate is not None else np.full(2, 0.5)
        blocks = np.split(np.maximum(diag, 1e-12), 2)
        init = np.concatenate([pi / (2.0 * b) for pi, b in zip(pis, blocks)])
    else:
        for j, kind in enumerate(model.domain.kinds):
            t = max(diag[j], 1e-12)
            if kind == "binary":
                init[j] = _logit_diag(diag[j])
            elif kind == "count" and fam in ("poisson_sqrt", "naive_poisson", "composite_sqrt"):
                init[j] = np.clip(-math.log(t), -10.0, 10.0)
            elif kind in ("nonneg", "real") and fam in ("exponential_sqrt", "laplace_sqrt",
                                                        "composite_sqrt"):
                init[j] = 1.0 / t
            elif kind in ("count", "real", "nonneg"):
                # quadratic diagonal statistic x^2 without a 1/2
                init[j] = 1.0 / (2.0 * t)
    return np.diag(init)


def _check_degenerate(model: TraceModel, gram: GramMatrix, rows: np.ndarray) -> None:
    """Raise NonExistenceError for data on the boundary of the mean space."""
    fam = model.family
    kinds = model.domain.kinds
    sp = model.space
    if fam in ("gaussian", "nonparanormal"):
        if np.linalg.eigvalsh(gram.entries)[0] <= 1e-14 * max(1.0, np.abs(gram.entries).max()):
            raise NonExistenceError("Gram matrix is singular; the MLE does not exist "
                                    f"(n={gram.n}, p={model.p})")
        return
    if fam == "mixture_gaussian_binary":
        k = model.p - 1
        z = rows[:, k]
        for level in (0, 1):
            y = rows[z == level, :k]
            if len(y) <= k or np.linalg.eigvalsh(y.T @ y)[0] <= 1e-12:
                raise NonExistenceError(
                    f"too few or collinear observations with z={level} (coordinate {k})")
        return
    for j, kind in enumerate(kinds):
        col = rows[:, j]
        if kind in ("binary", "count") and np.all(col == col[0]) and (kind == "binary" or col[0] == 0):
            raise NonExistenceError(
                f"coordinate {j} is constant ({col[0]:g}) across all samples; "
                "the MLE does not exist")
        if kind in ("nonneg", "real") and np.all(col == 0):
            raise NonExistenceError(f"coordinate {j} is identically zero; the MLE does not exist")
    discrete = [j for j, k in enumerate(kinds) if k in ("binary", "count")]
    for a in discrete:
        for b in discrete:
            if a < b and sp.is_free(a, b) and gram.entries[a, b] == 0:
                raise NonExistenceError(
                    f"coordinates {a} and {b} are never jointly nonzero; "
                    f"the interaction ({a}, {b}) diverges")


# ---------------------------------------------------------------------------
# Damped Newton
# ---------------------------------------------------------------------------


def _newton_direction(H, g):
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return -g, False
    step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
    if not np.all(np.isfinite(step)) or step @ g >= 0:
        return -g, False
    return step, True


def fit_mle(model: TraceModel, data, opts: Optional[FitOptions] = None) -> FitResult:
    opts = opts or FitOptions()
    ds = data if isinstance(data, Dataset) else as_dataset(model, data)
    gram = gram_matrix(model, ds)
    _check_degenerate(model, gram, ds.rows)
    strategy = opts.strategy or default_strategy(model)
    sp = model.space
    s = opts.scale

    z_rate = float(ds.rows[:, -1].mean()) if model.family == "mixture_gaussian_binary" else None
    M0 = default_init(model, gram, z_rate) if opts.init is None else np.asarray(opts.init, dtype=float)
    if not validate_parameter(model, M0):
        raise ConfigError(f"initial matrix is infeasible: {validate_parameter(model, M0).reason}")
    theta = sp.to_vector(M0)

    def evaluate(th, order):
        M = sp.to_matrix(th)
        if not validate_parameter(model, M):
            return None
        try:
            b = moments(model, M, strategy, order=order)
        except NormalizerError:
            return None
        return b, s * (th @ gram.free + b.log_norm)

    first = evaluate(theta, 2)
    if first is None:
        raise NormalizerError("the normalizer failed at the initial matrix")
    bundle, f = first
    history = [f]
    converged = False
    message = "maximum iterations reached"
    it = 0
    for it in range(1, opts.max_iter + 1):
        g = s * (gram.free - bundle.mean_free)
        gnorm = sp.projected_norm(g)
        if gnorm <= opts.grad_tol:
            converged = True
            message = "converged"
            it -= 1
            break
        step, _ = _newton_direction(s * bundle.cov_stat, g)
        slope = float(step @ g)
        t = 1.0
        accepted = None
        for _ in range(60):
            trial = evaluate(theta + t * step, 2)
            if trial is not None:
                # Allow roundoff-level ties so Newton can finish near the optimum.
                slack = 1e-14 * max(1.0, abs(f))
                if trial[1] <= f + opts.armijo * t * slope + slack:
                    accepted = trial
                    break
            t *= opts.backtrack
        if accepted is None:
            message = "line search stalled"
            break
        theta = theta + t * step
        bundle, f = accepted
        history.append(f)
        if np.linalg.norm(sp.to_matrix(theta)) > opts.divergence_bound:
            raise NonExistenceError(
                f"iterate norm exceeded {opts.divergence_bound:g} after {it} iterations; "
                f"the MLE may not exist at n={gram.n}")
    g = s * (gram.free - bundle.mean_free)
    gnorm = sp.projected_norm(g)
    converged = converged or gnorm <= opts.grad_tol
    if converged:
        message = "converged"

    M_hat = sp.to_matrix(theta)
    final = moments(model, M_hat, strategy, order=1)
    diff = np.abs(gram.entries - final.mean_stat)
    gap = max(float(diff[i, j]) for i, j in sp.free_coords)
    return FitResult(
        m_hat=M_hat,
        log_norm_hat=final.log_norm,
        objective=float(theta @ gram.free + final.log_norm),
        iterations=it,
        final_grad_norm=float(gnorm),
        converged=bool(converged),
        stationarity_gap=gap,
        n=gram.n,
        gram=gram,
        model=model,
        strategy=strategy,
        history=tuple(history),
        message=message,
    )
