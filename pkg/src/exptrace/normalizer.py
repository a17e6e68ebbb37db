"""Log-normalizer gamma(M) and moments of T under f_M.

Four numerical routes share one reduction: every strategy except
``closed_form`` produces weighted points ``(x_k, log w_k)`` such that

    gamma(M) ~= logsumexp_k( log w_k + xi(x_k) - <M, T(x_k)> ),

and moments are self-normalised weighted averages over the same points.
Enumeration uses unit weights on a finite domain, the truncated series unit
weights on a box of counts, quadrature Gauss-Legendre weights after the
substitution ``x = u**2`` (``x = +-u**2`` on the real line) and Monte Carlo
importance weights.  Moments are reported over free coordinates, i.e. for the
orbit-summed statistics ``phi_k = sum_{(i,j) in orbit k} T_ij``; for these
``d gamma / d theta_k = -E[phi_k]`` and the Hessian is ``Cov(phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, logsumexp

from .errors import DivergenceError, NormalizerError, ParameterError, StrategyError
from .model import SQRT_FAMILIES, TraceModel, validate_parameter

STRATEGY_KINDS = ("closed_form", "enumerate", "truncated_series", "quadrature", "monte_carlo")
CLOSED_FORM_FAMILIES = ("gaussian", "nonparanormal", "mixture_gaussian_binary")

# Points held in memory at once; larger grids are streamed in chunks.
MATERIALIZE_LIMIT = 3_000_000
STREAM_LIMIT = 60_000_000
CHUNK = 500_000
# Tail depth (in log units) covered by the quadrature box.
QUAD_DEPTH = 50.0
SERIES_START = 30
_CACHE_SIZE = 6


@dataclass(frozen=True)
class EvalStrategy:
    """How gamma(M) and its moments are evaluated.

    Only the fields relevant to ``kind`` are used: ``tail_tol``/``max_cap`` for
    the truncated series, ``nodes_per_dim`` for quadrature (per half line) and
    ``samples``/``seed`` for Monte Carlo.
    """

    kind: str
    tail_tol: float = 1e-12
    max_cap: int = 4096
    nodes_per_dim: int = 64
    samples: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise StrategyError(f"unknown strategy kind {self.kind!r}")
        if not self.tail_tol > 0:
            raise StrategyError("tail_tol must be positive")
        if self.nodes_per_dim < 2:
            raise StrategyError("nodes_per_dim must be >= 2")
        if self.samples < 1:
            raise StrategyError("samples must be >= 1")
        if self.max_cap < SERIES_START:
            raise StrategyError(f"max_cap must be >= {SERIES_START}")

    @classmethod
    def from_config(cls, cfg) -> "EvalStrategy":
        if isinstance(cfg, EvalStrategy):
            return cfg
        if isinstance(cfg, str):
            return cls(cfg)
        cfg = dict(cfg)
        if "strategy" in cfg and isinstance(cfg["strategy"], dict):
            cfg = dict(cfg["strategy"])
        known = {"kind", "tail_tol", "max_cap", "nodes_per_dim", "samples", "seed"}
        extra = set(cfg) - known
        if extra:
            raise StrategyError(f"unknown strategy fields {sorted(extra)}")
        if "kind" not in cfg:
            raise StrategyError("strategy needs a 'kind'")
        return cls(**cfg)

    def to_config(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "truncated_series":
            out.update(tail_tol=self.tail_tol, max_cap=self.max_cap)
        elif self.kind == "quadrature":
            out.update(nodes_per_dim=self.nodes_per_dim)
        elif self.kind == "monte_carlo":
            out.update(samples=self.samples, seed=self.seed)
        return out


def default_strategy(model: TraceModel) -> EvalStrategy:
    if model.family in CLOSED_FORM_FAMILIES:
        return EvalStrategy("closed_form")
    kinds = set(model.domain.kinds)
    if kinds <= {"binary", "finite"}:
        return EvalStrategy("enumerate")
    if kinds & {"nonneg", "real"}:
        return EvalStrategy("quadrature")
    return EvalStrategy("truncated_series")


@dataclass(frozen=True, eq=False)
class MomentBundle:
    """gamma(M) with the first (and optionally second) moments of T.

    ``mean_stat`` is the q x q matrix E[T].  ``cov_stat`` is the d x d
    covariance of the orbit-summed statistics over free coordinates, which is
    exactly the Hessian of gamma in free coordinates; :meth:`cov_tensor`
    expands it to ``Cov(T_ij, T_kl)`` for all entries.
    """

    log_norm: float
    mean_stat: np.ndarray
    mean_free: np.ndarray
    cov_stat: Optional[np.ndarray]
    strategy_used: EvalStrategy
    error_estimate: float
    q: int = 0
    _space: object = field(default=None, repr=False)

    def cov_tensor(self) -> np.ndarray:
        if self.cov_stat is None:
            raise ValueError("second moments were not requested (order=1)")
        sp = self._space
        scale = 1.0 / np.outer(sp.multiplicity, sp.multiplicity)
        full = sp.aggregator.T @ (self.cov_stat * scale) @ sp.aggregator
        return full.reshape(sp.q, sp.q, sp.q, sp.q)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def log_normalizer(model: TraceModel, M, strategy=None) -> float:
    """gamma(M) = log of the integral of exp(-<M, T(x)> + xi(x)) over the domain."""
    return _evaluate(model, M, strategy, order=0).log_norm


def moments(model: TraceModel, M, strategy=None, order: int = 1) -> MomentBundle:
    """gamma(M), E_M[T] and (``order=2``) the free-coordinate covariance of T."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    return _evaluate(model, M, strategy, order=order)


def check_integrability(model: TraceModel, M) -> str:
    """Classify gamma(M) as ``'finite'``, ``'infinite'`` or ``'unknown'``.

    ``'finite'`` only when a family rule certifies it and ``'infinite'`` only
    with a divergence witness; one-sided bounds that fail give ``'unknown'``.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (model.q, model.q) or not np.all(np.isfinite(M)):
        return "unknown"
    S = (M + M.T) / 2
    fam = model.family
    if model.domain.is_finite:
        return "finite"
    if fam == "poisson_sqrt":
        return "finite"
    if fam == "naive_poisson":
        off = S - np.diag(np.diag(S))
        # exp(a_ij x_i x_j) with a_ij = -M_ij > 0 outgrows (x_i!)(x_j!) along the diagonal.
        return "infinite" if np.any(off < 0) else "finite"
    if fam in ("gaussian", "nonparanormal"):
        return "finite" if np.linalg.eigvalsh(S)[0] > 0 else "infinite"
    if fam == "mixture_gaussian_binary":
        k = model.p - 1
        ok = all(np.linalg.eigvalsh(B)[0] > 0 for B in (S[:k, :k], S[k:, k:]))
        return "finite" if ok else "infinite"
    if fam in ("exponential_sqrt", "laplace_sqrt", "composite_sqrt"):
        if np.linalg.eigvalsh(S)[0] > 0:
            return "finite"
        cont = model.domain.coords_of("nonneg", "real")
        if any(S[j, j] < 0 for j in cont):
            # Along axis j alone the integrand grows like exp(|M_jj| x_j).
            return "infinite"
        return "unknown"
    return "unknown"


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def _evaluate(model, M, strategy, order) -> MomentBundle:
    strategy = default_strategy(model) if strategy is None else EvalStrategy.from_config(strategy)
    M = np.asarray(M, dtype=float)
    verdict = validate_parameter(model, M)
    if not verdict:
        raise ParameterError(f"M is not in the parameter space: {verdict.reason}")
    _check_compatible(model, strategy)
    theta = model.space.to_vector(M)
    if strategy.kind == "closed_form":
        log_norm, mean, cov, err = _closed_form(model, M, order)
    elif strategy.kind == "monte_carlo":
        log_norm, mean, cov, err = _monte_carlo(model, M, theta, strategy, order)
    else:
        log_norm, mean, cov, err = _grid(model, M, theta, strategy, order)
    if not np.isfinite(log_norm):
        raise DivergenceError(f"gamma(M) evaluated to {log_norm}")
    sp = model.space
    return MomentBundle(
        log_norm=float(log_norm),
        mean_stat=sp.expand(mean) if mean is not None else None,
        mean_free=mean,
        cov_stat=cov,
        strategy_used=strategy,
        error_estimate=float(err),
        q=model.q,
        _space=sp,
    )


def _check_compatible(model, strategy):
    kinds = model.domain.kinds
    n_cont = sum(k in ("nonneg", "real") for k in kinds)
    has_count = "count" in kinds
    kind = strategy.kind
    if kind == "closed_form" and model.family not in CLOSED_FORM_FAMILIES:
        raise StrategyError(f"no closed form for family {model.family!r}")
    if kind == "enumerate" and not model.domain.is_finite:
        raise StrategyError("enumerate requires a finite domain")
    if kind == "truncated_series" and not has_count:
        raise StrategyError("truncated_series requires count coordinates")
    if kind == "quadrature":
        if n_cont == 0:
            raise StrategyError("quadrature requires continuous coordinates")
        if n_cont > 4:
            raise StrategyError("quadrature is limited to 4 continuous dimensions; use monte_carlo")
    if kind in ("truncated_series", "quadrature") and n_cont > 4:
        raise StrategyError("too many continuous dimensions for a tensor grid")
    if kind in ("truncated_series", "quadrature") and model.family == "nonparanormal":
        if any(t.name != "identity" for t in model.transforms):
            raise StrategyError("grid strategies for nonparanormal need identity transforms")


# ---------------------------------------------------------------------------
# Closed forms (Gaussian-type families)
# ---------------------------------------------------------------------------


def _gaussian_blocks(S):
    """Mean and Isserlis covariance of vec(y y^T / 2) for y ~ N(0, S)."""
    q = len(S)
    mean = (S / 2).ravel()
    cov = (np.einsum("ik,jl->ijkl", S, S) + np.einsum("il,jk->ijkl", S, S)) / 4
    return mean, cov.reshape(q * q, q * q)


def _closed_form(model, M, order):
    sp = model.space
    A = sp.aggregator
    if model.family in ("gaussian", "nonparanormal"):
        p = model.p
        L = _cholesky(M)
        logdet = 2 * np.sum(np.log(np.diag(L)))
        log_norm = 0.5 * p * math.log(2 * math.pi) - 0.5 * logdet
        S = _spd_inverse(L)
        mean_vec, cov_vec = _gaussian_blocks(S)
    else:
        k = model.p - 1
        q = model.q
        blocks = (M[:k, :k], M[k:, k:])
        chol = [_cholesky(B) for B in blocks]
        # log integral over y for each level of z
        logz = np.array([0.5 * k * math.log(2 * math.pi) - np.sum(np.log(np.diag(Lb)))
                         for Lb in chol])
        log_norm = logsumexp(logz)
        pi = np.exp(logz - log_norm)
        mean_full = np.zeros((q, q))
        second = np.zeros((q, q, q, q))
        for b, (Lb, sl) in enumerate(zip(chol, (slice(0, k), slice(k, q)))):
            Sb = _spd_inverse(Lb)
            mb, cb = _gaussian_blocks(Sb)
            mb4 = mb.reshape(k, k)
            mean_full[sl, sl] = pi[b] * mb4
            raw2 = (cb + np.outer(mb, mb)).reshape(k, k, k, k)
            second[sl, sl, sl, sl] = pi[b] * raw2
        mean_vec = mean_full.ravel()
        cov_vec = second.reshape(q * q, q * q) - np.outer(mean_vec, mean_vec)
    mean = A @ mean_vec
    cov = A @ cov_vec @ A.T if order == 2 else None
    return log_norm, mean, cov, 0.0


def _cholesky(M):
    try:
        return np.linalg.cholesky((M + M.T) / 2)
    except np.linalg.LinAlgError:
        raise DivergenceError("matrix is not positive definite; gamma(M) is infinite") from None


def _spd_inverse(L):
    Linv = np.linalg.inv(L)
    return Linv.T @ Linv


# ---------------------------------------------------------------------------
# Grid strategies: enumeration, truncated series, quadrature
# ---------------------------------------------------------------------------


@dataclass
class _Grid:
    axes: list  # per coordinate (values, log weights)
    key: tuple

    @property
    def size(self):
        return int(np.prod([len(v) for v, _ in self.axes], dtype=float))


def _count_axis(N):
    return np.arange(N + 1, dtype=float), np.zeros(N + 1)


def _half_line_rule(U, nodes):
    t, w = leggauss(nodes)
    u = (t + 1) * U / 2
    # x = u^2, dx = 2u du
    return u * u, np.log(w * U / 2) + np.log(2 * u)


def _continuous_axis(kind, U, nodes):
    x, lw = _half_line_rule(U, nodes)
    if kind == "nonneg":
        return x, lw
    return np.concatenate([-x[::-1], x]), np.concatenate([lw[::-1], lw])


def _quantize(U):
    return float(2.0 ** (math.ceil(4 * math.log2(U)) / 4))


def _continuous_ranges(model, M):
    """x-range per continuous coordinate covering exp(-QUAD_DEPTH) of the tails."""
    S = (M + M.T) / 2
    fam = model.family
    cont = model.domain.coords_of("nonneg", "real")
    if fam == "mixture_gaussian_binary":
        k = model.p - 1
        var = np.maximum(np.diag(np.linalg.inv(S[:k, :k])), np.diag(np.linalg.inv(S[k:, k:])))
        return {j: math.sqrt(QUAD_DEPTH * var[j]) for j in cont}
    try:
        inv_diag = np.diag(np.linalg.inv(S))
    except np.linalg.LinAlgError:
        inv_diag = None
    if inv_diag is None or np.any(inv_diag[cont] <= 0) or np.linalg.eigvalsh(S)[0] <= 0:
        raise StrategyError("quadrature box needs a positive definite M to set its range")
    if fam in SQRT_FAMILIES:
        # exp(-u^T M u) with u = sqrt|x|: Gaussian tails in u with variance (M^-1)_jj / 2
        return {j: QUAD_DEPTH * inv_diag[j] for j in cont}
    return {j: math.sqrt(QUAD_DEPTH * inv_diag[j]) for j in cont}


def _poisson_truncation(model, M, strategy):
    """Per-coordinate caps from the domination sum_x C^x / x! with
    C_j = exp(-(M_jj - p * max_{i != j} |M_ij|)) (square-root statistic)."""
    p = model.p
    S = (M + M.T) / 2
    off = np.abs(S - np.diag(np.diag(S)))
    cmax = off.max() if p > 1 else 0.0
    logC = -np.diag(S) + p * cmax
    C = np.exp(logC)
    N = np.full(p, SERIES_START)
    for j in range(p):
        while _log_poisson_tail(N[j], C[j]) - C[j] > math.log(strategy.tail_tol) - 5:
            N[j] *= 2
            if N[j] > strategy.max_cap:
                N[j] = strategy.max_cap
                break
    return N, C


def _log_poisson_tail(N, C):
    """log of sum_{x > N} C^x / x!, bounded by a geometric series."""
    r = C / (N + 2)
    head = (N + 1) * math.log(C) - math.lgamma(N + 2)
    if r >= 1:
        return math.inf
    return head - math.log1p(-r)


def _build_grid(model, M, strategy, count_caps):
    nodes = strategy.nodes_per_dim
    cont_ranges = None
    axes = []
    key = [strategy.kind]
    for j, (kind, size) in enumerate(zip(model.domain.kinds, model.domain.sizes)):
        if kind == "binary":
            axes.append(_count_axis(1))
            key.append(("b",))
        elif kind == "finite":
            axes.append(_count_axis(size - 1))
            key.append(("f", size))
        elif kind == "count":
            N = int(count_caps[j])
            axes.append(_count_axis(N))
            key.append(("c", N))
        else:
            if cont_ranges is None:
                cont_ranges = _continuous_ranges(model, M)
            U = _quantize(math.sqrt(cont_ranges[j]))
            axes.append(_continuous_axis(kind, U, nodes))
            key.append((kind, U, nodes))
    return _Grid(axes, tuple(key))


def _grid_points(model, grid, start, stop):
    shape = [len(v) for v, _ in grid.axes]
    idx = np.unravel_index(np.arange(start, stop), shape)
    X = np.column_stack([grid.axes[j][0][idx[j]] for j in range(len(shape))])
    lw = np.sum([grid.axes[j][1][idx[j]] for j in range(len(shape))], axis=0)
    if model.domain.constraint is not None:
        keep = np.asarray(model.domain.constraint(X), dtype=bool)
        X, lw = X[keep], lw[keep]
    lw = lw + model.log_base(X)
    return X, lw


def _materialized(model, grid):
    cache = model._cache
    hit = cache.get(grid.key)
    if hit is not None:
        return hit
    X, lw = _grid_points(model, grid, 0, grid.size)
    Phi = model.features(X)
    entry = (X, lw, Phi)
    if len(cache) >= _CACHE_SIZE:
        cache.pop(next(iter(cache)))
    cache[grid.key] = entry
    return entry


def _chunks(model, grid):
    total = grid.size
    if total <= MATERIALIZE_LIMIT:
        yield _materialized(model, grid)
        return
    if total > STREAM_LIMIT:
        raise NormalizerError(f"evaluation grid of {total} points exceeds the budget")
    for start in range(0, total, CHUNK):
        X, lw = _grid_points(model, grid, start, min(total, start + CHUNK))
        yield X, lw, model.features(X)


def _reduce(model, grid, theta, order, shell=None):
    """Weighted reduction over the grid; returns gamma, E[phi], Cov[phi], shell mass."""
    m = -math.inf
    Z = 0.0
    S1 = np.zeros(len(theta))
    Zs = 0.0
    for X, lw, Phi in _chunks(model, grid):
        s = lw - Phi @ theta
        if s.size == 0:
            continue
        cm = float(np.max(s))
        if not np.isfinite(cm):
            if cm == math.inf:
                raise DivergenceError("unnormalised density is infinite on the grid")
            continue
        if cm > m:
            scale = math.exp(m - cm) if np.isfinite(m) else 0.0
            Z, S1, Zs, m = Z * scale, S1 * scale, Zs * scale, cm
        w = np.exp(s - m)
        Z += float(np.sum(w))
        S1 += w @ Phi
        if shell is not None:
            Zs += float(np.sum(w[shell(X)]))
    if Z <= 0 or not np.isfinite(Z):
        raise NormalizerError("no mass on the evaluation grid")
    log_norm = m + math.log(Z)
    mean = S1 / Z
    cov = None
    if order == 2:
        cov = np.zeros((len(theta), len(theta)))
        for X, lw, Phi in _chunks(model, grid):
            w = np.exp(lw - Phi @ theta - log_norm)
            D = Phi - mean
            cov += D.T @ (D * w[:, None])
        cov = (cov + cov.T) / 2
    return log_norm, mean, cov, Zs / Z


def _grid(model, M, theta, strategy, order):
    kinds = model.domain.kinds
    count_cols = [j for j, k in enumerate(kinds) if k == "count"]
    if not count_cols:
        grid = _build_grid(model, M, strategy, {})
        log_norm, mean, cov, _ = _reduce(model, grid, theta, order)
        err = 0.0 if strategy.kind == "enumerate" else _quadrature_error(model, M, theta, strategy,
                                                                         log_norm)
        return log_norm, mean, cov, err

    if model.family == "poisson_sqrt":
        N, C = _poisson_truncation(model, M, strategy)
        grid = _build_grid(model, M, strategy, dict(enumerate(N)))
        if grid.size <= STREAM_LIMIT:
            log_norm, mean, cov, _ = _reduce(model, grid, theta, order)
            bound = 0.0
            for j in range(model.p):
                rest = float(np.sum(C) - C[j])
                bound += math.exp(min(700.0, _log_poisson_tail(int(N[j]), C[j]) + rest - log_norm))
            if bound <= strategy.tail_tol or np.all(N >= strategy.max_cap):
                return log_norm, mean, cov, bound
    return _doubling_series(model, M, theta, strategy, order, count_cols)


def _doubling_series(model, M, theta, strategy, order, count_cols):
    """Double the count caps until the outer shell carries less than tail_tol of the mass."""
    N = SERIES_START
    while True:
        caps = {j: N for j in count_cols}
        grid = _build_grid(model, M, strategy, caps)
        half = N // 2

        def shell(X, half=half):
            return np.any(X[:, count_cols] > half, axis=1)

        if grid.size > STREAM_LIMIT:
            raise NormalizerError(
                f"truncated series did not converge before the point budget (cap {N})")
        log_norm, mean, cov, frac = _reduce(model, grid, theta, order, shell=shell)
        if frac <= strategy.tail_tol:
            return log_norm, mean, cov, frac
        if N >= strategy.max_cap:
            raise DivergenceError(
                f"partial sums still growing at cap {N} (outer shell holds {frac:.3g} of the "
                f"mass); M is outside the integrability region")
        N = min(2 * N, strategy.max_cap)


def _quadrature_error(model, M, theta, strategy, log_norm):
    """Difference against a half-resolution rule as a cheap error proxy."""
    half = replace(strategy, nodes_per_dim=max(2, strategy.nodes_per_dim // 2))
    kinds = model.domain.kinds
    caps = {j: SERIES_START for j, k in enumerate(kinds) if k == "count"}
    grid = _build_grid(model, M, half, caps)
    if grid.size > MATERIALIZE_LIMIT:
        return float("nan")
    coarse, _, _, _ = _reduce(model, grid, theta, 0)
    return abs(coarse - log_norm)


# ---------------------------------------------------------------------------
# Monte Carlo importance sampling
# ---------------------------------------------------------------------------


def _proposal(model, M, rng, n):
    """Draw from an independent per-coordinate proposal; returns (X, log q(X))."""
    fam = model.family
    S = (M + M.T) / 2
    diag = np.diag(S)
    kinds = model.domain.kinds
    X = np.zeros((n, model.p))
    logq = np.zeros(n)
    quadratic = fam not in SQRT_FAMILIES
    for j, (kind, size) in enumerate(zip(kinds, model.domain.sizes)):
        if fam == "mixture_gaussian_binary":
            k = model.p - 1
            rate = min(S[j, j], S[k + j, k + j]) if j < k else 0.0
        else:
            rate = diag[j] if j < len(diag) else 0.0
        if kind == "binary":
            prob = 0.5 if fam == "mixture_gaussian_binary" else 1.0 / (1.0 + math.exp(min(rate, 30)))
            prob = min(max(prob, 0.02), 0.98)
            x = (rng.random(n) < prob).astype(float)
            logq += np.where(x == 1, math.log(prob), math.log1p(-prob))
        elif kind == "finite":
            x = rng.integers(0, size, n).astype(float)
            logq += -math.log(size)
        elif kind == "count":
            lam = float(np.clip(math.exp(-min(max(rate, -7.0), 7.0)), 1e-3, 1e3))
            x = rng.poisson(lam, n).astype(float)
            logq += x * math.log(lam) - lam - gammaln(x + 1)
        elif kind == "nonneg":
            r = max(rate, 0.1)
            x = rng.exponential(1 / r, n)
            logq += math.log(r) - r * x
        else:
            r = max(rate, 0.1)
            if quadratic:
                x = rng.normal(0, 1 / math.sqrt(r), n)
                logq += 0.5 * math.log(r / (2 * math.pi)) - 0.5 * r * x * x
            else:
                x = rng.laplace(0, 1 / r, n)
                logq += math.log(r / 2) - r * np.abs(x)
        X[:, j] = x
    return X, logq


def _monte_carlo(model, M, theta, strategy, order):
    rng = np.random.default_rng(strategy.seed)
    n_total = strategy.samples
    logws, phis = [], []
    for start in range(0, n_total, CHUNK):
        n = min(CHUNK, n_total - start)
        X, logq = _proposal(model, M, rng, n)
        lw = np.full(n, -np.inf)
        ok = ~model.domain.violations(X).any(axis=1)
        Phi = np.zeros((n, len(theta)))
        if ok.any():
            Phi[ok] = model.features(X[ok])
            lw[ok] = model.log_base(X[ok]) - Phi[ok] @ theta - logq[ok]
        logws.append(lw)
        phis.append(Phi)
    lw = np.concatenate(logws)
    Phi = np.concatenate(phis)
    m = np.max(lw)
    if not np.isfinite(m):
        raise NormalizerError("all importance weights vanished")
    w = np.exp(lw - m)
    mean_w = float(np.mean(w))
    log_norm = m + math.log(mean_w)
    se = float(np.std(w, ddof=1) / (mean_w * math.sqrt(n_total))) if n_total > 1 else math.inf
    pw = w / np.sum(w)
    mean = pw @ Phi
    cov = None
    if order == 2:
        D = Phi - mean
        cov = D.T @ (D * pw[:, None])
        cov = (cov + cov.T) / 2
    return log_norm, mean, cov, se
