"""Draw datasets from f_M.

Gaussian-type and finite families are sampled exactly.  Count and continuous
families use systematic-scan Gibbs with the node conditionals

    log f(x_j | x_-j) = -a |x_j| - b sqrt|x_j| + xi_j(x_j) + const,
    a = M_jj,  b = sum_{k != j} (M_jk + M_kj) sqrt|x_k|,

sampled on an adaptive support for counts and by numeric inverse CDF in
``u = sqrt|x_j|`` for continuous coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, ParameterError, SamplerError
from .model import SQRT_FAMILIES, Dataset, TraceModel, validate_parameter
from .normalizer import EvalStrategy, _build_grid, _materialized

COUNT_START = 32
COUNT_TAIL = 1e-14
CELLS = 64
_GL_T, _GL_W = leggauss(8)
_GL_LOGW = np.log(_GL_W)[None, :]


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    burn_in: int = 1000
    thin: int = 10
    init: Optional[tuple] = None
    grid_tol: float = 1e-10
    count_cap: int = 512
    chains: int = 16

    def __post_init__(self):
        if self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.chains < 1:
            raise ConfigError("chains must be >= 1")
        if not self.grid_tol > 0:
            raise ConfigError("grid_tol must be positive")
        if self.count_cap < 1:
            raise ConfigError("count_cap must be >= 1")


def sample(model: TraceModel, M, n: int, cfg: Optional[SamplerConfig] = None) -> Dataset:
    """``n`` observations from f_M; deterministic given ``cfg.seed``."""
    cfg = cfg or SamplerConfig()
    M = np.asarray(M, dtype=float)
    verdict = validate_parameter(model, M)
    if not verdict:
        raise ParameterError(f"M is not in the parameter space: {verdict.reason}")
    n = int(n)
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    fam = model.family
    if fam in ("gaussian", "nonparanormal"):
        X = _gaussian(M, n, rng)
        if fam == "nonparanormal":
            X = np.column_stack([t.inverse(X[:, j]) for j, t in enumerate(model.transforms)])
    elif fam == "mixture_gaussian_binary":
        X = _mixture(model, M, n, rng)
    elif model.domain.is_finite:
        X = _enumerated(model, M, n, rng)
    else:
        X = _gibbs(model, M, n, cfg)
    model.domain.check(X)
    return Dataset(X)


def _gaussian(M, n, rng):
    L = np.linalg.cholesky(M)
    Z = rng.standard_normal((len(M), n))
    return np.linalg.solve(L.T, Z).T


def _mixture(model, M, n, rng):
    k = model.p - 1
    blocks = (M[:k, :k], M[k:, k:])
    logdets = [np.linalg.slogdet(B)[1] for B in blocks]
    # P(z = 1) = det(M2)^{-1/2} / (det(M1)^{-1/2} + det(M2)^{-1/2})
    p1 = 1.0 / (1.0 + math.exp(0.5 * (logdets[1] - logdets[0])))
    z = (rng.random(n) < p1).astype(float)
    Y = np.zeros((n, k))
    for level, B in enumerate(blocks):
        idx = np.nonzero(z == level)[0]
        if len(idx):
            Y[idx] = _gaussian(B, len(idx), rng)
    return np.column_stack([Y, z])


def _enumerated(model, M, n, rng):
    grid = _build_grid(model, M, EvalStrategy("enumerate"), {})
    X, lw, Phi = _materialized(model, grid)
    s = lw - Phi @ model.space.to_vector(M)
    prob = np.exp(s - logsumexp(s))
    cdf = np.cumsum(prob)
    cdf /= cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), len(cdf) - 1)
    return X[idx].copy()


# ---------------------------------------------------------------------------
# Gibbs
# ---------------------------------------------------------------------------


def _interaction(M, X, j, fam):
    """Linear coefficient ``b`` of the coordinate-j conditional for each chain."""
    S = M + M.T
    w = np.delete(S[j], j)
    rest = np.delete(X, j, axis=1)
    if fam in SQRT_FAMILIES:
        rest = np.sqrt(np.abs(rest))
    return rest @ w


def _count_support(a, b, cap):
    """Smallest N >= COUNT_START whose tail beyond N is below COUNT_TAIL for every chain."""
    N = COUNT_START
    while True:
        x = np.arange(N + 1.0)
        logits = -np.outer(a, x) - np.outer(b, np.sqrt(x)) - gammaln(x + 1)
        top = logits.max(axis=1)
        step = np.exp(-a) / (N + 1) * np.maximum(1.0, np.exp(-b * (math.sqrt(N + 1) - math.sqrt(N))))
        ok = step < 1
        bound = np.full_like(step, np.inf)
        bound[ok] = np.exp(logits[ok, -1] - top[ok]) * step[ok] / (1 - step[ok])
        if np.all(bound < COUNT_TAIL):
            return logits
        if N >= cap:
            raise SamplerError(f"count conditional not resolved within count_cap={cap}")
        N = min(2 * N, cap)


def _draw_discrete(logits, u):
    prob = np.exp(logits - logits.max(axis=1, keepdims=True))
    cdf = np.cumsum(prob, axis=1)
    cdf /= cdf[:, -1:]
    return (cdf < u[:, None]).sum(axis=1).astype(float)


def _cell_log_mass(a, b, lo, hi):
    """log of the integral of u exp(-a u^2 - b u) over [lo, hi], per chain."""
    half = (hi - lo) / 2
    u = lo[:, None] + (_GL_T[None, :] + 1) * half[:, None]
    f = np.log(np.maximum(u, 1e-300)) - a[:, None] * u * u - b[:, None] * u + _GL_LOGW
    top = f.max(axis=1)
    return top + np.log(np.exp(f - top[:, None]).sum(axis=1)) + np.log(np.maximum(half, 1e-300))


def _log_density(a, b, u):
    return np.log(np.maximum(u, 1e-300)) - a * u * u - b * u


def _draw_sqrt_continuous(a, b, u, tol):
    """Inverse-CDF draw of ``u`` with density proportional to u exp(-a u^2 - b u) on [0, inf).

    Cell masses come from 8-point Gauss-Legendre; inside the chosen cell the CDF
    is inverted by Newton steps safeguarded with bisection.
    """
    m = len(a)
    top = np.maximum(-b / (2 * a), 0.0) + 9.0 / np.sqrt(a)
    edges = np.linspace(0.0, 1.0, CELLS + 1)[None, :] * top[:, None]
    lo, hi = edges[:, :-1].ravel(), edges[:, 1:].ravel()
    logm = _cell_log_mass(np.repeat(a, CELLS), np.repeat(b, CELLS), lo, hi).reshape(m, CELLS)
    mass = np.exp(logm - logm.max(axis=1, keepdims=True))
    cdf = np.cumsum(mass, axis=1)
    target = u * cdf[:, -1]
    cell = np.minimum((cdf < target[:, None]).sum(axis=1), CELLS - 1)
    rows = np.arange(m)
    before = np.where(cell > 0, cdf[rows, np.maximum(cell - 1, 0)], 0.0)
    need = np.clip((target - before) / mass[rows, cell], 0.0, 1.0)
    c_lo, c_hi = edges[rows, cell], edges[rows, cell + 1]
    log_cell = logm[rows, cell]
    left, right = c_lo.copy(), c_hi.copy()
    x = c_lo + need * (c_hi - c_lo)
    for _ in range(100):
        part = np.exp(_cell_log_mass(a, b, c_lo, x) - log_cell) - need
        left = np.where(part < 0, x, left)
        right = np.where(part < 0, right, x)
        dens = np.exp(_log_density(a, b, x) - log_cell)
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = x - part / dens
        bad = ~np.isfinite(nxt) | (nxt < left) | (nxt > right)
        nxt = np.where(bad, (left + right) / 2, nxt)
        done = (~bad & (np.abs(nxt - x) <= tol)) | (right - left <= tol)
        x = nxt
        if np.all(done):
            break
    return x


def _gibbs(model, M, n, cfg):
    fam = model.family
    kinds = model.domain.kinds
    if fam == "restricted_pairwise" and any(k in ("nonneg", "real") for k in kinds):
        raise SamplerError("Gibbs sampling of continuous restricted_pairwise coordinates is not supported")
    chains = min(cfg.chains, n)
    per_chain = -(-n // chains)
    steps = cfg.burn_in + per_chain * cfg.thin
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(chains)]
    if cfg.init is not None:
        x0 = np.asarray(cfg.init, dtype=float).reshape(1, -1)
        model.domain.check(x0)
        X = np.repeat(x0, chains, axis=0)
    else:
        X = np.zeros((chains, model.p))
    out = np.zeros((chains, per_chain, model.p))
    theta = model.space.to_vector(M)
    kept = 0
    for step in range(1, steps + 1):
        # two uniforms per coordinate: value and (Laplace) sign
        U = np.stack([r.random(2 * model.p) for r in rngs])
        for j, kind in enumerate(kinds):
            u, v = U[:, 2 * j], U[:, 2 * j + 1]
            if fam in SQRT_FAMILIES or fam == "naive_poisson":
                a = np.full(chains, M[j, j])
                b = _interaction(M, X, j, fam)
                if kind == "count":
                    if fam == "naive_poisson":
                        # T_jj = x_j and x_j x_k interactions: linear in x_j
                        a, b = a + b, np.zeros(chains)
                    X[:, j] = _draw_discrete(_count_support(a, b, cfg.count_cap), u)
                else:
                    if np.any(a <= 0):
                        raise SamplerError(f"conditional of coordinate {j} is not integrable (M_jj <= 0)")
                    r = _draw_sqrt_continuous(a, b, u, cfg.grid_tol)
                    x = r * r
                    if kind == "real":
                        x = np.where(v < 0.5, -x, x)
                    X[:, j] = x
            else:
                X[:, j] = _draw_discrete(_generic_logits(model, theta, X, j, kind, cfg), u)
        if step > cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
            out[:, kept] = X
            kept += 1
    return out.reshape(-1, model.p)[:n]


def _generic_logits(model, theta, X, j, kind, cfg):
    """Conditional logits over the support of a discrete coordinate, from the full density."""
    if kind == "binary":
        support = np.arange(2.0)
    elif kind == "finite":
        support = np.arange(float(model.domain.sizes[j]))
    else:
        support = None
        N = COUNT_START
        while support is None:
            cand = np.arange(N + 1.0)
            logits = _logits_at(model, theta, X, j, cand)
            edge = logits[:, -1] - logits.max(axis=1)
            if np.all(edge < math.log(COUNT_TAIL)):
                return logits
            if N >= cfg.count_cap:
                raise SamplerError(f"count conditional not resolved within count_cap={cfg.count_cap}")
            N = min(2 * N, cfg.count_cap)
    return _logits_at(model, theta, X, j, support)


def _logits_at(model, theta, X, j, support):
    c, K = len(X), len(support)
    cand = np.repeat(X[:, None, :], K, axis=1)
    cand[:, :, j] = support[None, :]
    flat = cand.reshape(-1, model.p)
    vals = model.log_base(flat) - model.features(flat) @ theta
    return vals.reshape(c, K)


def node_conditional_logpdf(model: TraceModel, M, j: int, x) -> float:
    """Unnormalized log conditional density of coordinate ``j`` given the rest.

    Normalized so that the value at ``x_j = 0`` is zero.
    """
    x = np.asarray(x, dtype=float).reshape(1, -1)
    model.domain.check(x)
    M = np.asarray(M, dtype=float)
    if not 0 <= j < model.p:
        raise ConfigError(f"coordinate {j} out of range")
    if model.family == "mixture_gaussian_binary" and j == model.p - 1:
        raise ConfigError("the mixture indicator has no node conditional of this form")
    x0 = x.copy()
    x0[0, j] = 0.0

    def logf(y):
        T = model.stat(y)[0]
        return float(model.log_base(y)[0] - np.sum(M * T))

    return logf(x) - logf(x0)

