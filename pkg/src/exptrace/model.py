"""Model families: domains, sufficient statistics, base terms and parameter spaces.

Every family is an exponential trace model

    f_M(x) = exp(-<M, T(x)> + xi(x) - gamma(M)),

with ``<A, B> = sum_ij A_ij B_ij``.  A :class:`TraceModel` bundles the domain,
the statistic map ``T`` (vectorised over rows), the log base term ``xi`` and the
parameter space.  Indices are 0-based throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, DomainError

KINDS = ("binary", "finite", "count", "nonneg", "real")
DISCRETE_KINDS = ("binary", "finite", "count")
CONTINUOUS_KINDS = ("nonneg", "real")

FAMILIES = (
    "gaussian",
    "nonparanormal",
    "ising",
    "multinomial_ising",
    "poisson_sqrt",
    "exponential_sqrt",
    "laplace_sqrt",
    "composite_sqrt",
    "mixture_gaussian_binary",
    "restricted_pairwise",
)
# Diagnostic only: Poisson nodes with product interactions x_i x_j.
DIAGNOSTIC_FAMILIES = ("naive_poisson",)

# Families whose statistic uses square roots of coordinate products.
SQRT_FAMILIES = ("poisson_sqrt", "exponential_sqrt", "laplace_sqrt", "composite_sqrt")
# Families with T_ij depending only on (x_i, x_j).
PAIRWISE_FAMILIES = tuple(
    f for f in FAMILIES + DIAGNOSTIC_FAMILIES
    if f not in ("mixture_gaussian_binary", "restricted_pairwise")
)

PD_TOL = 1e-10
SYM_TOL = 1e-10


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """Per-coordinate kinds plus an optional whole-vector constraint.

    ``sizes[j]`` is the number of levels of a ``finite`` coordinate and ``None``
    otherwise.  ``constraint`` maps an ``(n, p)`` array to a boolean ``(n,)``
    mask; ``constraint_name`` describes it in error messages.
    """

    kinds: tuple
    sizes: tuple = ()
    constraint: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    constraint_name: str = ""

    def __post_init__(self):
        if len(self.kinds) < 1:
            raise ConfigError("domain needs at least one coordinate")
        for k in self.kinds:
            if k not in KINDS:
                raise ConfigError(f"unknown coordinate kind {k!r}")
        if not self.sizes:
            object.__setattr__(self, "sizes", tuple(None for _ in self.kinds))
        if len(self.sizes) != len(self.kinds):
            raise ConfigError("sizes must match kinds")
        for k, s in zip(self.kinds, self.sizes):
            if k == "finite" and (s is None or s < 2):
                raise ConfigError("finite coordinates need at least 2 levels")

    @property
    def p(self) -> int:
        return len(self.kinds)

    @property
    def is_finite(self) -> bool:
        return all(k in ("binary", "finite") for k in self.kinds)

    def coords_of(self, *kinds) -> list:
        return [j for j, k in enumerate(self.kinds) if k in kinds]

    def violations(self, X: np.ndarray) -> np.ndarray:
        """Return a boolean ``(n, p)`` array flagging out-of-domain entries.

        Whole-row constraint failures are flagged in every column of the row.
        """
        X = np.asarray(X, dtype=float)
        bad = ~np.isfinite(X)
        for j, (kind, size) in enumerate(zip(self.kinds, self.sizes)):
            col = X[:, j]
            with np.errstate(invalid="ignore"):
                if kind == "binary":
                    bad[:, j] |= ~((col == 0) | (col == 1))
                elif kind == "finite":
                    bad[:, j] |= ~((col == np.round(col)) & (col >= 0) & (col <= size - 1))
                elif kind == "count":
                    bad[:, j] |= ~((col == np.round(col)) & (col >= 0))
                elif kind == "nonneg":
                    bad[:, j] |= ~(col >= 0)
        if self.constraint is not None:
            ok_rows = ~bad.any(axis=1)
            rows = np.zeros(len(X), dtype=bool)
            if ok_rows.any():
                rows[ok_rows] = ~np.asarray(self.constraint(X[ok_rows]), dtype=bool)
            bad[rows, :] = True
        return bad

    def contains(self, x) -> bool:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x.shape[1] == self.p and not self.violations(x).any()

    def check(self, X: np.ndarray) -> None:
        """Raise :class:`DomainError` naming the first offending row and column."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise DomainError(f"expected rows of length {self.p}, got shape {X.shape}")
        bad = self.violations(X)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            if bad[i].all() and self.constraint is not None and X.shape[1] > 1:
                raise DomainError(
                    f"row {i} violates the {self.constraint_name or 'structural'} constraint",
                    row=int(i),
                )
            raise DomainError(
                f"value {X[i, j]!r} in row {i}, column {j} is not a valid "
                f"{self.kinds[j]} value",
                row=int(i),
                column=int(j),
            )


# ---------------------------------------------------------------------------
# Parameter spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    """Outcome of a membership check; truthy iff ``ok``."""

    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class ParameterSpace:
    """Affine subspace of q x q matrices, optionally intersected with the PD cone.

    Free coordinates are the representatives ``(i, j)`` with ``i <= j`` (or all
    entries for asymmetric spaces) that are not masked, in row-major order.  Each
    representative owns an *orbit*: the matrix entries it controls.
    """

    q: int
    symmetric: bool = True
    zero_mask: frozenset = frozenset()
    require_pd: bool = False

    def __post_init__(self):
        if self.q < 1:
            raise ConfigError("q must be >= 1")
        mask = frozenset((int(i), int(j)) for i, j in self.zero_mask)
        for i, j in mask:
            if not (0 <= i < self.q and 0 <= j < self.q):
                raise ConfigError(f"mask entry {(i, j)} out of range")
        if self.symmetric:
            mask = mask | frozenset((j, i) for i, j in mask)
        object.__setattr__(self, "zero_mask", mask)

    @cached_property
    def orbits(self) -> tuple:
        out = []
        for i in range(self.q):
            for j in range(self.q):
                if (i, j) in self.zero_mask:
                    continue
                if self.symmetric:
                    if i > j:
                        continue
                    out.append(((i, j),) if i == j else ((i, j), (j, i)))
                else:
                    out.append(((i, j),))
        return tuple(out)

    @cached_property
    def free_coords(self) -> tuple:
        return tuple(orb[0] for orb in self.orbits)

    @property
    def d(self) -> int:
        return len(self.orbits)

    @cached_property
    def multiplicity(self) -> np.ndarray:
        return np.array([len(orb) for orb in self.orbits], dtype=float)

    @cached_property
    def aggregator(self) -> np.ndarray:
        """``(d, q*q)`` 0/1 matrix summing matrix entries over each orbit."""
        A = np.zeros((self.d, self.q * self.q))
        for k, orb in enumerate(self.orbits):
            for i, j in orb:
                A[k, i * self.q + j] = 1.0
        return A

    @cached_property
    def _index(self) -> dict:
        return {ij: k for k, orb in enumerate(self.orbits) for ij in orb}

    def coord_index(self, i: int, j: int) -> int:
        """Free-coordinate index owning entry ``(i, j)``; raises if masked."""
        try:
            return self._index[(i, j)]
        except KeyError:
            raise ConfigError(f"entry ({i}, {j}) is not a free coordinate") from None

    def is_free(self, i: int, j: int) -> bool:
        return (i, j) in self._index

    def to_vector(self, M) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        return np.array([M[i, j] for i, j in self.free_coords])

    def to_matrix(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        M = np.zeros((self.q, self.q))
        for t, orb in zip(theta, self.orbits):
            for i, j in orb:
                M[i, j] = t
        return M

    def aggregate(self, G) -> np.ndarray:
        """Sum a q x q matrix over orbits (chain rule through the constraints)."""
        return self.aggregator @ np.asarray(G, dtype=float).ravel()

    def expand(self, v) -> np.ndarray:
        """Spread per-orbit totals evenly back over the orbit's entries."""
        per_entry = np.asarray(v, dtype=float) / self.multiplicity
        return (self.aggregator.T @ per_entry).reshape(self.q, self.q)

    def projected_norm(self, g) -> float:
        """Trace norm of the matrix whose orbit-aggregated version is ``g``."""
        g = np.asarray(g, dtype=float)
        return float(np.sqrt(np.sum(g * g / self.multiplicity)))

    def contains(self, M) -> Verdict:
        M = np.asarray(M, dtype=float)
        if M.shape != (self.q, self.q):
            return Verdict(False, f"expected a {self.q}x{self.q} matrix, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            return Verdict(False, "matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(M))))
        if self.symmetric and np.max(np.abs(M - M.T)) > SYM_TOL * scale:
            return Verdict(False, "matrix is not symmetric")
        for i, j in sorted(self.zero_mask):
            if abs(M[i, j]) > SYM_TOL * scale:
                return Verdict(False, f"entry ({i}, {j}) must be zero")
        if self.require_pd:
            lam = np.linalg.eigvalsh((M + M.T) / 2)
            if lam[0] <= PD_TOL:
                return Verdict(False, f"not positive definite (min eigenvalue {lam[0]:.3g})")
        return Verdict(True)


# ---------------------------------------------------------------------------
# Non-paranormal transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transform:
    """Monotone differentiable map g with derivative and (optional) inverse."""

    name: str
    forward: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    derivative: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    params: tuple = ()

    def to_config(self) -> dict:
        if self.name == "identity":
            return {"kind": "identity"}
        if self.name == "affine":
            return {"kind": "affine", "a": self.params[0], "b": self.params[1]}
        return {"kind": self.name}


def identity_transform() -> Transform:
    return Transform(
        "identity",
        forward=lambda x: np.asarray(x, dtype=float),
        derivative=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        inverse=lambda z: np.asarray(z, dtype=float),
    )


def affine_transform(a: float, b: float = 0.0) -> Transform:
    a, b = float(a), float(b)
    if a == 0:
        raise ConfigError("affine transform needs a != 0 to be monotone")
    return Transform(
        "affine",
        forward=lambda x: a * np.asarray(x, dtype=float) + b,
        derivative=lambda x: np.full_like(np.asarray(x, dtype=float), a),
        inverse=lambda z: (np.asarray(z, dtype=float) - b) / a,
        params=(a, b),
    )


def _check_monotone(t: Transform) -> None:
    grid = np.linspace(-10.0, 10.0, 401)
    with np.errstate(all="ignore"):
        der = np.asarray(t.derivative(grid), dtype=float)
        vals = np.asarray(t.forward(grid), dtype=float)
    if not (np.all(der > 0) or np.all(der < 0)):
        raise ConfigError(f"transform {t.name!r} is not strictly monotone (derivative changes sign)")
    steps = np.diff(vals)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ConfigError(f"transform {t.name!r} is not strictly monotone")


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TraceModel:
    """One exponential trace model family instance.

    ``stat_fn`` maps an ``(n, p)`` array of observations to the ``(n, q, q)``
    statistics and ``log_base_fn`` to the ``(n,)`` base terms.  Statistics are
    symmetric for symmetric spaces and vanish on masked entries, so moments of
    ``T`` are recoverable from moments over the free coordinates.
    """

    family: str
    p: int
    q: int
    domain: DomainSpec
    space: ParameterSpace
    stat_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    log_base_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    transforms: Optional[tuple] = field(default=None, repr=False)
    options: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def stat(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.stat_fn(X)

    def log_base(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.log_base_fn(X)

    def features(self, X) -> np.ndarray:
        """``(n, d)`` statistics summed over each free coordinate's orbit."""
        T = self.stat(X)
        return T.reshape(len(T), -1) @ self.space.aggregator.T

    @property
    def block_size(self) -> Optional[int]:
        if self.family == "multinomial_ising":
            return self.options["m"] - 1
        return None

    def encode(self, raw) -> np.ndarray:
        """Map user-facing rows to model observations (one-hot for multinomial)."""
        raw = np.atleast_2d(np.asarray(raw, dtype=float))
        if self.family != "multinomial_ising":
            return raw
        return encode_multinomial(raw, self.options["m"])

    def decode(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.family != "multinomial_ising":
            return X
        return decode_multinomial(X, self.options["m"])

    @property
    def raw_kinds(self) -> tuple:
        """Coordinate kinds of the user-facing representation."""
        if self.family == "multinomial_ising":
            return ("finite",) * self.options["l"]
        return self.domain.kinds

    def to_config(self) -> dict:
        cfg = {"family": self.family}
        cfg.update(self.options)
        if self.transforms is not None:
            cfg["transforms"] = [t.to_config() for t in self.transforms]
        return cfg


def encode_multinomial(Y, m: int) -> np.ndarray:
    """One-hot encode levels ``0..m-1`` into ``m-1`` indicators per coordinate.

    Level 0 is the reference: it maps to all-zero indicators.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, l = Y.shape
    bad = ~((Y == np.round(Y)) & (Y >= 0) & (Y <= m - 1))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DomainError(
            f"value {Y[i, j]!r} in row {i}, column {j} is not a level in 0..{m - 1}",
            row=int(i), column=int(j),
        )
    X = np.zeros((n, l * (m - 1)))
    for j in range(l):
        for r in range(1, m):
            X[:, j * (m - 1) + r - 1] = Y[:, j] == r
    return X


def decode_multinomial(X, m: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    l = p // (m - 1)
    blocks = X.reshape(n, l, m - 1)
    return (blocks * np.arange(1, m)).sum(axis=2)


def _outer(X):
    return X[:, :, None] * X[:, None, :]


def _zeros_base(X):
    return np.zeros(len(X))


def _factorial_base(count_cols):
    def base(X):
        return -gammaln(X[:, count_cols] + 1.0).sum(axis=1)
    return base


def _require_int(name, value, minimum):
    if value is None or int(value) != value or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _pairwise_model(family, kinds, stat_fn, log_base_fn, require_pd, sizes=(),
                    options=None, mask=frozenset(), constraint=None, constraint_name="",
                    transforms=None):
    p = len(kinds)
    domain = DomainSpec(tuple(kinds), tuple(sizes), constraint, constraint_name)
    space = ParameterSpace(p, symmetric=True, zero_mask=frozenset(mask), require_pd=require_pd)
    return TraceModel(family, p, p, domain, space, stat_fn, log_base_fn,
                      transforms=transforms, options=dict(options or {}))


def gaussian(p: int) -> TraceModel:
    p = _require_int("p", p, 1)
    return _pairwise_model("gaussian", ["real"] * p, lambda X: 0.5 * _outer(X),
                           _zeros_base, True, options={"p": p})


def nonparanormal(p: int, transforms: Optional[Sequence[Transform]] = None) -> TraceModel:
    p = _require_int("p", p, 1)
    if transforms is None:
        transforms = [identity_transform() for _ in range(p)]
    transforms = tuple(transforms)
    if len(transforms) != p:
        raise ConfigError(f"need {p} transforms, got {len(transforms)}")
    for t in transforms:
        _check_monotone(t)

    def g(X):
        return np.column_stack([t.forward(X[:, j]) for j, t in enumerate(transforms)])

    def stat(X):
        return 0.5 * _outer(g(X))

    def base(X):
        cols = [np.log(np.abs(t.derivative(X[:, j]))) for j, t in enumerate(transforms)]
        return np.sum(cols, axis=0)

    return _pairwise_model("nonparanormal", ["real"] * p, stat, base, True,
                           options={"p": p}, transforms=transforms)


def ising(p: int) -> TraceModel:
    p = _require_int("p", p, 1)
    return _pairwise_model("ising", ["binary"] * p, _outer, _zeros_base, False, options={"p": p})


def multinomial_ising(l: int, m: int) -> TraceModel:
    l = _require_int("l", l, 1)
    m = _require_int("m", m, 2)
    b = m - 1
    p = l * b
    # Off-diagonal entries within an encoding block are masked; the diagonal stays free.
    mask = {(i, j) for i in range(p) for j in range(p) if i != j and i // b == j // b}

    def one_hot(X):
        return (X.reshape(len(X), l, b).sum(axis=2) <= 1).all(axis=1)

    return _pairwise_model("multinomial_ising", ["binary"] * p, _outer, _zeros_base, False,
                           options={"l": l, "m": m}, mask=mask, constraint=one_hot,
                           constraint_name="one-hot block")


def _sqrt_stat(X):
    R = np.sqrt(np.abs(X))
    return _outer(R)


def poisson_sqrt(p: int) -> TraceModel:
    p = _require_int("p", p, 1)
    return _pairwise_model("poisson_sqrt", ["count"] * p, _sqrt_stat,
                           _factorial_base(list(range(p))), False, options={"p": p})


def exponential_sqrt(p: int) -> TraceModel:
    p = _require_int("p", p, 1)
    return _pairwise_model("exponential_sqrt", ["nonneg"] * p, _sqrt_stat, _zeros_base, True,
                           options={"p": p})


def laplace_sqrt(p: int) -> TraceModel:
    p = _require_int("p", p, 1)
    return _pairwise_model("laplace_sqrt", ["real"] * p, _sqrt_stat, _zeros_base, True,
                           options={"p": p})


def composite_sqrt(p1: int, p2: int) -> TraceModel:
    p1 = _require_int("p1", p1, 1)
    p2 = _require_int("p2", p2, 1)
    kinds = ["count"] * p1 + ["nonneg"] * p2
    return _pairwise_model("composite_sqrt", kinds, _sqrt_stat,
                           _factorial_base(list(range(p1))), True,
                           options={"p1": p1, "p2": p2})


def naive_poisson(p: int) -> TraceModel:
    """Poisson nodes with product interactions; only for integrability diagnostics."""
    p = _require_int("p", p, 1)

    def stat(X):
        T = _outer(X)
        idx = np.arange(p)
        T[:, idx, idx] = X
        return T

    return _pairwise_model("naive_poisson", ["count"] * p, stat,
                           _factorial_base(list(range(p))), False, options={"p": p})


def mixture_gaussian_binary(p: int) -> TraceModel:
    """Gaussian ``y`` in R^(p-1) whose precision switches with a binary ``z``.

    Observations are ``(y, z)``; ``M = diag(M1, M2)`` with ``M1`` active for
    ``z = 0`` and ``M2`` for ``z = 1``.
    """
    p = _require_int("p", p, 2)
    k = p - 1
    q = 2 * k
    mask = {(i, j) for i in range(q) for j in range(q) if (i < k) != (j < k)}

    def stat(X):
        y, z = X[:, :k], X[:, k]
        S = 0.5 * _outer(y)
        T = np.zeros((len(X), q, q))
        T[:, :k, :k] = S * (z == 0)[:, None, None]
        T[:, k:, k:] = S * (z == 1)[:, None, None]
        return T

    domain = DomainSpec(tuple(["real"] * k + ["binary"]))
    space = ParameterSpace(q, symmetric=True, zero_mask=frozenset(mask), require_pd=True)
    return TraceModel("mixture_gaussian_binary", p, q, domain, space, stat, _zeros_base,
                      options={"p": p})


def restricted_pairwise(p: int, active_set, kinds="binary", covariate_log_base=None,
                        response_log_base=None) -> TraceModel:
    """Pairwise interactions restricted to an active set of pairs.

    Only the entries in ``active_set`` (symmetrised) and the diagonal are free;
    ``T_ij = x_i x_j`` there and zero elsewhere.  The base term is
    ``covariate_log_base(x[:-1]) + response_log_base(x[-1])`` with both
    callables vectorised over rows and defaulting to zero.
    """
    p = _require_int("p", p, 2)
    if isinstance(kinds, str):
        kinds = [kinds] * p
    kinds = list(kinds)
    if len(kinds) != p:
        raise ConfigError(f"need {p} coordinate kinds, got {len(kinds)}")
    pairs = set()
    for pair in active_set:
        i, j = (int(v) for v in pair)
        if i == j or not (0 <= i < p and 0 <= j < p):
            raise ConfigError(f"invalid active pair {pair!r}")
        pairs |= {(i, j), (j, i)}
    support = np.eye(p, dtype=bool)
    for i, j in pairs:
        support[i, j] = True
    mask = {(i, j) for i in range(p) for j in range(p) if not support[i, j]}

    def stat(X):
        return _outer(X) * support

    def base(X):
        out = np.zeros(len(X))
        if covariate_log_base is not None:
            out = out + np.asarray(covariate_log_base(X[:, :-1]), dtype=float)
        if response_log_base is not None:
            out = out + np.asarray(response_log_base(X[:, -1]), dtype=float)
        return out

    options = {"p": p, "active_set": sorted([i, j] for i, j in pairs if i < j), "kinds": kinds}
    return _pairwise_model("restricted_pairwise", kinds, stat, base, False, options=options,
                           mask=mask)


_BUILDERS = {
    "gaussian": gaussian,
    "nonparanormal": nonparanormal,
    "ising": ising,
    "multinomial_ising": multinomial_ising,
    "poisson_sqrt": poisson_sqrt,
    "exponential_sqrt": exponential_sqrt,
    "laplace_sqrt": laplace_sqrt,
    "composite_sqrt": composite_sqrt,
    "mixture_gaussian_binary": mixture_gaussian_binary,
    "restricted_pairwise": restricted_pairwise,
    "naive_poisson": naive_poisson,
}


def _transform_from_config(cfg) -> Transform:
    if isinstance(cfg, Transform):
        return cfg
    kind = cfg.get("kind", "identity")
    if kind == "identity":
        return identity_transform()
    if kind == "affine":
        return affine_transform(cfg.get("a", 1.0), cfg.get("b", 0.0))
    raise ConfigError(f"unknown transform kind {kind!r}")


def build_model(config, **kwargs) -> TraceModel:
    """Construct a model from a family tag plus options.

    Accepts either ``build_model("ising", p=3)`` or a configuration mapping such
    as ``{"family": "multinomial_ising", "l": 2, "m": 3}``.  Indices in
    ``active_set`` are 0-based here.
    """
    if isinstance(config, str):
        cfg = {"family": config, **kwargs}
    else:
        cfg = {**dict(config), **kwargs}
    family = cfg.pop("family", None)
    if family not in _BUILDERS:
        raise ConfigError(f"unknown family {family!r}; expected one of {FAMILIES}")
    cfg.pop("strategy", None)
    if family == "nonparanormal" and cfg.get("transforms") is not None:
        cfg["transforms"] = [_transform_from_config(t) for t in cfg["transforms"]]
    builder = _BUILDERS[family]
    try:
        return builder(**cfg)
    except TypeError as exc:
        raise ConfigError(f"bad options for {family}: {exc}") from None


# ---------------------------------------------------------------------------
# Evaluation helpers
# ---------------------------------------------------------------------------


def _single(model: TraceModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    model.domain.check(x)
    return x


def evaluate_stat(model: TraceModel, x) -> np.ndarray:
    """``T(x)`` as a q x q matrix; raises :class:`DomainError` outside the domain."""
    return model.stat(_single(model, x))[0]


def evaluate_log_base(model: TraceModel, x) -> float:
    """The base term ``xi(x)``."""
    return float(model.log_base(_single(model, x))[0])


def validate_parameter(model: TraceModel, M) -> Verdict:
    """Check symmetry, the zero mask and (if required) positive definiteness."""
    return model.space.contains(M)


def trace_inner(A, B) -> float:
    return float(np.sum(np.asarray(A) * np.asarray(B)))


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """n observations of a model, validated against its domain."""

    rows: np.ndarray

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, Dataset) and np.array_equal(self.rows, other.rows)


def as_dataset(model: TraceModel, data) -> Dataset:
    rows = data.rows if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    rows = np.atleast_2d(rows).astype(float)
    if rows.size == 0 or rows.shape[0] == 0:
        raise DomainError("dataset is empty")
    model.domain.check(rows)
    return Dataset(rows)


def log_factorial(x) -> np.ndarray:
    return gammaln(np.asarray(x, dtype=float) + 1.0)


__all__ = [
    "DomainSpec", "ParameterSpace", "TraceModel", "Transform", "Verdict", "Dataset",
    "build_model", "evaluate_stat", "evaluate_log_base", "validate_parameter", "as_dataset",
    "identity_transform", "affine_transform", "encode_multinomial", "decode_multinomial",
    "trace_inner", "FAMILIES", "SQRT_FAMILIES", "PAIRWISE_FAMILIES",
]
