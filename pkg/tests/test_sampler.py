import itertools
import math

import numpy as np
import pytest

from exptrace import (ConfigError, ParameterError, SamplerConfig, SamplerError, build_model,
                      moments, node_conditional_logpdf, sample)
from exptrace.normalizer import EvalStrategy, _build_grid, _materialized

FAST = SamplerConfig(seed=5, burn_in=200, thin=2, chains=50)


def enumerated_probs(model, M):
    X, lw, Phi = _materialized(model, _build_grid(model, M, EvalStrategy("enumerate"), {}))
    w = np.exp(lw - Phi @ model.space.to_vector(M))
    return X, w / w.sum()


def batch_means_se(values, chains):
    """Standard error from per-chain means (rows are ordered by chain)."""
    per = values.reshape(chains, -1, *values.shape[1:]).mean(axis=1)
    return per.mean(axis=0), per.std(axis=0, ddof=1) / math.sqrt(chains)


class TestExact:
    def test_gaussian_covariance(self):
        X = sample(build_model("gaussian", p=2), np.eye(2), 10_000, SamplerConfig(seed=1)).rows
        assert np.max(np.abs(np.cov(X.T) - np.eye(2))) < 0.05

    def test_ising_single(self):
        X = sample(build_model("ising", p=1), [[0.0]], 10_000, SamplerConfig(seed=2)).rows
        assert abs(X.mean() - 0.5) < 0.02

    def test_ising_frequencies(self):
        m = build_model("ising", p=3)
        M = np.array([[0.5, -0.7, 0.2], [-0.7, -0.3, 0.4], [0.2, 0.4, 0.1]])
        states, probs = enumerated_probs(m, M)
        n = 100_000
        X = sample(m, M, n, SamplerConfig(seed=3)).rows
        for s, p in zip(states, probs):
            freq = np.mean(np.all(X == s, axis=1))
            assert abs(freq - p) < 4 * math.sqrt(p * (1 - p) / n)

    def test_multinomial_exact(self):
        m = build_model("multinomial_ising", l=2, m=3)
        M = m.space.to_matrix(np.linspace(-0.5, 0.5, m.space.d))
        X = sample(m, M, 50_000, SamplerConfig(seed=4)).rows
        assert m.domain.contains(X)
        states, probs = enumerated_probs(m, M)
        for s, p in zip(states, probs):
            freq = np.mean(np.all(X == s, axis=1))
            assert abs(freq - p) < 4 * math.sqrt(p * (1 - p) / len(X))

    def test_mixture_moments(self):
        m = build_model("mixture_gaussian_binary", p=3)
        M = np.diag([1.0, 2.0, 0.5, 0.8])
        M[0, 1] = M[1, 0] = 0.4
        X = sample(m, M, 100_000, SamplerConfig(seed=6)).rows
        T = m.stat(X).reshape(len(X), -1)
        ref = moments(m, M).mean_stat.ravel()
        se = T.std(axis=0) / math.sqrt(len(X))
        assert np.all(np.abs(T.mean(0) - ref) <= 4 * se + 1e-12)

    def test_nonparanormal_inverse(self):
        m = build_model({"family": "nonparanormal", "p": 1,
                         "transforms": [{"kind": "affine", "a": 2.0, "b": 1.0}]})
        X = sample(m, [[1.0]], 20_000, SamplerConfig(seed=7)).rows
        # g(x) = 2x + 1 is standard normal, so x ~ N(-1/2, 1/4)
        assert abs(X.mean() + 0.5) < 0.02 and abs(X.std() - 0.5) < 0.02

    def test_determinism(self):
        m = build_model("poisson_sqrt", p=2)
        M = np.array([[0.5, 0.2], [0.2, 1.0]])
        a = sample(m, M, 300, FAST)
        b = sample(m, M, 300, FAST)
        assert a == b


class TestGibbs:
    def test_poisson_independent_means(self):
        m = build_model("poisson_sqrt", p=2)
        X = sample(m, np.diag([0.5, 1.0]), 20_000, FAST).rows
        mean, se = batch_means_se(X, 50)
        assert np.all(np.abs(mean - np.exp([-0.5, -1.0])) < 3 * se)

    def test_poisson_coupled_moments(self):
        m = build_model("poisson_sqrt", p=2)
        M = np.array([[0.5, 0.2], [0.2, 1.0]])
        X = sample(m, M, 20_000, FAST).rows
        mean, se = batch_means_se(m.stat(X), 50)
        ref = moments(m, M, "truncated_series").mean_stat
        assert np.all(np.abs(mean - ref) < 3 * se)

    @pytest.mark.parametrize("family,M", [
        ("exponential_sqrt", [[1.0, 0.3], [0.3, 0.8]]),
        ("exponential_sqrt", [[1.0, -0.4], [-0.4, 1.0]]),
        ("laplace_sqrt", [[1.0, -0.3], [-0.3, 1.2]]),
    ])
    def test_continuous_moments(self, family, M):
        m = build_model(family, p=2)
        M = np.array(M)
        X = sample(m, M, 10_000, FAST).rows
        mean, se = batch_means_se(m.stat(X), 50)
        ref = moments(m, M).mean_stat
        assert np.all(np.abs(mean - ref) < 3.5 * se)

    def test_composite_moments(self):
        m = build_model("composite_sqrt", p1=1, p2=1)
        M = np.array([[0.3, 0.2], [0.2, 1.0]])
        X = sample(m, M, 10_000, FAST).rows
        mean, se = batch_means_se(m.stat(X), 50)
        assert np.all(np.abs(mean - moments(m, M).mean_stat) < 3.5 * se)

    def test_naive_poisson_negative_interaction(self):
        m = build_model("naive_poisson", p=2)
        M = np.array([[0.0, 0.3], [0.3, 0.0]])
        X = sample(m, M, 10_000, FAST).rows
        mean, se = batch_means_se(m.stat(X), 50)
        assert np.all(np.abs(mean - moments(m, M).mean_stat) < 3.5 * se)

    def test_count_cap(self):
        m = build_model("poisson_sqrt", p=1)
        with pytest.raises(SamplerError):
            sample(m, [[-6.0]], 10, SamplerConfig(count_cap=64, burn_in=1, thin=1))

    def test_domain_membership(self):
        m = build_model("laplace_sqrt", p=3)
        X = sample(m, np.eye(3), 200, FAST).rows
        assert m.domain.contains(X) and np.any(X < 0)


class TestConditionals:
    def test_poisson_zero(self):
        assert node_conditional_logpdf(build_model("poisson_sqrt", p=2), np.eye(2), 0, [0, 5]) == 0

    def test_poisson_factorial(self):
        v = node_conditional_logpdf(build_model("poisson_sqrt", p=2), np.zeros((2, 2)), 0, [3, 1])
        assert v == pytest.approx(-math.log(6))

    def test_exponential(self):
        v = node_conditional_logpdf(build_model("exponential_sqrt", p=2),
                                    [[1, 0.2], [0.2, 1]], 0, [4, 1])
        assert v == pytest.approx(-4.8)

    def test_mixture_indicator_rejected(self):
        with pytest.raises(ConfigError):
            node_conditional_logpdf(build_model("mixture_gaussian_binary", p=2), np.eye(2), 1, [0.3, 1])

    def test_matches_enumerated_conditional(self):
        m = build_model("ising", p=3)
        M = np.array([[0.5, -0.7, 0.2], [-0.7, -0.3, 0.4], [0.2, 0.4, 0.1]])
        states, probs = enumerated_probs(m, M)
        P = {tuple(s.astype(int)): p for s, p in zip(states, probs)}
        for rest in itertools.product((0, 1), repeat=2):
            x1 = (0,) + rest
            x0 = (1,) + rest
            lhs = node_conditional_logpdf(m, M, 0, x0)
            assert lhs == pytest.approx(math.log(P[x0] / P[x1]), abs=1e-12)


def test_rejects_infeasible():
    with pytest.raises(ParameterError):
        sample(build_model("gaussian", p=2), [[1, 2], [2, 1]], 10)
    with pytest.raises(ConfigError):
        SamplerConfig(thin=0)
