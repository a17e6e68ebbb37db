import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from exptrace import (ConfigError, FisherTensor, ParameterError, Restriction, build_model,
                      chi_square_sf, confidence_subgraph, edge_test, empirical_fisher, fit_mle,
                      holm, model_fisher, sample, wald_from_covariance, wald_statistic)
from exptrace.inference import subgraph_from_pvalues


def chi2_density_tail(w, m):
    c = 1 / (2 ** (m / 2) * math.gamma(m / 2))
    val, _ = integrate.quad(lambda x: c * x ** (m / 2 - 1) * math.exp(-x / 2), w, np.inf,
                            epsabs=1e-13)
    return val


@pytest.fixture(scope="module")
def ising_fit():
    m = build_model("ising", p=3)
    M = np.array([[0.2, -0.5, 0.0], [-0.5, 0.1, 0.3], [0.0, 0.3, -0.1]])
    X = sample(m, M, 2000).rows
    return m, X, fit_mle(m, X)


class TestFisher:
    def test_identical_rows(self):
        F = empirical_fisher(build_model("poisson_sqrt", p=2), [[1, 2]] * 5)
        assert np.all(F.matrix == 0)

    def test_two_point_variance(self):
        F = empirical_fisher(build_model("gaussian", p=1), [[0.0], [2.0]])
        assert F.matrix[0, 0] == pytest.approx(2.0)
        assert F.n == 2 and F.source == "empirical"

    def test_needs_two_rows(self):
        with pytest.raises(ConfigError):
            empirical_fisher(build_model("gaussian", p=1), [[1.0]])

    def test_gaussian_model_fisher(self):
        F = model_fisher(build_model("gaussian", p=1), [[1.0]])
        assert F.matrix[0, 0] == pytest.approx(0.5)

    def test_empirical_matches_isserlis(self, rng):
        m = build_model("gaussian", p=2)
        X = rng.normal(size=(50_000, 2))
        F = empirical_fisher(m, X)
        ref = model_fisher(m, np.eye(2)).matrix
        Phi = m.features(X)
        D = Phi - Phi.mean(0)
        prod = D[:, :, None] * D[:, None, :]
        se = prod.std(axis=0) / math.sqrt(len(X))
        assert np.all(np.abs(F.matrix - ref) < 3 * se + 1e-12)

    def test_ising_model_vs_empirical(self, rng):
        m = build_model("ising", p=2)
        M = np.array([[0.3, -0.4], [-0.4, 0.2]])
        X = sample(m, M, 1_000_000, ).rows
        F = empirical_fisher(m, X)
        ref = model_fisher(m, M, "enumerate").matrix
        Phi = m.features(X)
        D = Phi - Phi.mean(0)
        se = (D[:, :, None] * D[:, None, :]).std(axis=0) / math.sqrt(len(X))
        assert np.all(np.abs(F.matrix - ref) < 3 * se + 1e-12)

    def test_consistency_in_n(self):
        m = build_model("ising", p=2)
        M = np.array([[0.3, -0.4], [-0.4, 0.2]])
        ref = model_fisher(m, M, "enumerate").matrix
        X = sample(m, M, 100_000, ).rows
        dist = [np.max(np.abs(empirical_fisher(m, X[:n]).matrix - ref)) for n in (1000, 10_000, 100_000)]
        assert dist[0] > dist[1] > dist[2]

    def test_entry_tensor_expansion(self):
        m = build_model("gaussian", p=2)
        F = model_fisher(m, np.eye(2))
        T = F.entry_tensor()
        # Var(x1 x2 / 2) = 1/4 for independent standard normals
        assert T[0, 1, 0, 1] == pytest.approx(0.25)
        assert T[0, 1, 1, 0] == pytest.approx(0.25)

    @pytest.mark.parametrize("family,strategy", [("ising", "enumerate"),
                                                 ("poisson_sqrt", "truncated_series"),
                                                 ("gaussian", "closed_form")])
    def test_diagonal_truth_disjoint_blocks_vanish(self, family, strategy):
        m = build_model(family, p=3)
        M = np.diag([0.4, -0.2, 0.7]) if family != "gaussian" else np.diag([1.0, 2.0, 0.5])
        T = model_fisher(m, M, strategy).entry_tensor()
        for i, j, k, l in np.ndindex(3, 3, 3, 3):
            if not {i, j} & {k, l}:
                assert abs(T[i, j, k, l]) < 1e-10


class TestChiSquare:
    def test_zero(self):
        assert chi_square_sf(0.0, 3) == 1.0

    def test_one_dof_against_integration(self):
        assert chi_square_sf(3.841459, 1) == pytest.approx(0.05, abs=1e-4)
        for w in (0.1, 1.0, 3.841459, 10.0):
            assert abs(chi_square_sf(w, 1) - chi2_density_tail(w, 1)) < 1e-10

    def test_two_dof_closed_form(self):
        assert chi_square_sf(5.991465, 2) == pytest.approx(0.05, abs=1e-4)
        for w in (0.0, 0.5, 5.991465, 30.0):
            assert abs(chi_square_sf(w, 2) - math.exp(-w / 2)) < 1e-12

    @given(st.floats(0, 60), st.integers(1, 8))
    def test_against_integration(self, w, m):
        assert abs(chi_square_sf(w, m) - chi2_density_tail(w, m)) < 1e-9


class TestWald:
    def test_zero_restriction(self):
        r = wald_from_covariance([0.0], [[0.01]])
        assert r.statistic == 0.0 and r.p_value == 1.0

    def test_scalar(self):
        r = wald_from_covariance([0.3], [[0.01]])
        assert r.statistic == pytest.approx(9.0) and r.dof == 1
        assert r.p_value == pytest.approx(2 * norm.sf(3.0), abs=1e-10)

    def test_literal_simplified_form(self, ising_fit):
        m, X, fit = ising_fit
        M = fit.m_hat.copy()
        M[0, 1] = M[1, 0] = 0.5
        fit2 = dataclasses.replace(fit, m_hat=M)
        k = m.space.coord_index(0, 1)
        F = np.eye(m.space.d)
        F[k, k] = 4.0
        res = edge_test(fit2, FisherTensor(F, 1, "empirical", m.space), 0, 1, literal=True)
        assert res.statistic == pytest.approx(1.0)
        assert res.p_value == pytest.approx(2 * norm.sf(1.0), abs=1e-10)
        general = edge_test(fit2, FisherTensor(F, 1, "empirical", m.space), 0, 1)
        assert general.statistic == pytest.approx(1.0)

    def test_zero_entry(self, ising_fit):
        m, X, fit = ising_fit
        M = fit.m_hat.copy()
        M[0, 2] = M[2, 0] = 0.0
        res = edge_test(dataclasses.replace(fit, m_hat=M), empirical_fisher(m, X), 0, 2)
        assert res.statistic == 0.0 and res.p_value == 1.0

    def test_scaling_invariance(self, ising_fit):
        m, X, fit = ising_fit
        F = empirical_fisher(m, X)
        r = Restriction.entry_difference(0, 1, 1, 2, m.q)
        a = wald_statistic(fit, F, r)
        b = wald_statistic(fit, F, r.scaled(-7.5))
        assert a.statistic == pytest.approx(b.statistic, rel=1e-10)
        assert a.p_value == pytest.approx(b.p_value, rel=1e-10)

    def test_entry_set_dof(self, ising_fit):
        m, X, fit = ising_fit
        res = wald_statistic(fit, empirical_fisher(m, X),
                             Restriction.entry_set([(0, 1), (1, 2), (0, 2)], m.q))
        assert res.dof == 3 and 0 <= res.p_value <= 1

    def test_rank_deficient(self, ising_fit):
        m, X, fit = ising_fit
        from exptrace import InferenceError
        with pytest.raises(InferenceError):
            wald_statistic(fit, empirical_fisher(m, X), Restriction.entry_set([(0, 1), (1, 0)], m.q))

    def test_masked_entry(self):
        m = build_model("multinomial_ising", l=2, m=3)
        X = m.encode(np.random.default_rng(0).integers(0, 3, size=(300, 2)))
        fit = fit_mle(m, X)
        with pytest.raises(ParameterError):
            edge_test(fit, empirical_fisher(m, X), 0, 1)

    def test_to_dict(self):
        d = wald_from_covariance([0.3], [[0.01]], "M[1,2]").to_dict()
        assert set(d) == {"restriction", "W", "dof", "p"}


class TestHolm:
    def test_example(self):
        pv = {(0, 1): 0.01, (0, 2): 0.04, (1, 2): 0.03}
        sg = subgraph_from_pvalues(3, pv, 0.05)
        assert sg.graph.one_based() == {(1, 2), (2, 1)}

    def test_nothing_rejected(self):
        rej, adj = holm({(0, 1): 1.0, (1, 2): 1.0}, 0.05)
        assert rej == [] and all(v == 1.0 for v in adj.values())

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.floats(0.001, 0.5),
           st.floats(0.001, 0.5))
    def test_monotone_in_alpha(self, ps, a1, a2):
        a1, a2 = sorted((a1, a2))
        pv = {(i, i + 1): p for i, p in enumerate(ps)}
        r1, adj = holm(pv, a1)
        r2, _ = holm(pv, a2)
        assert set(r1) <= set(r2)
        assert all(adj[k] <= a1 + 1e-15 for k in r1)

    def test_subgraph_on_fit(self, ising_fit):
        m, X, fit = ising_fit
        sg = confidence_subgraph(fit, empirical_fisher(m, X), 0.05)
        assert (0, 1) in sg.graph.edges
        with pytest.raises(ConfigError):
            confidence_subgraph(fit, empirical_fisher(m, X), 1.5)
