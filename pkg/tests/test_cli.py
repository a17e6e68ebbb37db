import json

import numpy as np
import pytest

from exptrace import (DomainError, RunConfig, SamplerConfig, build_model, fit_mle, load_csv,
                      sample)
from exptrace.cli import run_command
from exptrace.io import (Report, format_csv, matrix_from_json, matrix_to_json, model_from_config,
                         model_to_config, parse_csv)

GAUSS = json.dumps({"family": "gaussian", "p": 3})
POISSON = json.dumps({"family": "poisson_sqrt", "p": 3})
ISING = json.dumps({"family": "ising", "p": 2})


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture
def gauss_csv(tmp_path):
    rng = np.random.default_rng(11)
    X = rng.standard_normal((300, 3)) @ np.array([[1, 0.4, 0], [0, 1, 0.3], [0, 0, 1]])
    return X, write(tmp_path, "g.csv", "a,b,c\n" + format_csv(build_model("gaussian", p=3), X))


@pytest.fixture
def poisson_csv(tmp_path):
    rng = np.random.default_rng(12)
    X = rng.poisson(np.exp([-0.3, -0.6, -0.1]), size=(400, 3))
    return write(tmp_path, "p.csv", format_csv(build_model("poisson_sqrt", p=3), X))


class TestCsv:
    def test_gaussian(self, tmp_path):
        ds = load_csv(write(tmp_path, "a.csv", "1,0\n0,1\n"), build_model("gaussian", p=2))
        assert ds.n == 2

    def test_ising_non_integer(self):
        with pytest.raises(DomainError, match="non-integer.*column 1") as exc:
            parse_csv("0.5,1\n", build_model("ising", p=2))
        assert (exc.value.row, exc.value.column) == (1, 1)

    def test_poisson_row(self):
        assert parse_csv("4,1\n", build_model("poisson_sqrt", p=2)).rows.tolist() == [[4, 1]]

    @pytest.mark.parametrize("text,row,column", [
        ("1,2\n3\n", 2, None),
        ("1,2\n3,x\n", 2, 2),
        ("1,2\n-1,0\n", 2, 1),
    ])
    def test_errors_locate_row(self, text, row, column):
        with pytest.raises(DomainError) as exc:
            parse_csv(text, build_model("poisson_sqrt", p=2))
        assert exc.value.row == row and exc.value.column == column

    @pytest.mark.parametrize("family,M", [
        ("gaussian", np.eye(2)),
        ("poisson_sqrt", np.array([[0.5, 0.2], [0.2, 1.0]])),
        ("laplace_sqrt", np.eye(2)),
        ("ising", np.zeros((2, 2))),
    ])
    def test_sample_round_trip(self, family, M):
        model = build_model(family, p=2)
        ds = sample(model, M, 200, SamplerConfig(seed=3, burn_in=20, thin=1, chains=4))
        assert parse_csv(format_csv(model, ds), model) == ds

    def test_multinomial_levels(self):
        model = build_model("multinomial_ising", l=2, m=3)
        ds = parse_csv("0,2\n1,1\n", model)
        assert parse_csv(format_csv(model, ds), model) == ds


class TestJson:
    def test_matrix(self):
        M = np.array([[1.0, -0.25], [-0.25, 2.0]])
        assert np.array_equal(matrix_from_json(json.loads(json.dumps(matrix_to_json(M)))), M)

    def test_model_config_one_based(self):
        cfg = {"family": "restricted_pairwise", "p": 3, "active_set": [[1, 2]]}
        assert model_to_config(model_from_config(cfg))["active_set"] == [[1, 2]]

    def test_report_round_trip(self):
        model = build_model("gaussian", p=2)
        fit = fit_mle(model, np.array([[1.0, 0.2], [0.1, 1.0], [-0.4, 0.3]]))
        rep = Report.from_fit(fit, RunConfig(model={"family": "gaussian", "p": 2}))
        assert Report.from_json(rep.to_json()) == rep

    def test_config_hash(self):
        base = RunConfig(model={"family": "ising", "p": 2}, alpha=0.05, seed=1, out="a")
        same = RunConfig(model={"family": "ising", "p": 2}, alpha=0.05, seed=1, out="b")
        assert base.config_hash() == same.config_hash()
        for change in ({"alpha": 0.1}, {"seed": 2}, {"model": {"family": "ising", "p": 3}},
                       {"strategy": {"kind": "enumerate"}}, {"data": "x.csv"}):
            other = RunConfig(**{**base.__dict__, **change})
            assert other.config_hash() != base.config_hash()


class TestCommands:
    def test_fit_gaussian_closed_form(self, tmp_path, gauss_csv):
        X, path = gauss_csv
        out = tmp_path / "out"
        assert run_command(["fit", "--model", GAUSS, "--data", path, "--out", str(out)]) == 0
        M = matrix_from_json(json.loads((out / "m_hat.json").read_text()))
        ref = np.linalg.inv(X.T @ X / len(X))
        assert np.max(np.abs(M - ref)) < 1e-8
        report = json.loads((out / "report.json").read_text())
        assert report["fit"]["converged"] and len(report["provenance"]["config_hash"]) == 64

    def test_subgraph_diagonal_has_no_edges(self, tmp_path, poisson_csv):
        out = tmp_path / "sg"
        code = run_command(["subgraph", "--model", POISSON, "--data", poisson_csv,
                            "--out", str(out), "--alpha", "0.05"])
        assert code == 0
        dot = (out / "graph.dot").read_text()
        assert "--" not in dot
        assert json.loads((out / "adjacency.json").read_text())["edges"] == []

    def test_test_command(self, tmp_path, poisson_csv, capsys):
        assert run_command(["test", "--model", POISSON, "--data", poisson_csv, "--edge", "1", "3"]) == 0
        res = json.loads(capsys.readouterr().out)
        assert res["dof"] == 1 and 0 <= res["p"] <= 1

    def test_eval_command(self, tmp_path, poisson_csv, capsys):
        params = json.dumps({"q": 3, "entries": np.eye(3).tolist()})
        assert run_command(["eval", "--model", POISSON, "--params", params,
                            "--data", poisson_csv]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["log_norm"] == pytest.approx(3 * np.exp(-1.0), rel=1e-9)
        assert set(out) == {"log_norm", "log_likelihood", "grad_norm"}

    def test_sample_then_fit_ising(self, tmp_path):
        M = np.array([[0.4, -0.6], [-0.6, -0.2]])
        out = tmp_path / "s"
        code = run_command(["sample", "--model", ISING, "--params", json.dumps(M.tolist()),
                            "--n", "5000", "--seed", "9", "--out", str(out)])
        assert code == 0
        data = str(out / "sample.csv")
        assert run_command(["fit", "--model", ISING, "--data", data, "--out", str(out)]) == 0
        M_hat = matrix_from_json(json.loads((out / "m_hat.json").read_text()))
        assert np.max(np.abs(M_hat - M)) < 0.15

    def test_sample_deterministic(self, capsys):
        argv = ["sample", "--model", ISING, "--params", "[[0,0],[0,0]]", "--n", "50", "--seed", "4"]
        run_command(argv)
        first = capsys.readouterr().out
        run_command(argv)
        assert capsys.readouterr().out == first


class TestExitCodes:
    def test_unknown_flag(self, capsys):
        assert run_command(["fit", "--model", GAUSS, "--data", "x.csv", "--bogus"]) == 1
        assert capsys.readouterr().err

    def test_unknown_command(self):
        assert run_command(["frobnicate"]) == 1

    def test_missing_data_file(self, tmp_path):
        assert run_command(["fit", "--model", GAUSS, "--data", str(tmp_path / "none.csv")]) == 1

    def test_bad_model_json(self, tmp_path, gauss_csv):
        assert run_command(["fit", "--model", "{not json", "--data", gauss_csv[1]]) == 1

    def test_unknown_family(self, gauss_csv):
        assert run_command(["fit", "--model", '{"family": "weibull", "p": 3}',
                            "--data", gauss_csv[1]]) == 1

    def test_domain_violation(self, tmp_path, capsys):
        path = write(tmp_path, "bad.csv", "0,1\n1,2\n")
        assert run_command(["fit", "--model", ISING, "--data", path]) == 1
        assert "row 2" in capsys.readouterr().err

    def test_bad_params(self):
        assert run_command(["eval", "--model", ISING, "--params", '{"q": 3, "entries": [[1]]}']) == 1

    def test_edge_out_of_range(self, poisson_csv):
        assert run_command(["test", "--model", POISSON, "--data", poisson_csv,
                            "--edge", "1", "9"]) == 1

    def test_bad_alpha(self, poisson_csv):
        assert run_command(["subgraph", "--model", POISSON, "--data", poisson_csv,
                            "--alpha", "1.5"]) == 1

    def test_nonexistent_mle(self, tmp_path, capsys):
        # a column of zeros drives the diagonal to +infinity
        path = write(tmp_path, "z.csv", "0,1\n0,0\n0,2\n0,1\n")
        code = run_command(["fit", "--model", '{"family": "poisson_sqrt", "p": 2}', "--data", path])
        assert code == 2
        assert "numerical failure" in capsys.readouterr().err

    def test_divergent_normalizer(self, capsys):
        # positive interaction a_12 = 0.1 enters as M_12 = -0.05
        params = "[[0, -0.05], [-0.05, 0]]"
        code = run_command(["eval", "--model", '{"family": "naive_poisson", "p": 2}',
                            "--params", params])
        assert code == 2

    def test_sampler_failure(self):
        code = run_command(["sample", "--model", '{"family": "poisson_sqrt", "p": 1}',
                            "--params", "[[-9]]", "--n", "5", "--burn-in", "1", "--thin", "1"])
        assert code == 2
