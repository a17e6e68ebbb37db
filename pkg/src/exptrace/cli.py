"""Command-line interface.

Exit status: 0 on success, 1 for usage or input errors, 2 for numerical
failures (non-existent MLE, divergent normalizer, sampler or test breakdown).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import (ConfigError, DomainError, InferenceError, NonExistenceError, NormalizerError,
                     ParameterError, SamplerError, StrategyError)
from .estimator import FitOptions, fit_mle, gradient, gram_matrix, log_likelihood
from .graph import export_dot, to_adjacency
from .inference import confidence_subgraph, edge_test, empirical_fisher, model_fisher
from .io import (Report, RunConfig, format_csv, load_csv, matrix_from_json, matrix_to_json,
                 model_from_config, read_json_arg)
from .normalizer import EvalStrategy, log_normalizer
from .sampler import SamplerConfig, sample

USAGE_ERRORS = (ConfigError, DomainError, ParameterError, StrategyError, OSError)
NUMERIC_ERRORS = (NonExistenceError, NormalizerError, SamplerError, InferenceError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p, data=True):
    p.add_argument("--model", required=True, help="model config: JSON text or a path to a JSON file")
    if data:
        p.add_argument("--data", required=True, help="CSV file of observations")
    p.add_argument("--strategy", help="normalizer strategy: JSON text or file")
    p.add_argument("--out", help="output directory (stdout when omitted)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="exptrace", description="Fit and test exponential trace graphical models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="maximum likelihood fit")
    _common(p)

    p = sub.add_parser("test", help="Wald test of a single edge")
    _common(p)
    p.add_argument("--edge", nargs=2, type=int, required=True, metavar=("I", "J"),
                   help="1-based entry to test")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--fisher", choices=("empirical", "model"), default="empirical")
    p.add_argument("--literal", action="store_true", help="use the simplified diagonal statistic")

    p = sub.add_parser("subgraph", help="Holm-adjusted confidence subgraph")
    _common(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--fisher", choices=("empirical", "model"), default="empirical")
    p.add_argument("--literal", action="store_true")

    p = sub.add_parser("sample", help="draw observations from f_M")
    _common(p, data=False)
    p.add_argument("--params", required=True, help="parameter matrix JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thin", type=int, default=10)

    p = sub.add_parser("eval", help="log-normalizer, log-likelihood and gradient norm at M")
    _common(p, data=False)
    p.add_argument("--params", required=True, help="parameter matrix JSON")
    p.add_argument("--data", help="CSV file of observations")
    return parser


def _emit(args, name: str, text: str) -> None:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _setup(args):
    cfg = read_json_arg(args.model)
    model = model_from_config(cfg)
    strat_cfg = read_json_arg(args.strategy) if args.strategy else cfg.get("strategy")
    strategy = EvalStrategy.from_config(strat_cfg) if strat_cfg else None
    run = RunConfig(model=cfg, strategy=strategy.to_config() if strategy else None,
                    alpha=getattr(args, "alpha", 0.05), data=getattr(args, "data", None),
                    out=args.out, seed=args.seed)
    return model, strategy, run


def _fit(model, strategy, args):
    data = load_csv(args.data, model)
    return data, fit_mle(model, data, FitOptions(strategy=strategy))


def _fisher(model, fit, data, args, strategy):
    if args.fisher == "model":
        return model_fisher(model, fit.m_hat, strategy, n=fit.n)
    return empirical_fisher(model, data)


def _edge(model, args):
    i, j = (v - 1 for v in args.edge)
    if not (0 <= i < model.q and 0 <= j < model.q):
        raise ConfigError(f"edge {args.edge} out of range 1..{model.q}")
    return i, j


def cmd_fit(args):
    model, strategy, run = _setup(args)
    _, fit = _fit(model, strategy, args)
    report = Report.from_fit(fit, run)
    if args.out:
        _emit(args, "report.json", report.to_json())
        _emit(args, "m_hat.json", json.dumps(matrix_to_json(fit.m_hat)))
    else:
        _emit(args, "report.json", report.to_json())


def cmd_test(args):
    model, strategy, run = _setup(args)
    i, j = _edge(model, args)
    data, fit = _fit(model, strategy, args)
    res = edge_test(fit, _fisher(model, fit, data, args, strategy), i, j, literal=args.literal)
    _emit(args, "test.json", json.dumps(res.to_dict(), indent=2))


def cmd_subgraph(args):
    model, strategy, run = _setup(args)
    if not 0 < args.alpha < 1:
        raise ConfigError("--alpha must lie in (0, 1)")
    data, fit = _fit(model, strategy, args)
    sg = confidence_subgraph(fit, _fisher(model, fit, data, args, strategy), args.alpha,
                             literal=args.literal)
    report = Report.from_fit(fit, run, subgraph=sg)
    _emit(args, "report.json", report.to_json())
    if args.out:
        _emit(args, "graph.dot", export_dot(sg.graph))
        _emit(args, "adjacency.json", json.dumps(to_adjacency(sg.graph)))


def cmd_sample(args):
    model, _, _ = _setup(args)
    M = matrix_from_json(read_json_arg(args.params))
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    cfg = SamplerConfig(seed=args.seed, burn_in=args.burn_in, thin=args.thin)
    data = sample(model, M, args.n, cfg)
    _emit(args, "sample.csv", format_csv(model, data))


def cmd_eval(args):
    model, strategy, _ = _setup(args)
    M = matrix_from_json(read_json_arg(args.params))
    out = {"log_norm": log_normalizer(model, M, strategy)}
    if args.data:
        data = load_csv(args.data, model)
        gram = gram_matrix(model, data)
        out["log_likelihood"] = log_likelihood(model, M, data, strategy)
        out["grad_norm"] = model.space.projected_norm(gradient(model, M, gram, strategy))
    _emit(args, "eval.json", json.dumps(out, indent=2))


COMMANDS = {"fit": cmd_fit, "test": cmd_test, "subgraph": cmd_subgraph, "sample": cmd_sample,
            "eval": cmd_eval}


def run_command(argv) -> int:
    try:
        args = build_parser().parse_args(list(argv))
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as exc:
        print(f"exptrace: numerical failure: {exc}", file=sys.stderr)
        return 2
    except USAGE_ERRORS as exc:
        print(f"exptrace: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
