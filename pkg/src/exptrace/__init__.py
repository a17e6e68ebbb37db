"""Exponential trace graphical models: model definitions, normalizers, maximum
likelihood, Wald inference, graph extraction and sampling."""

from .errors import (ConfigError, DivergenceError, DomainError, InferenceError, NonExistenceError,
                     NormalizerError, ParameterError, SamplerError, StrategyError, TraceModelError)
from .estimator import (FitOptions, FitResult, GramMatrix, fit_mle, gradient, gram_matrix,
                        hessian, log_likelihood, objective)
from .graph import (Graph, dependence_closure, edge_set, export_dot, from_adjacency,
                    mixture_graphs, to_adjacency)
from .inference import (FisherTensor, Restriction, SubgraphResult, TestResult, chi_square_sf,
                        confidence_subgraph, edge_test, empirical_fisher, holm, model_fisher,
                        wald_from_covariance, wald_statistic)
from .io import (Report, RunConfig, format_csv, load_csv, matrix_from_json, matrix_to_json,
                 parse_csv, write_csv)
from .model import (Dataset, DomainSpec, ParameterSpace, TraceModel, Transform,
                    affine_transform, as_dataset, build_model, composite_sqrt, evaluate_log_base,
                    evaluate_stat, exponential_sqrt, gaussian, identity_transform, ising,
                    laplace_sqrt, mixture_gaussian_binary, multinomial_ising, naive_poisson,
                    nonparanormal, poisson_sqrt, restricted_pairwise, validate_parameter)
from .normalizer import (EvalStrategy, MomentBundle, check_integrability, default_strategy,
                         log_normalizer, moments)
from .sampler import SamplerConfig, node_conditional_logpdf, sample

__version__ = "0.1.0"
