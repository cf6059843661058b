"""Evidence-driven training of small Bayesian neural networks.

Full nested sampling of network posteriors, Bayesian evidences for model
comparison, and evidence-weighted ensembles, on the classic 506-row
housing regression benchmark.
"""

from .data import (DataError, Dataset, RawTable, SplitPlan, load_table,
                   make_splits, whiten)
from .network import (ACTIVATIONS, Architecture, NetworkParams,
                      NonFiniteForwardError, forward, forward_batch,
                      param_count)
from .model import (GRANULARITIES, ModelNameError, ModelSpec, ParamLayout,
                    benchmark_grid, desk_grid, format_name, grid_sort_key,
                    hyper_count, hyperprior_params, param_layout, parse_name,
                    total_dim)
from .transform import (forced_identifiability, gamma_precision_quantile,
                        gaussian_quantile, to_physical)
from .likelihood import LogLikeEvaluator, log_like
from .sampler import (NsRun, SamplerConfig, SamplerError, constrained_sample,
                      read_dead_points, read_summary, run, run_nested,
                      run_summary, summary_checksum, write_dead_points,
                      write_summary)
from .posterior import (AggregateRow, PredictiveSummary, WeightedSamples,
                        aggregate_splits, posterior_samples, predictive,
                        predictive_summary, test_loss, weighted_moments)
from .ensemble import (EnsembleSamples, ModelPosterior, combined_evidence,
                       combined_samples, mixture_moments, model_posterior,
                       predictive_ensemble)
from .oracle import (AnalyticBLR, blr_design, blr_for_split, blr_log_evidence,
                     grid_log_evidence)

__version__ = "0.1.0"
