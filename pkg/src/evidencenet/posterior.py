"""Posterior-predictive summaries and split-level aggregation.

Weighted posterior samples are reduced to a per-input predictive mean
and standard deviation, a test-set mean squared error with a propagated
error bar, and (across data splits) table rows whose evidence column is
the log of the mean evidence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import ModelSpec, param_layout
from .network import NetworkParams, forward_batch
from .sampler import NsRun


@dataclass
class WeightedSamples:
    """Posterior samples with normalized weights.

    ``thetas`` rows are full physical vectors (hyperparameters included)
    in the layout of ``spec``; ``spec`` may be None for samples of toy
    problems that never touch a network.
    """

    thetas: np.ndarray
    weights: np.ndarray
    spec: ModelSpec | None = None

    def __post_init__(self):
        self.thetas = np.atleast_2d(np.asarray(self.thetas, dtype=np.float64))
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.thetas.shape[0] != self.weights.shape[0]:
            raise ValueError("one weight per sample required")

    @property
    def ess(self) -> float:
        """Kish effective sample size (sum w)^2 / sum w^2."""
        return float(np.sum(self.weights) ** 2 / np.sum(self.weights ** 2))


@dataclass
class PredictiveSummary:
    """Per-test-point predictive moments plus the test-set loss."""

    y_hat: np.ndarray
    y_sd: np.ndarray
    test_loss: float
    test_loss_err: float


def posterior_samples(run: NsRun, spec: ModelSpec | None = None) -> WeightedSamples:
    """Normalized posterior weights exp(logw - logZ) over a run's dead
    points."""
    weights = np.exp(run.dead_logw - run.log_z)
    weights /= weights.sum()
    return WeightedSamples(thetas=run.dead_theta, weights=weights, spec=spec)


def sample_predictions(samples: WeightedSamples, X: np.ndarray) -> np.ndarray:
    """Network outputs f(x; theta_k), one row per posterior sample."""
    if samples.spec is None:
        raise ValueError("samples carry no model; cannot evaluate the network")
    spec = samples.spec
    layout = param_layout(spec)
    X = np.asarray(X, dtype=np.float64)
    preds = np.empty((samples.thetas.shape[0], X.shape[0]))
    for k, theta in enumerate(samples.thetas):
        params = NetworkParams.from_flat(spec.arch, layout.network_vector(theta))
        preds[k] = forward_batch(spec.arch, params, X)
    return preds


def predictive(samples: WeightedSamples, X: np.ndarray):
    """Weighted predictive mean and standard deviation per input row."""
    return weighted_moments(sample_predictions(samples, X), samples.weights)


def weighted_moments(values: np.ndarray, weights: np.ndarray):
    """Column-wise weighted mean and sd of ``values`` ((n_samples, n_points))."""
    w = np.asarray(weights, dtype=np.float64)
    w = w / w.sum()
    mean = w @ values
    var = w @ (values - mean) ** 2
    return mean, np.sqrt(var)


def test_loss(y_true: np.ndarray, y_hat: np.ndarray, y_sd: np.ndarray):
    """Mean squared error and its first-order error bar.

    The error bar propagates the per-point predictive sd through
    E = (1/n) sum (y_i - yhat_i)^2 treating points as independent.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y_sd = np.asarray(y_sd, dtype=np.float64)
    n = y_true.shape[0]
    if n == 0:
        raise ValueError("empty test set")
    if y_hat.shape[0] != n or y_sd.shape[0] != n:
        raise ValueError("length mismatch between targets and predictions")
    resid = y_true - y_hat
    loss = float(resid @ resid) / n
    err = float(np.sqrt(np.sum((2.0 * resid / n) ** 2 * y_sd ** 2)))
    return loss, err


def predictive_summary(samples: WeightedSamples, X_test, y_test) -> PredictiveSummary:
    y_hat, y_sd = predictive(samples, X_test)
    loss, err = test_loss(y_test, y_hat, y_sd)
    return PredictiveSummary(y_hat=y_hat, y_sd=y_sd, test_loss=loss, test_loss_err=err)


@dataclass
class AggregateRow:
    """Split-averaged table row for one model (or ensemble)."""

    log_z: float                      # log of the mean evidence
    log_z_err: float | None           # delta-method error of that mean
    test_loss: float
    test_loss_err: float | None       # standard error of the loss mean
    test_loss_err_prop: float | None  # mean of the per-split propagated errors
    n_splits: int


def aggregate_splits(log_zs, losses, log_z_errs=None, loss_errs=None) -> AggregateRow:
    """Average per-split results: evidences are averaged in Z (log taken
    last); losses are averaged directly.

    With a single split the means are reported and the error fields are
    None.  The evidence error combines the split-to-split scatter of Z
    with the per-run sampling errors, both propagated to log scale.
    """
    log_zs = np.asarray(log_zs, dtype=np.float64)
    losses = np.asarray(losses, dtype=np.float64)
    k = log_zs.shape[0]
    if k < 1 or losses.shape[0] != k:
        raise ValueError("need matching, nonempty per-split results")
    log_z_errs = np.zeros(k) if log_z_errs is None else np.asarray(log_z_errs, dtype=np.float64)
    loss_errs = None if loss_errs is None else np.asarray(loss_errs, dtype=np.float64)

    ref = float(np.max(log_zs))
    ratios = np.exp(log_zs - ref)  # Z_i / Z_ref, overflow-safe
    mean_ratio = float(ratios.mean())
    log_z_mean = ref + float(np.log(mean_ratio))
    loss_mean = float(losses.mean())
    loss_err_prop = None if loss_errs is None else float(loss_errs.mean())

    if k == 1:
        return AggregateRow(log_z=log_z_mean, log_z_err=None, test_loss=loss_mean,
                            test_loss_err=None, test_loss_err_prop=loss_err_prop,
                            n_splits=k)

    var_mean_ratio = (float(np.var(ratios, ddof=1)) / k
                      + float(np.sum((ratios * log_z_errs) ** 2)) / k ** 2)
    log_z_err = float(np.sqrt(var_mean_ratio)) / mean_ratio
    loss_err = float(np.std(losses, ddof=1) / np.sqrt(k))
    return AggregateRow(log_z=log_z_mean, log_z_err=log_z_err, test_loss=loss_mean,
                        test_loss_err=loss_err, test_loss_err_prop=loss_err_prop,
                        n_splits=k)


def write_predictions(path, y_true, y_hat, y_sd) -> None:
    """Per-run predictions CSV: index, y_true, y_hat, y_sd (whitened
    units)."""
    lines = ["index,y_true,y_hat,y_sd"]
    for i in range(len(y_true)):
        lines.append(f"{i},{y_true[i]:.17g},{y_hat[i]:.17g},{y_sd[i]:.17g}")
    from .sampler import _atomic_write
    _atomic_write(path, "\n".join(lines) + "\n")


def read_predictions(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1], data[:, 2], data[:, 3]
