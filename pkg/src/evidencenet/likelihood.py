"""Independent Gaussian log-likelihood over a training slice."""

from __future__ import annotations

import logging

import numpy as np

from .data import Dataset
from .model import ModelSpec, param_layout
from .network import NetworkParams, NonFiniteForwardError, forward_batch
from .transform import _to_physical

LOG_2PI = float(np.log(2.0 * np.pi))

log = logging.getLogger(__name__)


def log_like(spec: ModelSpec, theta: np.ndarray, train: Dataset) -> float:
    """Natural-log Gaussian likelihood of ``theta`` on the training rows.

    Non-finite network outputs yield ``-inf`` so the sampler treats the
    region as zero likelihood rather than aborting.
    """
    return LogLikeEvaluator(spec, train)(theta)


class LogLikeEvaluator:
    """Repeated likelihood evaluation for one (model, training slice) pair.

    Carries the cumulative call counter ``n_calls``; instances are cheap
    and each sampler run owns its own, so no synchronization is needed.
    """

    def __init__(self, spec: ModelSpec, train: Dataset):
        self.spec = spec
        self.layout = param_layout(spec)
        self.features = np.ascontiguousarray(train.features, dtype=np.float64)
        self.targets = np.ascontiguousarray(train.targets, dtype=np.float64)
        self.n_train = self.targets.shape[0]
        self.n_calls = 0
        self.n_nonfinite = 0

    def __call__(self, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.layout.total_dim,):
            raise ValueError(f"expected {self.layout.total_dim} parameters, got {theta.shape}")
        self.n_calls += 1
        sigma = self.layout.sigma(theta)
        if sigma <= 0.0:
            raise ValueError(f"likelihood width must be positive, got {sigma}")
        params = NetworkParams.from_flat(self.spec.arch, self.layout.network_vector(theta))
        try:
            preds = forward_batch(self.spec.arch, params, self.features)
        except NonFiniteForwardError as err:
            self.n_nonfinite += 1
            log.debug("non-finite forward output (layer %d); rejecting point", err.layer)
            return -np.inf
        resid = self.targets - preds
        chi2 = float(resid @ resid)
        return -chi2 / (2.0 * sigma * sigma) - self.n_train * (np.log(sigma) + 0.5 * LOG_2PI)

    def from_hypercube(self, u: np.ndarray):
        """Transform a hypercube point and evaluate it; returns (theta, logL)."""
        theta = _to_physical(self.layout, u)
        return theta, self(theta)
