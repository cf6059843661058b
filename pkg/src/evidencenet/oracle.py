"""Independent ground-truth evaluators: closed-form Bayesian linear
regression and brute-force grid quadrature for low-dimensional evidences.

These exist so the sampler can be checked against answers obtained by a
completely different route.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .data import Dataset
from .likelihood import LOG_2PI


class AnalyticBLR:
    """Linear-Gaussian model with unit prior and noise widths, solved
    exactly.

    The marginal law of the targets is N(0, I + Phi Phi^T); everything
    is computed through a Cholesky factorization of the much smaller
    I + Phi^T Phi.
    """

    def __init__(self, design: np.ndarray, targets: np.ndarray):
        design = np.asarray(design, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if design.ndim != 2 or design.shape[0] != targets.shape[0]:
            raise ValueError(f"design {design.shape} and targets {targets.shape} disagree")
        self.design = design
        self.targets = targets
        n, p = design.shape
        A = np.eye(p) + design.T @ design
        self._chol = np.linalg.cholesky(A)
        self._half_solve = np.linalg.solve(self._chol, design.T @ targets)
        self.posterior_mean = np.linalg.solve(self._chol.T, self._half_solve)
        self.n_rows = n

    def log_evidence(self) -> float:
        quad = float(self.targets @ self.targets - self._half_solve @ self._half_solve)
        logdet = 2.0 * float(np.sum(np.log(np.diag(self._chol))))
        return -0.5 * (quad + logdet + self.n_rows * LOG_2PI)

    def predict(self, design_new: np.ndarray):
        """Posterior-mean predictions and their function-space standard
        deviations (noise not included)."""
        design_new = np.asarray(design_new, dtype=np.float64)
        mean = design_new @ self.posterior_mean
        half = np.linalg.solve(self._chol, design_new.T)
        sd = np.sqrt(np.einsum("ij,ij->j", half, half))
        return mean, sd


def blr_design(dataset: Dataset) -> np.ndarray:
    """Features plus a unit intercept column, matching the no-hidden-layer
    network parameterization (13 weights + 1 bias)."""
    return np.column_stack([dataset.features, np.ones(dataset.n_rows)])


def blr_for_split(train: Dataset) -> AnalyticBLR:
    return AnalyticBLR(blr_design(train), train.targets)


def blr_log_evidence(train: Dataset) -> float:
    """Closed-form evidence of the fixed-width linear model on a training
    slice."""
    return blr_for_split(train).log_evidence()


def grid_log_evidence(log_like_fn, dims: int, nodes_per_dim: int) -> float:
    """Midpoint-rule integral of exp(logL) over the unit hypercube, in
    log space.

    ``log_like_fn`` must accept an (N, dims) array of points and return
    (N,) log-likelihoods.  Guarded to dims <= 3: the node count grows as
    nodes_per_dim**dims.
    """
    if dims < 1 or dims > 3:
        raise ValueError(f"grid quadrature supports 1..3 dims, got {dims}")
    if nodes_per_dim < 1:
        raise ValueError("need at least one node per dimension")
    centers = (np.arange(nodes_per_dim) + 0.5) / nodes_per_dim
    grids = np.meshgrid(*([centers] * dims), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    log_l = np.empty(points.shape[0])
    chunk = 1 << 18
    for start in range(0, points.shape[0], chunk):
        log_l[start:start + chunk] = log_like_fn(points[start:start + chunk])
    return float(logsumexp(log_l) - dims * np.log(nodes_per_dim))
