"""Unit-hypercube to physical-parameter mapping.

The sampler works on [0, 1]^D; this module translates those coordinates
through the prior: Gamma quantiles for precision hyperparameters and the
likelihood width, Gaussian quantiles for network weights and biases, and
a sorting transform on each hidden-layer bias block that removes the
node-permutation symmetry of the network.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaincinv, ndtri

from .model import ModelSpec, ParamLayout, param_layout

# Sampler proposals may touch the cube boundary; quantiles are clamped
# just inside it instead of returning infinities.
BOUNDARY_EPS = 1e-15


def gaussian_quantile(u, mean: float = 0.0, sd: float = 1.0):
    """Inverse Gaussian CDF; errors on u in {0, 1} (infinite quantile)."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("gaussian_quantile requires 0 < u < 1")
    if sd <= 0.0:
        raise ValueError(f"sd must be positive, got {sd}")
    return mean + sd * ndtri(u)


def gamma_precision_quantile(u, alpha: float = 1.0, beta: float = 1.0):
    """Width sigma whose precision sigma**-2 is the Gamma(alpha, rate beta)
    quantile at u."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("gamma_precision_quantile requires 0 < u < 1")
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("alpha and beta must be positive")
    tau = gammaincinv(alpha, u) / beta
    return tau ** -0.5


def forced_identifiability(u_block: np.ndarray) -> np.ndarray:
    """Map k independent uniforms to the sorted k-tuple of uniforms.

    Backwards recurrence (1-based): t_k = u_k**(1/k), then
    t_i = u_i**(1/i) * t_{i+1}, which yields ascending values whose joint
    law is that of uniform order statistics.
    """
    u = np.asarray(u_block, dtype=np.float64)
    k = u.shape[0]
    if k == 0:
        raise ValueError("empty block")
    powers = u ** (1.0 / np.arange(1, k + 1))
    return np.multiply.accumulate(powers[::-1])[::-1]


def to_physical(spec: ModelSpec, u: np.ndarray) -> np.ndarray:
    """Map one hypercube point to physical parameters for ``spec``."""
    return _to_physical(param_layout(spec), u)


def _to_physical(layout: ParamLayout, u: np.ndarray) -> np.ndarray:
    u = np.clip(np.asarray(u, dtype=np.float64), BOUNDARY_EPS, 1.0 - BOUNDARY_EPS)
    if u.shape != (layout.total_dim,):
        raise ValueError(f"expected {layout.total_dim} coordinates, got {u.shape}")
    theta = np.empty_like(u)

    nh = layout.n_hyper
    if nh:
        tau = gammaincinv(layout.hyper_alphas, u[:nh]) / layout.hyper_betas
        theta[:nh] = tau ** -0.5
    if layout.sigma_index is not None:
        theta[layout.sigma_index] = gamma_precision_quantile(u[layout.sigma_index])

    u_net = u[layout.net_start:].copy()
    for start, stop in layout.ordered_spans:
        u_net[start:stop] = forced_identifiability(u_net[start:stop])
    np.clip(u_net, BOUNDARY_EPS, 1.0 - BOUNDARY_EPS, out=u_net)
    z = ndtri(u_net)
    if nh:
        widths = np.where(layout.gov_index >= 0,
                          theta[np.maximum(layout.gov_index, 0)], 1.0)
        z *= widths
    theta[layout.net_start:] = z
    return theta
