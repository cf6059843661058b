"""Fully connected multi-layer perceptron evaluation.

Networks are evaluated layer by layer with a fixed accumulation order so
repeated runs are bit-reproducible.  Hidden layers use tanh or relu; the
output layer is always linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "relu")


class NonFiniteForwardError(FloatingPointError):
    """A layer produced a non-finite activation."""

    def __init__(self, layer: int):
        super().__init__(f"non-finite activations in layer {layer}")
        self.layer = layer


@dataclass(frozen=True)
class Architecture:
    """Layer sizes and hidden activation of an MLP.

    ``hidden_sizes`` may be empty, which leaves a single linear map from
    inputs to output.
    """

    hidden_sizes: tuple[int, ...] = ()
    activation: str = "tanh"
    input_size: int = 13
    output_size: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; choose from {ACTIVATIONS}")
        if any(h < 1 for h in self.hidden_sizes) or self.input_size < 1 or self.output_size < 1:
            raise ValueError("all layer sizes must be >= 1")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_size, *self.hidden_sizes, self.output_size)

    @property
    def n_weighted_layers(self) -> int:
        return len(self.hidden_sizes) + 1


@dataclass(frozen=True)
class NetworkParams:
    """Per-layer weight matrices (row per receiving node) and bias vectors."""

    weights: tuple = field(default=())  # layer ell: (l_ell, l_{ell-1})
    biases: tuple = field(default=())   # layer ell: (l_ell,)

    @classmethod
    def from_flat(cls, arch: Architecture, flat: np.ndarray) -> "NetworkParams":
        """Unpack a flat vector ordered layer by layer, weights then biases."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (param_count(arch),):
            raise ValueError(f"expected {param_count(arch)} parameters, got {flat.shape}")
        weights, biases, pos = [], [], 0
        sizes = arch.layer_sizes
        for l_in, l_out in zip(sizes[:-1], sizes[1:]):
            weights.append(flat[pos:pos + l_in * l_out].reshape(l_out, l_in))
            pos += l_in * l_out
            biases.append(flat[pos:pos + l_out])
            pos += l_out
        return cls(tuple(weights), tuple(biases))


def param_count(arch: Architecture) -> int:
    """Number of weights plus biases over all layers including the output."""
    sizes = arch.layer_sizes
    return sum(l_in * l_out + l_out for l_in, l_out in zip(sizes[:-1], sizes[1:]))


def forward_batch(arch: Architecture, params: NetworkParams, X: np.ndarray) -> np.ndarray:
    """Evaluate the network on each row of ``X``; returns an (n,) vector.

    Raises :class:`NonFiniteForwardError` if any layer yields a
    non-finite value (the offending 1-based layer index is attached).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != arch.input_size:
        raise ValueError(f"expected (n, {arch.input_size}) inputs, got {X.shape}")
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    act = np.tanh if arch.activation == "tanh" else _relu
    z = X
    last = len(params.weights) - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = z @ w.T + b
        if layer != last:
            z = act(z)
        if not np.isfinite(z).all():
            raise NonFiniteForwardError(layer + 1)
    return z[:, 0]


def forward(arch: Architecture, params: NetworkParams, x: np.ndarray) -> float:
    """Scalar prediction for a single input; same evaluation path as a batch."""
    x = np.asarray(x, dtype=np.float64)
    return float(forward_batch(arch, params, x[None, :])[0])


def _relu(z):
    return np.maximum(z, 0.0)
