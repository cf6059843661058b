"""Bayesian model definitions: architecture + prior granularity + noise flag.

A model binds an :class:`~evidencenet.network.Architecture` to a prior
granularity and a flag saying whether the likelihood width is sampled.
Granularities:

``fixed``
    All prior widths and the likelihood width pinned to 1; no
    hyperparameters.
``single``
    One global width hyperparameter for every weight and bias.
``layer``
    Two hyperparameters per weighted layer: one for its weights, one for
    its biases.
``input_size``
    One weight hyperparameter per source node feeding a layer (so a
    layer fed by l_in nodes gets l_in of them), plus one bias
    hyperparameter per layer.

Hyperparameters are widths sigma_i with a Gamma(alpha, rate beta) prior
on the precision sigma_i**-2.  For layer and input_size granularity the
weight hyperpriors of every layer after the first use beta = 1/l_in so
wide networks keep a finite prior over functions; bias and first-layer
hyperpriors use beta = 1.  When the likelihood width is sampled its
precision prior is Gamma(1, 1).

Model names follow a compact grammar, e.g. ``"br"``, ``"(4, 4)"``,
``"r (8)"``, ``"lh sv (2, 2)"``: optional ``r`` for relu, optional
granularity code (``sh``/``lh``/``ih``), optional ``sv`` for sampled
likelihood width, optional parenthesized hidden sizes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .network import ACTIVATIONS, Architecture, param_count

GRANULARITIES = ("fixed", "single", "layer", "input_size")

_GRAN_CODE = {"single": "sh", "layer": "lh", "input_size": "ih"}
_CODE_GRAN = {v: k for k, v in _GRAN_CODE.items()}

_ARCH_RE = re.compile(r"\(\s*\d+\s*(?:,\s*\d+\s*)*\)$")


class ModelNameError(ValueError):
    """Raised for names outside the model-name grammar."""


@dataclass(frozen=True)
class ModelSpec:
    """A Bayesian model: architecture, prior granularity, noise-width flag."""

    arch: Architecture
    granularity: str = "fixed"
    variable_sigma: bool = False

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ValueError(
                f"unknown granularity {self.granularity!r}; choose from {GRANULARITIES}")

    @property
    def name(self) -> str:
        return format_name(self)

    def on_grid(self) -> bool:
        """True for the standard benchmark combinations: relu only with
        fixed priors, and the likelihood width sampled exactly when the
        prior widths are."""
        if self.granularity == "fixed":
            return not self.variable_sigma
        return self.variable_sigma and self.arch.activation == "tanh"


def hyper_count(spec: ModelSpec) -> int:
    """Number of sampled prior-width hyperparameters."""
    arch = spec.arch
    if spec.granularity == "fixed":
        return 0
    if spec.granularity == "single":
        return 1
    if spec.granularity == "layer":
        return 2 * arch.n_weighted_layers
    sizes = arch.layer_sizes
    return sum(l_in + 1 for l_in in sizes[:-1])


def total_dim(spec: ModelSpec) -> int:
    """Full sampling dimensionality: network + hyper + noise parameters."""
    return param_count(spec.arch) + hyper_count(spec) + int(spec.variable_sigma)


def hyperprior_params(spec: ModelSpec):
    """(alpha, beta) per width hyperparameter, plus the pair for the
    likelihood width (None when it is fixed).

    The hyperparameter order is canonical: for each weighted layer, its
    weight hyperparameter(s) then its bias hyperparameter; ``single``
    granularity has the one global entry.
    """
    if spec.granularity == "fixed":
        raise ValueError("fixed granularity has no hyperpriors")
    sigma_pair = (1.0, 1.0) if spec.variable_sigma else None
    if spec.granularity == "single":
        return [(1.0, 1.0)], sigma_pair
    pairs = []
    sizes = spec.arch.layer_sizes
    for layer, l_in in enumerate(sizes[:-1], start=1):
        beta_w = 1.0 if layer == 1 else 1.0 / l_in
        n_weight_hypers = 1 if spec.granularity == "layer" else l_in
        pairs.extend([(1.0, beta_w)] * n_weight_hypers)
        pairs.append((1.0, 1.0))  # bias hyperparameter for this layer
    return pairs, sigma_pair


def parse_name(s: str) -> ModelSpec:
    """Parse a model name; inverse of :func:`format_name` on canonical names."""
    text = s.strip()
    if not text:
        raise ModelNameError("empty model name")
    hidden: tuple[int, ...] = ()
    m = _ARCH_RE.search(text)
    if m:
        hidden = tuple(int(tok) for tok in re.findall(r"\d+", m.group(0)))
        text = text[:m.start()].strip()
    tokens = text.split()
    if tokens == ["br"]:
        if hidden:
            raise ModelNameError("'br' takes no hidden-layer list")
        return ModelSpec(Architecture(()))
    activation = "tanh"
    granularity = "fixed"
    variable_sigma = False
    allowed = ["r"]
    for tok in tokens:
        if tok == "r" and "r" in allowed:
            activation = "relu"
            allowed = ["gran"]
        elif tok in _CODE_GRAN and ("r" in allowed or "gran" in allowed):
            granularity = _CODE_GRAN[tok]
            allowed = ["sv"]
        elif tok == "sv" and allowed != ["done"]:
            variable_sigma = True
            allowed = ["done"]
        else:
            raise ModelNameError(
                f"unexpected token {tok!r} in model name {s!r}; valid tokens are "
                f"'br', 'r', 'sh', 'lh', 'ih', 'sv' and a trailing '(n1, n2, ...)'")
    return ModelSpec(Architecture(hidden, activation=activation),
                     granularity=granularity, variable_sigma=variable_sigma)


def format_name(spec: ModelSpec) -> str:
    """Canonical name, e.g. ``"lh sv (4, 4)"``; the no-hidden fixed model
    with tanh convention is written ``"br"``."""
    parts = []
    if spec.arch.activation == "relu":
        parts.append("r")
    if spec.granularity != "fixed":
        parts.append(_GRAN_CODE[spec.granularity])
    if spec.variable_sigma:
        parts.append("sv")
    if spec.arch.hidden_sizes:
        parts.append("(" + ", ".join(str(h) for h in spec.arch.hidden_sizes) + ")")
    if not parts:
        return "br"
    return " ".join(parts)


# --------------------------------------------------------------------------
# Flat parameter layout

@dataclass(frozen=True)
class ParamLayout:
    """Ordered flattening of one model's sampling vector.

    Layout: ``[width hyperparameters] ++ [likelihood width, if sampled]
    ++ [network parameters, layer by layer, weights then biases]``.
    ``gov_index[i]`` gives the hyperparameter governing network scalar
    ``i`` (-1 means the fixed unit width), and ``ordered_spans`` marks
    the hidden-layer bias blocks whose hypercube coordinates are sorted
    for identifiability.
    """

    spec: ModelSpec
    n_hyper: int
    sigma_index: int | None         # position of the likelihood width, or None
    net_start: int                  # first network parameter position
    total_dim: int
    hyper_alphas: np.ndarray        # (n_hyper,)
    hyper_betas: np.ndarray         # (n_hyper,)
    gov_index: np.ndarray           # (n_net,), int, -1 = fixed width 1
    ordered_spans: tuple            # ((start, stop) in network coords, ...)
    n_net: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_net", self.total_dim - self.net_start)

    def sigma(self, theta: np.ndarray) -> float:
        """Likelihood width encoded in a physical vector (1 when fixed)."""
        return float(theta[self.sigma_index]) if self.sigma_index is not None else 1.0

    def hyper_values(self, theta: np.ndarray) -> np.ndarray:
        return theta[:self.n_hyper]

    def network_vector(self, theta: np.ndarray) -> np.ndarray:
        return theta[self.net_start:]


@lru_cache(maxsize=None)
def param_layout(spec: ModelSpec) -> ParamLayout:
    """Build (and cache) the flat layout for a model."""
    arch = spec.arch
    n_hyper = hyper_count(spec)
    sigma_index = n_hyper if spec.variable_sigma else None
    net_start = n_hyper + int(spec.variable_sigma)
    dim = total_dim(spec)

    if n_hyper:
        pairs, _ = hyperprior_params(spec)
        alphas = np.array([a for a, _ in pairs])
        betas = np.array([b for _, b in pairs])
    else:
        alphas = np.empty(0)
        betas = np.empty(0)

    n_net = param_count(arch)
    gov = np.full(n_net, -1, dtype=np.intp)
    ordered = []
    sizes = arch.layer_sizes
    pos = 0          # position within the network block
    hyper_pos = 0    # next hyperparameter index, canonical order
    n_hidden = len(arch.hidden_sizes)
    for layer, (l_in, l_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        w_size = l_in * l_out
        if spec.granularity == "single":
            gov[pos:pos + w_size + l_out] = 0
        elif spec.granularity == "layer":
            gov[pos:pos + w_size] = hyper_pos
            gov[pos + w_size:pos + w_size + l_out] = hyper_pos + 1
            hyper_pos += 2
        elif spec.granularity == "input_size":
            # weights stored row-major by receiving node: column k of the
            # matrix (source node k) shares hyperparameter hyper_pos + k
            gov[pos:pos + w_size] = hyper_pos + np.tile(np.arange(l_in), l_out)
            gov[pos + w_size:pos + w_size + l_out] = hyper_pos + l_in
            hyper_pos += l_in + 1
        if layer <= n_hidden:
            ordered.append((pos + w_size, pos + w_size + l_out))
        pos += w_size + l_out

    return ParamLayout(spec=spec, n_hyper=n_hyper, sigma_index=sigma_index,
                       net_start=net_start, total_dim=dim,
                       hyper_alphas=alphas, hyper_betas=betas,
                       gov_index=gov, ordered_spans=tuple(ordered))


# --------------------------------------------------------------------------
# The benchmark model grid

_GRID_ARCHS = ((2,), (4,), (8,), (2, 2), (4, 4), (2, 2, 2), (4, 4, 4),
               (2, 2, 2, 2), (4, 4, 4, 4))


def benchmark_grid() -> list[str]:
    """The 49 standard model names, in canonical report order."""
    names = ["br", "sh sv", "lh sv", "ih sv"]
    for hidden in _GRID_ARCHS:
        arch = "(" + ", ".join(str(h) for h in hidden) + ")"
        names.append(arch)
        names.append(f"r {arch}")
        for code in ("sh", "lh", "ih"):
            names.append(f"{code} sv {arch}")
    return names


def desk_grid(max_dim: int = 90) -> list[str]:
    """Benchmark models small enough for desk-scale runs."""
    return [n for n in benchmark_grid() if total_dim(parse_name(n)) <= max_dim]


def grid_sort_key(name: str):
    """Sort key reproducing the benchmark table ordering."""
    spec = parse_name(name)
    hidden = spec.arch.hidden_sizes
    if spec.granularity == "fixed":
        variant = 0 if spec.arch.activation == "tanh" else 1
    else:
        variant = 2 + GRANULARITIES.index(spec.granularity)
    return (len(hidden) > 0, len(hidden), hidden, variant, spec.variable_sigma)
