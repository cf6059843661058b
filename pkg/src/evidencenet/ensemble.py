"""Posterior over models and evidence-weighted ensembles.

Given per-model evidences, the model posterior is a softmax of
log Z_m + log P(m); ensemble predictions marginalize over that posterior
and the ensemble evidence is log sum_m Z_m P(m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .posterior import WeightedSamples, weighted_moments


@dataclass
class ModelPosterior:
    """Normalized posterior probabilities over ensemble members."""

    log_zs: np.ndarray
    prior: np.ndarray
    post: np.ndarray


@dataclass
class EnsembleSamples:
    """Union of member posterior samples, each member's mass rescaled by
    its model-posterior weight.  ``member_tags[k]`` labels the provenance
    of ``members[k]``."""

    members: list
    model_weights: np.ndarray
    member_tags: list


def _check_prior(prior, n: int) -> np.ndarray:
    if prior is None:
        return np.full(n, 1.0 / n)
    prior = np.asarray(prior, dtype=np.float64)
    if prior.shape != (n,):
        raise ValueError(f"need one prior weight per member, got {prior.shape}")
    if np.any(prior < 0.0):
        raise ValueError("model prior weights must be nonnegative")
    if abs(prior.sum() - 1.0) > 1e-9:
        raise ValueError(f"model prior must sum to 1, got {prior.sum()}")
    return prior


def model_posterior(log_zs, prior=None) -> ModelPosterior:
    """P(m | data) proportional to Z_m P(m), computed with
    max-subtraction for stability."""
    log_zs = np.asarray(log_zs, dtype=np.float64)
    if log_zs.ndim != 1 or log_zs.size == 0:
        raise ValueError("need a nonempty vector of log-evidences")
    prior = _check_prior(prior, log_zs.size)
    with np.errstate(divide="ignore"):
        scores = log_zs + np.log(prior)
    top = np.max(scores)
    if not np.isfinite(top):
        raise ValueError("all members have zero posterior mass")
    post = np.exp(scores - top)
    post /= post.sum()
    return ModelPosterior(log_zs=log_zs, prior=prior, post=post)


def combined_evidence(log_zs, prior=None) -> float:
    """log of the prior-weighted mean evidence, log sum_m Z_m P(m)."""
    log_zs = np.asarray(log_zs, dtype=np.float64)
    prior = _check_prior(prior, log_zs.size)
    with np.errstate(divide="ignore"):
        return float(logsumexp(log_zs + np.log(prior)))


def combined_samples(member_samples, posterior: ModelPosterior,
                     tags=None) -> EnsembleSamples:
    """Rescale each member's sample weights by its posterior probability.

    ``member_samples`` must supply one :class:`WeightedSamples` per
    posterior entry; the union keeps total mass 1 and a per-member tag.
    """
    n = posterior.post.shape[0]
    if len(member_samples) != n:
        raise ValueError(f"expected samples for {n} members, got {len(member_samples)}")
    if any(s is None for s in member_samples):
        raise ValueError("missing member samples")
    if tags is None:
        tags = [s.spec.name if s.spec is not None else str(i)
                for i, s in enumerate(member_samples)]
    scaled = [WeightedSamples(thetas=s.thetas, weights=s.weights * p, spec=s.spec)
              for s, p in zip(member_samples, posterior.post)]
    return EnsembleSamples(members=scaled, model_weights=posterior.post.copy(),
                           member_tags=list(tags))


def mixture_moments(means, sds, model_weights):
    """Predictive moments of a mixture from per-member moments.

    ``means`` and ``sds`` are (n_members, n_points); the mixture mean is
    the weighted average of member means and the variance adds the
    between-member spread to the weighted member variances.
    """
    means = np.asarray(means, dtype=np.float64)
    sds = np.asarray(sds, dtype=np.float64)
    w = np.asarray(model_weights, dtype=np.float64)
    mean = w @ means
    var = w @ (sds ** 2 + (means - mean) ** 2)
    return mean, np.sqrt(var)


def predictive_ensemble(ens: EnsembleSamples, X):
    """Predictive mean/sd of the ensemble; exactly the model-weighted
    mixture of the member predictive distributions."""
    n_points = np.asarray(X).shape[0]
    means = np.zeros((len(ens.members), n_points))
    sds = np.zeros_like(means)
    for k, samples in enumerate(ens.members):
        if ens.model_weights[k] == 0.0:
            continue  # zero-mass member; never evaluated
        means[k], sds[k] = weighted_moments(
            _member_predictions(samples, X), samples.weights / samples.weights.sum())
    return mixture_moments(means, sds, ens.model_weights)


def _member_predictions(samples: WeightedSamples, X):
    from .posterior import sample_predictions
    return sample_predictions(samples, X)
