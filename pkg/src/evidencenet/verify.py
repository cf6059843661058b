"""Self-contained acceptance checks behind ``evidencenet verify``.

``fast_checks`` runs in seconds; ``slow_checks`` adds the sampler-vs-
closed-form comparisons (minutes to tens of minutes).  Each check yields
``(name, passed, detail)``.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import beta as beta_dist
from scipy.stats import kstest

from . import data as data_mod
from . import ensemble as ensemble_mod
from . import oracle as oracle_mod
from . import posterior as posterior_mod
from . import sampler as sampler_mod
from .model import parse_name, total_dim
from .transform import forced_identifiability, gamma_precision_quantile, gaussian_quantile

DEFAULT_MASTER_SEED = 38

# Benchmark-grid dimensionalities (sampling dimension per model name).
# The published zero-hidden input-size row lists 28; the granularity
# formula gives 14 network + 14 width + 1 noise = 29, which is what the
# implementation reports, so that row is checked against 29.
REFERENCE_DIMS = {
    "br": 14, "sh sv": 16, "lh sv": 17, "ih sv": 29,
    "(2)": 31, "r (2)": 31, "sh sv (2)": 33, "lh sv (2)": 36, "ih sv (2)": 49,
    "(4)": 61, "r (4)": 61, "sh sv (4)": 63, "lh sv (4)": 66, "ih sv (4)": 81,
    "(8)": 121, "r (8)": 121, "sh sv (8)": 123, "lh sv (8)": 126, "ih sv (8)": 145,
    "(2, 2)": 37, "r (2, 2)": 37, "sh sv (2, 2)": 39, "lh sv (2, 2)": 44,
    "ih sv (2, 2)": 58,
    "(4, 4)": 81, "r (4, 4)": 81, "sh sv (4, 4)": 83, "lh sv (4, 4)": 88,
    "ih sv (4, 4)": 106,
    "(2, 2, 2)": 43, "r (2, 2, 2)": 43, "sh sv (2, 2, 2)": 45,
    "lh sv (2, 2, 2)": 52, "ih sv (2, 2, 2)": 67,
    "(4, 4, 4)": 101, "r (4, 4, 4)": 101, "sh sv (4, 4, 4)": 103,
    "lh sv (4, 4, 4)": 110, "ih sv (4, 4, 4)": 131,
    "(2, 2, 2, 2)": 49, "r (2, 2, 2, 2)": 49, "sh sv (2, 2, 2, 2)": 51,
    "lh sv (2, 2, 2, 2)": 60, "ih sv (2, 2, 2, 2)": 76,
    "(4, 4, 4, 4)": 121, "r (4, 4, 4, 4)": 121, "sh sv (4, 4, 4, 4)": 123,
    "lh sv (4, 4, 4, 4)": 132, "ih sv (4, 4, 4, 4)": 156,
}

# One-hidden-layer ladder of reference evidences and the published
# evidence of their uniform-prior combination.
REFERENCE_LADDER = (-141.35, -121.86, -108.84)
REFERENCE_COMBINED = -109.94

EVIDENCE_WINDOW = (-297.5, -291.0)
LOSS_WINDOW = (0.31, 0.37)


def _oracle_results(data_path, n_splits=10, seed=DEFAULT_MASTER_SEED):
    dataset = data_mod.whiten(data_mod.load_table(data_path))
    log_zs, losses = [], []
    for split in data_mod.make_splits(dataset.n_rows, seed, n_splits):
        train = dataset.subset(split.train_idx)
        test = dataset.subset(split.test_idx)
        blr = oracle_mod.blr_for_split(train)
        y_hat, _ = blr.predict(oracle_mod.blr_design(test))
        log_zs.append(blr.log_evidence())
        losses.append(float(np.mean((test.targets - y_hat) ** 2)))
    return np.array(log_zs), np.array(losses)


def fast_checks(data_path):
    yield _check_dims()
    yield from _check_oracle_windows(data_path)
    yield _check_quantiles()
    yield from _check_sorted_law()
    yield from _check_constant_likelihood()
    yield _check_toy_quadrature()
    yield _check_ensemble_arithmetic()


def slow_checks(data_path):
    yield _check_sampler_vs_oracle(data_path)
    yield _check_hierarchical_gap(data_path)


def _check_dims():
    bad = {name: (total_dim(parse_name(name)), want)
           for name, want in REFERENCE_DIMS.items()
           if total_dim(parse_name(name)) != want}
    return ("dimensionality table", not bad,
            f"{len(REFERENCE_DIMS)} model names" if not bad else f"mismatches: {bad}")


def _check_oracle_windows(data_path):
    log_zs, losses = _oracle_results(data_path)
    agg = posterior_mod.aggregate_splits(log_zs, losses)
    lo, hi = EVIDENCE_WINDOW
    ok_z = lo <= agg.log_z <= hi and lo <= log_zs.mean() <= hi
    yield ("analytic evidence window", ok_z,
           f"log(mean Z) = {agg.log_z:.2f}, mean(log Z) = {log_zs.mean():.2f}, "
           f"window [{lo}, {hi}]")
    lo, hi = LOSS_WINDOW
    yield ("analytic loss window", lo <= agg.test_loss <= hi,
           f"mean loss = {agg.test_loss:.4f}, window [{lo}, {hi}]")


def _check_quantiles():
    from scipy.special import gammainc, ndtr
    u = np.linspace(0.01, 0.99, 99)
    gauss = np.max(np.abs(ndtr(gaussian_quantile(u)) - u))
    sigma = gamma_precision_quantile(u, 1.0, 1.0)
    gamma_rt = np.max(np.abs(gammainc(1.0, sigma ** -2) - u))
    exp_anchor = np.max(np.abs(sigma ** -2 - (-np.log1p(-u))))
    ok = gauss < 1e-10 and gamma_rt < 1e-10 and exp_anchor < 1e-12
    return ("quantile round-trips", ok,
            f"gauss {gauss:.1e}, gamma {gamma_rt:.1e}, exp anchor {exp_anchor:.1e}")


def _check_sorted_law(n_draws=100_000):
    rng = np.random.default_rng(2024)
    for k in (2, 3, 5):
        u = rng.random((n_draws, k))
        t = np.apply_along_axis(forced_identifiability, 1, u)
        worst = max(kstest(t[:, i], beta_dist(i + 1, k - i).cdf).statistic
                    for i in range(k))
        yield (f"sorted-coordinate law k={k}", worst < 0.01,
               f"max KS statistic {worst:.4f} over {n_draws} draws")


def _check_constant_likelihood():
    for ndim in (2, 20):
        cfg = sampler_mod.SamplerConfig(n_live=100, n_repeats=4, seed=5)
        run = sampler_mod.run_nested(lambda u: (u, -3.25), ndim, cfg)
        yield (f"constant-likelihood identity D={ndim}",
               abs(run.log_z + 3.25) < 1e-3,
               f"log Z = {run.log_z:.6f} vs -3.25")


def _toy_log_like(P):
    d1 = (P[:, 0] - 0.3) / 0.08
    d2 = (P[:, 1] - 0.62) / 0.11
    return -0.5 * (d1 ** 2 + d2 ** 2 - 1.2 * d1 * d2) / (1 - 0.36) - 1.0


def _check_toy_quadrature():
    grid = oracle_mod.grid_log_evidence(_toy_log_like, 2, 1500)
    worst = 0.0
    for seed in range(5):
        cfg = sampler_mod.SamplerConfig(n_live=150, seed=seed)
        run = sampler_mod.run_nested(
            lambda u: (u, float(_toy_log_like(u[None, :])[0])), 2, cfg)
        worst = max(worst, abs(run.log_z - grid) / run.log_z_err)
    return ("2-D sampler vs quadrature", worst <= 3.0,
            f"worst deviation {worst:.2f} sigma over 5 seeds")


def _check_ensemble_arithmetic():
    value = ensemble_mod.combined_evidence(REFERENCE_LADDER)
    return ("ensemble arithmetic", abs(value - REFERENCE_COMBINED) <= 0.01,
            f"combined evidence {value:.4f} vs {REFERENCE_COMBINED}")


def _check_sampler_vs_oracle(data_path, n_live=500):
    dataset = data_mod.whiten(data_mod.load_table(data_path))
    split = data_mod.make_splits(dataset.n_rows, DEFAULT_MASTER_SEED, 1)[0]
    train = dataset.subset(split.train_idx)
    truth = oracle_mod.blr_log_evidence(train)
    run = sampler_mod.run(parse_name("br"), train,
                          sampler_mod.SamplerConfig(n_live=n_live, seed=7))
    pull = abs(run.log_z - truth) / run.log_z_err
    return ("linear-model sampler vs closed form", pull <= 3.0,
            f"sampled {run.log_z:.2f} vs exact {truth:.2f} "
            f"({pull:.2f} sigma, err {run.log_z_err:.3f})")


def _check_hierarchical_gap(data_path, n_live=200):
    dataset = data_mod.whiten(data_mod.load_table(data_path))
    split = data_mod.make_splits(dataset.n_rows, DEFAULT_MASTER_SEED, 1)[0]
    train = dataset.subset(split.train_idx)
    log_zs = {}
    for name in ("(2)", "sh sv (2)"):
        run = sampler_mod.run(parse_name(name), train,
                              sampler_mod.SamplerConfig(n_live=n_live, seed=11))
        log_zs[name] = run.log_z
    gap = log_zs["sh sv (2)"] - log_zs["(2)"]
    return ("hierarchical-prior evidence gap", gap > 80.0,
            f"gap {gap:.1f} nats (sampled widths {log_zs['sh sv (2)']:.1f} "
            f"vs fixed {log_zs['(2)']:.1f})")
