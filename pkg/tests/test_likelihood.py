import math

import numpy as np
import pytest

import evidencenet as en
from evidencenet.data import Dataset
from evidencenet.model import param_layout

LOG_2PI = math.log(2.0 * math.pi)


def toy_dataset(features, targets):
    features = np.asarray(features, dtype=float)
    return Dataset(features=features, targets=np.asarray(targets, dtype=float),
                   column_means=np.zeros(14), column_stds=np.ones(14))


def br_theta(weights13, bias):
    return np.concatenate([weights13, [bias]])


class TestLogLike:
    def test_zero_residual_unit_sigma(self):
        ds = toy_dataset(np.zeros((1, 13)), [0.0])
        value = en.log_like(en.parse_name("br"), np.zeros(14), ds)
        assert value == pytest.approx(-0.5 * LOG_2PI, abs=1e-12)
        assert value == pytest.approx(-0.91894, abs=1e-5)

    def test_two_unit_residuals(self):
        ds = toy_dataset(np.zeros((2, 13)), [1.0, -1.0])
        value = en.log_like(en.parse_name("br"), np.zeros(14), ds)
        assert value == pytest.approx(-1.0 - LOG_2PI, abs=1e-12)
        assert value == pytest.approx(-2.83788, abs=1e-5)

    def test_zero_residual_sigma_two(self):
        # "sv" without hierarchy is off the standard grid but valid for the library
        spec = en.ModelSpec(en.Architecture(()), granularity="fixed", variable_sigma=True)
        layout = param_layout(spec)
        assert layout.sigma_index == 0
        theta = np.zeros(15)
        theta[0] = 2.0
        ds = toy_dataset(np.zeros((1, 13)), [0.0])
        value = en.log_like(spec, theta, ds)
        assert value == pytest.approx(-math.log(2.0) - 0.5 * LOG_2PI, abs=1e-12)
        assert value == pytest.approx(-1.61209, abs=1e-5)

    def test_additive_over_records(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(20, 13))
        y = rng.normal(size=20)
        spec = en.parse_name("br")
        theta = br_theta(rng.normal(size=13), 0.3)
        whole = en.log_like(spec, theta, toy_dataset(X, y))
        parts = sum(en.log_like(spec, theta, toy_dataset(X[i:i + 1], y[i:i + 1]))
                    for i in range(20))
        assert whole == pytest.approx(parts, abs=1e-9)

    def test_profile_maximized_at_mean_square_residual(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 13))
        y = rng.normal(size=30)
        spec = en.ModelSpec(en.Architecture(()), variable_sigma=True)
        weights = rng.normal(size=14)
        resid = y - (X @ weights[:13] + weights[13])
        chi2 = float(resid @ resid)

        def neg_loglike(sigma):
            theta = np.concatenate([[sigma], weights])
            return -en.log_like(spec, theta, toy_dataset(X, y))

        # golden-section search, independent of the analytic optimum
        lo, hi = 1e-3, 20.0
        phi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c, d = b - phi * (b - a), a + phi * (b - a)
        for _ in range(200):
            if neg_loglike(c) < neg_loglike(d):
                b, d = d, c
                c = b - phi * (b - a)
            else:
                a, c = c, d
                d = a + phi * (b - a)
        sigma_best = 0.5 * (a + b)
        assert sigma_best ** 2 == pytest.approx(chi2 / 30.0, rel=1e-6)

    def test_monotone_in_fit(self):
        spec = en.parse_name("br")
        X = np.zeros((3, 13))
        theta = np.zeros(14)
        worse = en.log_like(spec, theta, toy_dataset(X, [1.0, -2.0, 0.5]))
        better = en.log_like(spec, theta, toy_dataset(X, [1.0, -1.0, 0.5]))
        assert better >= worse

    def test_nonfinite_forward_becomes_minus_inf(self):
        spec = en.parse_name("r (2)")
        evaluator = en.LogLikeEvaluator(spec, toy_dataset(np.ones((2, 13)), [0.0, 0.0]))
        theta = np.full(en.total_dim(spec), 1e200)
        assert evaluator(theta) == -np.inf
        assert evaluator.n_nonfinite == 1
        assert evaluator.n_calls == 1

    def test_call_counter(self):
        spec = en.parse_name("br")
        evaluator = en.LogLikeEvaluator(spec, toy_dataset(np.zeros((1, 13)), [0.0]))
        for _ in range(5):
            evaluator(np.zeros(14))
        assert evaluator.n_calls == 5

    def test_from_hypercube_consistent(self):
        spec = en.parse_name("sh sv (2)")
        rng = np.random.default_rng(2)
        ds = toy_dataset(rng.normal(size=(5, 13)), rng.normal(size=5))
        evaluator = en.LogLikeEvaluator(spec, ds)
        u = rng.random(en.total_dim(spec))
        theta, value = evaluator.from_hypercube(u)
        np.testing.assert_array_equal(theta, en.to_physical(spec, u))
        assert value == en.log_like(spec, theta, ds)
