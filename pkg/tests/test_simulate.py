import numpy as np
import pytest

import countsel as cs
from countsel.errors import DataFormatError, DomainError

POISSON = cs.EmissionFamily.poisson()
NB8 = cs.EmissionFamily.negbinomial(8)
BERNOULLI = cs.EmissionFamily.bernoulli()


class TestSampleEmission:
    def test_poisson_moments(self):
        rng = cs.make_rng(42)
        draws = np.array([cs.sample_emission(POISSON, 2.0, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 2.0) <= 0.02
        assert abs(draws.var() - 2.0) <= 0.05

    def test_negative_binomial_moments(self):
        # p = r / (r + lam) = 0.8, variance lam + lam^2 / r = 2.5
        rng = cs.make_rng(43)
        draws = np.array([cs.sample_emission(NB8, 2.0, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 2.0) <= 0.03
        assert abs(draws.var() - 2.5) <= 0.05

    def test_bernoulli_mean(self):
        rng = cs.make_rng(44)
        draws = np.array([cs.sample_emission(BERNOULLI, 0.3, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 0.3) <= 0.01
        assert set(np.unique(draws)) <= {0, 1}

    def test_bernoulli_domain_error(self):
        rng = cs.make_rng(45)
        with pytest.raises(DomainError):
            cs.sample_emission(BERNOULLI, 1.4, rng)


class TestSimulate:
    def test_model_a_stationary_mean(self):
        # E lam = a0 / (1 - sum alphas) = 0.5 / 0.45
        spec = cs.ModelSpec(POISSON, cs.Ingarch(2, 0))
        theta = cs.ParamVector(0.5, (0.3, 0.25))
        y = cs.simulate(spec, theta, cs.SimConfig(n=100_000, seed=1))
        target = 0.5 / 0.45
        assert abs(y.mean() - target) <= 0.02 * target

    def test_model_b_stationary_mean(self):
        spec = cs.ModelSpec(POISSON, cs.Ingarch(1, 1))
        theta = cs.ParamVector(1.0, (0.3,), (0.45,))
        y = cs.simulate(spec, theta, cs.SimConfig(n=100_000, seed=2))
        assert abs(y.mean() - 4.0) <= 0.02 * 4.0

    def test_intercept_only_iid_poisson(self):
        spec = cs.ModelSpec(POISSON, cs.Ingarch(0, 0))
        y = cs.simulate(spec, cs.ParamVector(0.7), cs.SimConfig(n=10_000, seed=3))
        assert abs(y.mean() - 0.7) <= 0.03

    def test_determinism(self):
        spec = cs.ModelSpec(NB8, cs.Knot((2,), True))
        theta = cs.ParamVector(1.0, (0.2,), (0.15,), (0.35,))
        cfg = cs.SimConfig(n=500, burn_in=200, seed=77)
        y1 = cs.simulate(spec, theta, cfg)
        y2 = cs.simulate(spec, theta, cfg)
        assert np.array_equal(y1, y2)

    def test_values_are_nonnegative_integers(self):
        spec = cs.ModelSpec(POISSON, cs.Ingarch(1, 1))
        y = cs.simulate(spec, cs.ParamVector(1.0, (0.3,), (0.45,)), cs.SimConfig(n=2000, seed=5))
        assert y.dtype == np.int64
        assert y.min() >= 0

    def test_bernoulli_series_is_binary(self):
        spec = cs.ModelSpec(BERNOULLI, cs.Ingarch(1, 1))
        y = cs.simulate(spec, cs.ParamVector(0.1, (0.35,), (0.4,)), cs.SimConfig(n=5000, seed=6))
        assert set(np.unique(y)) <= {0, 1}

    def test_knot_model_second_moment_stable_across_seeds(self):
        # finite-variance sanity for the built-in knot scenario, r = 8
        spec = cs.ModelSpec(NB8, cs.Knot((2,), True))
        theta = cs.ParamVector(1.0, (0.2,), (0.15,), (0.35,))
        variances = []
        ses = []
        for seed in (11, 12):
            y = cs.simulate(spec, theta, cs.SimConfig(n=100_000, seed=seed)).astype(float)
            variances.append(y.var())
            # block jackknife standard error of the variance estimate
            blocks = y[: 100 * 1000].reshape(100, 1000)
            leave_one_out = np.array([
                np.delete(blocks, i, axis=0).ravel().var() for i in range(100)
            ])
            dev2 = (leave_one_out - leave_one_out.mean()) ** 2
            ses.append(np.sqrt(99 / 100 * dev2.sum()))
        band = 3.0 * np.hypot(ses[0], ses[1])
        assert abs(variances[0] - variances[1]) <= band

    def test_rejects_bad_config(self):
        with pytest.raises(DomainError):
            cs.SimConfig(n=0, seed=1)
        with pytest.raises(DomainError):
            cs.SimConfig(n=10, burn_in=-1, seed=1)


class TestCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "series.csv"
        y = np.array([0, 3, 1, 5])
        cs.write_csv(y, path, header=True)
        assert path.read_text() == "y\n0\n3\n1\n5\n"
        back = cs.read_csv(path)
        assert np.array_equal(back, y)

    def test_negative_value_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1\n2\n-1\n")
        with pytest.raises(DataFormatError) as err:
            cs.read_csv(path)
        assert err.value.line == 3

    def test_non_integer_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y\n1\nx\n")
        with pytest.raises(DataFormatError) as err:
            cs.read_csv(path)
        assert err.value.line == 3
