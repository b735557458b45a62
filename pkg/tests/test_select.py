import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import countsel as cs
from countsel.errors import DomainError

POISSON = cs.EmissionFamily.poisson()


class TestPenalty:
    def test_log_n_values(self):
        assert cs.penalty_value(cs.Penalty.log_n(), 1000) == pytest.approx(6.907755, abs=1e-6)
        assert cs.penalty_value(cs.Penalty.log_n(), 2000) == pytest.approx(7.600902, abs=1e-6)

    def test_power_third(self):
        assert cs.penalty_value(cs.Penalty.power(1 / 3), 1000) == pytest.approx(10.0, abs=1e-9)

    def test_log_n_needs_two_observations(self):
        with pytest.raises(DomainError):
            cs.penalty_value(cs.Penalty.log_n(), 1)

    def test_power_delta_range(self):
        with pytest.raises(DomainError):
            cs.Penalty.power(1.0)
        with pytest.raises(DomainError):
            cs.Penalty.power(0.0)

    def test_custom_penalty_bounds_checked(self):
        bad = cs.Penalty.custom(lambda n: float(2 * n), "2n")
        with pytest.raises(DomainError):
            cs.penalty_value(bad, 100)
        good = cs.Penalty.custom(lambda n: math.log(n) ** 2, "log^2 n")
        assert cs.penalty_value(good, 100) == pytest.approx(math.log(100) ** 2)

    def test_parse(self):
        assert cs.Penalty.parse("logn").kind == "logn"
        assert cs.Penalty.parse("pow:0.3333").delta == pytest.approx(0.3333)
        with pytest.raises(DomainError):
            cs.Penalty.parse("aic")

    @given(st.integers(2, 10**6))
    @settings(max_examples=50, deadline=None)
    def test_penalties_increasing_and_below_n(self, n):
        for pen in (cs.Penalty.log_n(), cs.Penalty.power(1 / 3)):
            v = cs.penalty_value(pen, n)
            assert 0 < v < n
            assert cs.penalty_value(pen, n + 1) > v


class TestCriterion:
    def test_examples(self):
        assert cs.criterion(0.0, 2, 1.0) == 2.0
        assert cs.criterion(-100.0, 0, 6.9078) == 200.0
        assert cs.criterion(-523.4, 3, 7.6009) == pytest.approx(1069.6027)

    @given(st.floats(-1e6, 1e6), st.integers(0, 20), st.floats(0.01, 100))
    @settings(max_examples=50, deadline=None)
    def test_decomposition(self, ll, dim, kappa):
        assert cs.criterion(ll, dim, kappa) == -2.0 * ll + kappa * dim


class TestEnumerate:
    def test_full_ingarch_grid_has_36_models(self):
        assert len(cs.enumerate_ingarch(POISSON, 5, 5)) == 36

    def test_trivial_grid(self):
        models = cs.enumerate_ingarch(POISSON, 0, 0)
        assert len(models) == 1
        assert models[0].dim == 0

    def test_dims_of_small_grid(self):
        models = cs.enumerate_ingarch(POISSON, 2, 1)
        assert sorted(m.dim for m in models) == [0, 1, 1, 2, 2, 3]

    def test_knot_collection_size(self):
        models = cs.enumerate_knots(8, 3, (1, 2, 3, 4))
        assert len(models) == 1 + 4 + 6 + 4
        assert sorted({m.dim for m in models}) == [2, 3, 4, 5]

    def test_knot_collection_kmax_zero(self):
        models = cs.enumerate_knots(8, 0, (1, 2, 3, 4))
        assert len(models) == 1
        assert models[0].form.K == 0

    def test_knot_collection_single_candidate(self):
        assert len(cs.enumerate_knots(1, 1, (2,))) == 2

    def test_invalid_kmax(self):
        with pytest.raises(DomainError):
            cs.enumerate_knots(1, 3, (1, 2))


@pytest.fixture(scope="module")
def model_a_series():
    spec, theta, _ = cs.preset("model-a")
    return cs.simulate(spec, theta, cs.SimConfig(n=800, seed=42))


class TestSelect:
    def test_singleton_collection(self, model_a_series):
        spec = cs.ModelSpec(POISSON, cs.Ingarch(1, 0))
        res = cs.select([spec], model_a_series, cs.Penalty.log_n())
        assert res.chosen == 0
        assert res.chosen_row.model == spec

    def test_fits_shared_across_penalties(self, model_a_series):
        collection = cs.enumerate_ingarch(POISSON, 2, 1)
        res_log, res_pow = cs.select_with_penalties(
            collection, model_a_series, [cs.Penalty.log_n(), cs.Penalty.power(1 / 3)]
        )
        for row_a, row_b in zip(res_log.table, res_pow.table):
            assert row_a.loglik == row_b.loglik
        assert res_log.kappa != res_pow.kappa

    def test_criterion_decomposition_on_table(self, model_a_series):
        collection = cs.enumerate_ingarch(POISSON, 2, 1)
        res = cs.select(collection, model_a_series, cs.Penalty.log_n())
        for row in res.table:
            assert row.criterion == pytest.approx(
                -2.0 * row.loglik + res.kappa * row.dim, abs=1e-9
            )

    def test_chosen_minimizes_criterion(self, model_a_series):
        collection = cs.enumerate_ingarch(POISSON, 2, 2)
        res = cs.select(collection, model_a_series, cs.Penalty.log_n())
        assert res.chosen_row.criterion == min(r.criterion for r in res.table)

    def test_rerun_is_identical(self, model_a_series):
        collection = cs.enumerate_ingarch(POISSON, 2, 1)
        r1 = cs.select(collection, model_a_series, cs.Penalty.log_n())
        r2 = cs.select(collection, model_a_series, cs.Penalty.log_n())
        assert r1.chosen == r2.chosen
        assert json.dumps(r1.to_json(), sort_keys=True) == json.dumps(r2.to_json(), sort_keys=True)

    def test_over_penalization_monotonicity(self, model_a_series):
        collection = cs.enumerate_ingarch(POISSON, 2, 2)
        res = cs.select(collection, model_a_series, cs.Penalty.log_n())
        logliks = [row.loglik for row in res.table]
        dims = [row.dim for row in res.table]

        def argmin_dim(kappa):
            crits = [cs.criterion(ll, d, kappa) for ll, d in zip(logliks, dims)]
            order = sorted(range(len(crits)), key=lambda i: (crits[i], dims[i], i))
            return dims[order[0]]

        previous = None
        for kappa in (0.5, 2.0, 7.0, 20.0, 100.0):
            chosen_dim = argmin_dim(kappa)
            if previous is not None:
                assert chosen_dim <= previous
            previous = chosen_dim

    def test_nested_logliks_monotone_in_table(self, model_a_series):
        collection = cs.enumerate_ingarch(POISSON, 2, 2)
        res = cs.select(collection, model_a_series, cs.Penalty.log_n())
        by_order = {(r.model.form.p, r.model.form.q): r.loglik for r in res.table}
        for (p, q), ll in by_order.items():
            for (p2, q2), ll2 in by_order.items():
                if p2 <= p and q2 <= q:
                    assert ll >= ll2 - 1e-6

    def test_model_a_chosen_on_long_series(self):
        spec, theta, coll = cs.preset("model-a")
        y = cs.simulate(spec, theta, cs.SimConfig(n=2000, seed=5))
        res = cs.select(coll.build(), y, cs.Penalty.log_n())
        assert res.chosen_row.model == spec

    def test_empty_collection_rejected(self, model_a_series):
        with pytest.raises(DomainError):
            cs.select([], model_a_series, cs.Penalty.log_n())

    def test_json_shape(self, model_a_series):
        collection = cs.enumerate_ingarch(POISSON, 1, 1)
        doc = cs.select(collection, model_a_series, cs.Penalty.log_n()).to_json()
        assert set(doc) == {"penalty", "kappa", "n", "models", "chosen"}
        assert all(set(row) == {"model", "dim", "loglik", "criterion", "converged"}
                   for row in doc["models"])

    def test_text_table_marks_chosen(self, model_a_series):
        collection = cs.enumerate_ingarch(POISSON, 1, 0)
        text = cs.select(collection, model_a_series, cs.Penalty.log_n()).to_text()
        assert text.count("*") == 1
        assert "criterion" in text
