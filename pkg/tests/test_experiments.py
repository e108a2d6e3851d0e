import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from shapereg import ConvexOnDesign, InvalidArgument, is_member, statdim_isotonic_exact
from shapereg.experiments import (
    ExperimentConfig,
    design_equispaced,
    design_geometric,
    design_uniform,
    fit_power_law,
    make_truth,
    objective_gap_unimodal_convex,
    oracle_check,
    risk_mc,
    run_experiment,
    tangent_decomposition_check,
    worst_case_design_for,
    worst_case_eps,
)


class TestDesigns:
    def test_equispaced(self):
        assert_allclose(design_equispaced(3, 0, 2).x, [0, 1, 2])

    def test_geometric(self):
        assert_allclose(design_geometric(3, 0.5).x, [-0.5, -0.25, -0.125])
        x = design_geometric(5, 0.9).x
        assert np.all(np.diff(x) > 0) and np.all(x < 0)

    def test_uniform(self):
        d = design_uniform(50, seed=3)
        assert d == design_uniform(50, seed=3)
        assert np.all((d.x > 0) & (d.x < 1))

    @pytest.mark.parametrize("call", [lambda: design_equispaced(3, 1, 1), lambda: design_geometric(3, 1.0), lambda: design_geometric(3, 0.0)])
    def test_invalid(self, call):
        with pytest.raises(InvalidArgument):
            call()


class TestWorstCase:
    def test_doubling(self):
        mu = [1.0, 2.0, 4.0]
        assert worst_case_eps(mu) == 0.5
        d = worst_case_design_for(mu)
        assert_allclose(d.x, [-0.5, -0.25, -0.125])
        assert is_member(ConvexOnDesign(d), mu)

    def test_linear_clipped(self):
        mu = [0.0, 1.0, 2.0]
        assert worst_case_eps(mu) == 0.5
        assert is_member(ConvexOnDesign(worst_case_design_for(mu)), mu)

    def test_two_points(self):
        assert worst_case_design_for([0.0, 3.0]).n == 2

    def test_shrinking_increments(self):
        mu = np.concatenate([[0.0], np.cumsum(0.8 ** np.arange(6))])
        assert_allclose(worst_case_eps(mu), 0.5)
        mu = np.concatenate([[0.0], np.cumsum(0.3 ** np.arange(6))])
        assert_allclose(worst_case_eps(mu), 0.3)
        assert is_member(ConvexOnDesign(worst_case_design_for(mu)), mu)

    def test_not_increasing(self):
        with pytest.raises(InvalidArgument):
            worst_case_design_for([0.0, 1.0, 1.0])

    def test_long_exp_truth(self):
        mu = make_truth({"family": "exp_increments"}, 2048)
        d = worst_case_design_for(mu)
        assert is_member(ConvexOnDesign(d), mu)


class TestTruths:
    def test_families(self):
        assert_allclose(make_truth({"family": "constant", "level": 2.0}, 3), [2, 2, 2])
        assert_allclose(make_truth({"family": "steps", "k": 3}, 6), [0, 0, 0.5, 0.5, 1, 1])
        assert_allclose(make_truth({"family": "linear", "v": 2.0}, 3), [0, 1, 2])
        assert_allclose(make_truth({"family": "quadratic"}, 3), [0.25, 0, 0.25])
        mu = make_truth({"family": "exp_increments", "v": 1.0, "rate": 1.0}, 10)
        assert mu[0] == 0 and math.isclose(mu[-1], 1.0) and np.all(np.diff(mu, 2) > 0)

    def test_unknown(self):
        with pytest.raises(InvalidArgument):
            make_truth({"family": "sawtooth"}, 4)


def config(**kw):
    base = dict(estimator="isotonic", truth={"family": "constant"}, sigma=1.0, n_grid=[8, 16], reps=50, seed=0)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"n_grid": [16, 8]}, {"n_grid": []}, {"reps": 1}, {"estimator": "spline"}, {"sigma": -1.0}, {"seed": -3}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgument):
            config(**kw)

    def test_roundtrip(self):
        c = config()
        assert ExperimentConfig(**c.to_dict()) == c


class TestRisk:
    def test_noiseless(self):
        c = config(sigma=0.0, truth={"family": "quadratic"}, n_grid=[10])
        est = risk_mc(c, 10)
        assert est.std_error == 0.0
        _, mu, _ = c.setting(10)
        from shapereg import project_isotonic

        p = project_isotonic(mu).fit
        assert_allclose(est.mean_risk, np.mean((p - mu) ** 2))

    def test_statdim_identity(self):
        n = 32
        c = config(n_grid=[n], reps=3000, sigma=2.0)
        est = risk_mc(c, n)
        scaled = n / 4.0
        assert abs(est.mean_risk * scaled - statdim_isotonic_exact(n)) <= 3 * est.std_error * scaled

    def test_scalar(self):
        for est in ("isotonic", "convex", "unimodal"):
            r = risk_mc(config(estimator=est, n_grid=[1], reps=2000, sigma=1.5), 1)
            assert abs(r.mean_risk - 2.25) <= 3 * r.std_error

    def test_not_in_grid(self):
        with pytest.raises(InvalidArgument):
            risk_mc(config(), 9)

    def test_deterministic_and_threads(self):
        c = config(estimator="convex", truth={"family": "quadratic"}, n_grid=[20])
        assert risk_mc(c, 20, threads=1) == risk_mc(c, 20, threads=3)

    def test_contraction_well_specified(self):
        c = config(estimator="convex", truth={"family": "quadratic"}, n_grid=[40], reps=400)
        est = risk_mc(c, 40)
        assert est.mean_risk <= 1.0 + 3 * est.std_error

    def test_fallback_and_abort(self, monkeypatch):
        import shapereg.experiments as ex
        from shapereg import ConvergenceFailure

        def broken(*a, **k):
            raise ConvergenceFailure("no", iterate=None, residuals={})

        c = config(estimator="convex", truth={"family": "quadratic"}, n_grid=[12], reps=20)
        monkeypatch.setattr(ex, "project_convex", broken)
        ok = risk_mc(c, 12)
        assert ok.failures == 0
        monkeypatch.setattr(ex, "project_convex_dykstra", broken)
        with pytest.raises(ConvergenceFailure):
            risk_mc(c, 12)


class TestOracle:
    def test_well_specified(self):
        c = config(truth={"family": "steps", "k": 3}, n_grid=[60], reps=300)
        _, mu, _ = c.setting(60)
        rep = oracle_check(c, [mu])
        assert rep.passes and rep.rows[0]["feasible"]

    def test_misspecified(self):
        c = config(truth={"family": "quadratic"}, n_grid=[60], reps=300)
        _, mu, _ = c.setting(60)
        from shapereg import project_isotonic

        rep = oracle_check(c, [project_isotonic(mu).fit])
        assert rep.passes

    def test_noiseless(self):
        c = config(sigma=0.0, truth={"family": "steps", "k": 2}, n_grid=[20])
        _, mu, _ = c.setting(20)
        rep = oracle_check(c, [mu])
        assert rep.risk.mean_risk == 0.0
        assert rep.best_rhs == 0.0 and rep.rows[0]["margin"] >= 0

    def test_infeasible_listed(self):
        c = config(n_grid=[4])
        rep = oracle_check(c, [np.zeros(4), np.array([1.0, 0.0, 1.0, 0.0])])
        assert rep.rows[1]["feasible"] is False and rep.rows[1]["reason"]
        assert rep.best_index == 0

    def test_convex_and_unimodal(self):
        for est in ("convex", "unimodal"):
            c = config(estimator=est, truth={"family": "quadratic"}, n_grid=[50], reps=200)
            _, mu, _ = c.setting(50)
            assert oracle_check(c, [mu]).passes


class TestRates:
    def test_exact_power_law(self):
        ns = np.array([64, 128, 256, 512])
        fit = fit_power_law(ns, 3.0 * ns ** (-2 / 3))
        assert_allclose(fit.slope, -2 / 3, rtol=1e-12)
        assert_allclose(fit.r_squared, 1.0)

    def test_nonpositive(self):
        with pytest.raises(InvalidArgument):
            fit_power_law([1, 2, 3, 4], [1.0, 0.0, 1.0, 1.0])

    def test_run_small(self):
        c = config(truth={"family": "linear"}, n_grid=[16, 32, 64, 128], reps=100, sigma=0.5)
        res = run_experiment(c)
        assert len(res.risks) == 4 and res.rate is not None
        assert res.rate.slope < 0


class TestTangent:
    def test_constant(self):
        rep = tangent_decomposition_check(np.zeros(5), reps=500)
        assert rep.block_sizes == [5]
        assert rep.max_discrepancy <= 1e-12

    def test_two_blocks(self):
        rep = tangent_decomposition_check([0, 0, 1, 1], reps=2000, seed=1)
        assert rep.block_sizes == [2, 2] and rep.exact == 3.0
        assert rep.within_3se

    def test_strict(self):
        rep = tangent_decomposition_check(np.arange(4.0), reps=500)
        assert rep.exact == 4.0 and rep.max_discrepancy <= 1e-12

    def test_not_monotone(self):
        with pytest.raises(InvalidArgument):
            tangent_decomposition_check([1.0, 0.0])


def test_unimodal_dominates_convex():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(3, 60))
        d = design_uniform(n, seed=int(rng.integers(1000)))
        assert objective_gap_unimodal_convex(rng.normal(size=n), d) >= 0.0
