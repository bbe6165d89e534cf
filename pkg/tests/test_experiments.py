import numpy as np
import pytest

from svcert.experiments import (
    CostRiskRow,
    SincConfig,
    ValidationReport,
    dataset_csv,
    empirical_risk,
    gen_sinc,
    monte_carlo_validation,
    parse_dataset_csv,
    rho_sweep,
    sweep_csv,
    validation_csv,
)
from svcert.kernels import KernelSpec
from svcert.models import Dataset, certify, fit_svr, svr_complexity

GAUSS = KernelSpec("gaussian")


class TestGenSinc:
    def test_deterministic(self):
        a = gen_sinc(SincConfig(n_train=50, seed=123))
        b = gen_sinc(SincConfig(n_train=50, seed=123))
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.outputs, b.outputs)

    def test_seed_changes_data(self):
        a = gen_sinc(SincConfig(n_train=50, seed=1))
        b = gen_sinc(SincConfig(n_train=50, seed=2))
        assert not np.array_equal(a.inputs, b.inputs)

    def test_range(self):
        d = gen_sinc(SincConfig(n_train=500, seed=0))
        assert d.inputs.min() >= -3.0
        assert d.inputs.max() <= 3.0

    def test_noiseless_limit(self):
        d = gen_sinc(SincConfig(n_train=100, seed=5, noise_scale=1e-12))
        clean = np.sinc(d.inputs[:, 0])
        assert np.abs(d.outputs - clean).max() < 1e-9

    def test_sinc_at_zero_is_one(self):
        assert np.sinc(0.0) == 1.0

    def test_laplace_moments(self):
        scale = 1.0
        n = 100_000
        d = gen_sinc(SincConfig(n_train=n, seed=9, noise_scale=scale))
        noise = d.outputs - np.sinc(d.inputs[:, 0])
        assert abs(noise.mean()) < 3 * scale * np.sqrt(2.0 / n)
        assert noise.var() == pytest.approx(2.0 * scale**2, rel=0.1)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SincConfig(n_train=0)
        with pytest.raises(ValueError):
            SincConfig(noise_scale=0.0)


class TestEmpiricalRisk:
    def test_covering_tube_zero_risk(self):
        rng = np.random.default_rng(0)
        m = rng.uniform(-3, 3, 20)
        train = Dataset(inputs=m, outputs=np.sinc(m))
        model = fit_svr(train, tau=0.01, rho=1e4, kernel=GAUSS)
        grid = np.linspace(-3, 3, 200)
        test = Dataset(inputs=grid, outputs=np.sinc(grid))
        # widen the tube to cover the interpolation error off the samples
        wide = type(model)(
            dual_coeffs=model.dual_coeffs, offset=model.offset, tube=1.0,
            ridge_weight=model.ridge_weight, relax_weight=model.relax_weight,
            kernel=model.kernel, support_inputs=model.support_inputs,
        )
        assert empirical_risk(wide, test) == 0.0

    def test_zero_tube_full_risk(self):
        rng = np.random.default_rng(1)
        m = rng.uniform(-3, 3, 10)
        train = Dataset(inputs=m, outputs=np.sinc(m))
        model = fit_svr(train, tau=0.01, rho=1e4, kernel=GAUSS)
        shrunk = type(model)(
            dual_coeffs=model.dual_coeffs, offset=model.offset, tube=0.0,
            ridge_weight=model.ridge_weight, relax_weight=model.relax_weight,
            kernel=model.kernel, support_inputs=model.support_inputs,
        )
        test = gen_sinc(SincConfig(n_train=2000, seed=2))
        assert empirical_risk(shrunk, test) > 0.99

    def test_boundary_counts_as_non_violation(self):
        from svcert.models import SvrModel

        # exact-interpolation model with a zero-width tube: the residual at
        # the training point is exactly 0, a tie, hence not a violation
        model = SvrModel(
            dual_coeffs=np.zeros(1), offset=2.0, tube=0.0, ridge_weight=0.01,
            relax_weight=1.0, kernel=GAUSS,
            support_inputs=np.array([[0.5]]),
        )
        data = Dataset(inputs=np.array([[0.5]]), outputs=np.array([2.0]))
        assert empirical_risk(model, data) == 0.0


class TestRhoSweep:
    def test_single_rho_matches_direct(self):
        data = gen_sinc(SincConfig(n_train=40, seed=3))
        rows = rho_sweep(data, [0.5], tau=0.01, kernel=GAUSS, beta=0.05)
        assert len(rows) == 1
        model = fit_svr(data, tau=0.01, rho=0.5, kernel=GAUSS)
        s_star = svr_complexity(model, data)
        assert rows[0].complexity == s_star
        assert rows[0].tube == pytest.approx(model.tube, abs=1e-6)
        cert = certify("svr", s_star, 40, 0.05)
        assert rows[0].eps_lower == cert.interval.lower
        assert rows[0].eps_upper == cert.interval.upper

    def test_large_rho_row(self):
        from svcert.kernels import gram_matrix

        rng = np.random.default_rng(3)
        m = rng.uniform(-3, 3, 5)
        data = Dataset(inputs=m, outputs=np.sinc(m))
        rows = rho_sweep(data, [1e6], tau=0.01, kernel=GAUSS, beta=0.05)
        r = rows[0]
        model = fit_svr(data, tau=0.01, rho=1e6, kernel=GAUSS)
        assert float(model.slacks.sum()) <= 1e-6
        K = gram_matrix(GAUSS, data.inputs).values
        ridge = 0.01 * float(model.dual_coeffs @ K @ model.dual_coeffs)
        assert r.cost == pytest.approx(model.tube + ridge, abs=1e-6)

    def test_multiple_rhos_deterministic(self):
        data = gen_sinc(SincConfig(n_train=30, seed=4))
        rhos = [(3 / 5) ** e for e in range(0, 4)]
        a = rho_sweep(data, rhos, tau=0.01, kernel=GAUSS, beta=0.05)
        b = rho_sweep(data, rhos, tau=0.01, kernel=GAUSS, beta=0.05)
        for ra, rb in zip(a, b):
            assert ra == rb

    def test_csv_format(self):
        rows = [CostRiskRow(rho=1.0, cost=2.0, tube=1.5, complexity=3,
                            eps_lower=0.1, eps_upper=0.5)]
        text = sweep_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "rho,cost,tube,s_star,eps_lower,eps_upper"
        assert lines[1].split(",")[3] == "3"

    def test_empty_rhos_rejected(self):
        data = gen_sinc(SincConfig(n_train=10, seed=0))
        with pytest.raises(ValueError):
            rho_sweep(data, [], tau=0.01, kernel=GAUSS, beta=0.05)


class TestMonteCarlo:
    def test_single_trial(self):
        cfg = SincConfig(n_train=30, seed=21)
        rep = monte_carlo_validation(
            cfg, rho=0.3, tau=0.01, kernel=GAUSS, beta=0.05,
            n_trials=1, n_test=500,
        )
        assert rep.n_trials == 1
        assert rep.coverage_count in (0, 1)
        assert len(rep.trials) == 1
        s_star, risk = rep.trials[0]
        assert 0 <= s_star <= 30
        assert 0.0 <= risk <= 1.0

    def test_reproducible(self):
        cfg = SincConfig(n_train=25, seed=33)
        kw = dict(rho=0.3, tau=0.01, kernel=GAUSS, beta=0.05,
                  n_trials=3, n_test=400)
        a = monte_carlo_validation(cfg, **kw)
        b = monte_carlo_validation(cfg, **kw)
        assert a.trials == b.trials
        assert a.coverage_count == b.coverage_count

    def test_coverage_small_batch(self):
        cfg = SincConfig(n_train=60, seed=5)
        rep = monte_carlo_validation(
            cfg, rho=(3 / 5) ** 9, tau=0.01, kernel=GAUSS, beta=0.05,
            n_trials=4, n_test=4000,
        )
        assert rep.coverage_count == 4

    def test_csv_format(self):
        cfg = SincConfig(n_train=25, seed=1)
        rep = monte_carlo_validation(
            cfg, rho=0.3, tau=0.01, kernel=GAUSS, beta=0.05,
            n_trials=2, n_test=300,
        )
        lines = validation_csv(rep).strip().split("\n")
        assert lines[0] == "trial,s_star,empirical_risk,eps_lower,eps_upper,covered"
        assert len(lines) == 3
        assert lines[1].split(",")[0] == "0"

    def test_validates_args(self):
        cfg = SincConfig(n_train=10, seed=0)
        with pytest.raises(ValueError):
            monte_carlo_validation(cfg, rho=0.3, tau=0.01, kernel=GAUSS,
                                   beta=0.05, n_trials=0, n_test=10)


class TestDatasetCsv:
    def test_roundtrip(self):
        data = gen_sinc(SincConfig(n_train=20, seed=6))
        text = dataset_csv(data)
        back = parse_dataset_csv(text, needs_outputs=True)
        assert np.array_equal(back.inputs, data.inputs)
        assert np.array_equal(back.outputs, data.outputs)

    def test_header(self):
        data = gen_sinc(SincConfig(n_train=2, seed=0))
        assert dataset_csv(data).splitlines()[0] == "m,y"

    def test_inputs_only(self):
        data = Dataset(inputs=np.array([[1.0], [2.0]]))
        text = dataset_csv(data)
        assert text.splitlines()[0] == "m"
        back = parse_dataset_csv(text, needs_outputs=False)
        assert back.outputs is None

    def test_parse_error_names_line(self):
        with pytest.raises(ValueError, match="line 3"):
            parse_dataset_csv("m,y\n1.0,2.0\n1.0\n", needs_outputs=True)
        with pytest.raises(ValueError, match="line 2"):
            parse_dataset_csv("m,y\nfoo,2.0\n", needs_outputs=True)
        with pytest.raises(ValueError, match="line 1"):
            parse_dataset_csv("m\n1.0\n", needs_outputs=True)
