"""Spectrum report, oscillatory-source decay series, noise-stability sweep."""

import numpy as np
import pytest

import fracrec as fr


@pytest.fixture(scope="module")
def shell13():
    return fr.make_instability_geometry(13.0, 0.5)


class TestEigenfunctions:
    def test_unit_norm_and_single_sign(self, mach, sets_classic, box):
        vks = fr.dirichlet_eigenfunctions(mach, sets_classic, k_max=4)
        v1 = vks[0]
        om = sets_classic.omega
        nrm = np.sqrt(box.spacing * np.sum(v1.values[om] ** 2))
        assert nrm == pytest.approx(1.0, abs=1e-10)
        assert np.all(v1.values[om] > 0)

    def test_orthogonality(self, mach, sets_classic, box):
        vks = fr.dirichlet_eigenfunctions(mach, sets_classic, k_max=6)
        om = sets_classic.omega
        for i in range(6):
            for j in range(i + 1, 6):
                ip = box.spacing * np.sum(vks[i].values[om] * vks[j].values[om])
                assert abs(ip) <= 1e-10

    def test_second_difference_eigenvalue(self, mach, sets_classic, box):
        # interior second differences reproduce the interval eigenvalue (k pi / L)^2
        vks = fr.dirichlet_eigenfunctions(mach, sets_classic, k_max=3)
        om = sets_classic.omega
        h = box.spacing
        for k, vk in enumerate(vks, start=1):
            vals = vk.values[om]
            lap = (vals[2:] - 2 * vals[1:-1] + vals[:-2]) / h**2
            lam = (k * np.pi / 2.0) ** 2
            inner = slice(2, len(vals) - 4)  # stay away from the support edge
            ratio = -lap[inner] / vals[1:-1][inner]
            assert np.abs(ratio - lam).max() <= 0.02 * lam

    def test_requires_single_interval(self, box):
        m = fr.build_sobolev(box, fr.FractionalOrder(0.5))
        sets = fr.build_index_sets(box, [(-1, -0.25), (0.25, 1)], [(2, 3)], [(2, 3)])
        with pytest.raises(ValueError, match="single interval"):
            fr.dirichlet_eigenfunctions(m, sets, k_max=2)


class TestInstabilitySeries:
    def test_geometry_preconditions(self):
        with pytest.raises(ValueError, match=">= 13"):
            fr.make_instability_geometry(5.0, 0.5)
        with pytest.raises(ValueError, match="box radius"):
            fr.make_instability_geometry(13.0, 0.5, box_radius=12.0)

    def test_norms_positive_and_fit_reported(self, shell13):
        m, sets = shell13
        series = fr.instability_series(m, sets, k_max=12)
        assert np.all(series.hk_norms > 1e-300)
        assert len(series.k_values) == 12
        assert "slope" in series.decay_fit and "r2" in series.decay_fit

    def test_steeper_decay_at_larger_shell_radius(self, shell13):
        m13, sets13 = shell13
        s13 = fr.instability_series(m13, sets13, k_max=12)
        m20, sets20 = fr.make_instability_geometry(20.0, 0.5)
        s20 = fr.instability_series(m20, sets20, k_max=12)
        assert s20.decay_fit["slope"] < s13.decay_fit["slope"]

    def test_scaled_norms_bounded_constant_reported(self, shell13):
        # max_k ||h_k|| 2^k is finite and reported per run
        m, sets = shell13
        series = fr.instability_series(m, sets, k_max=12)
        scaled = series.hk_norms * 2.0 ** series.k_values
        assert np.isfinite(scaled).all()


class TestSpectrumReport:
    def test_columns_and_rank(self, svd_onesided, op_onesided):
        rep = fr.spectrum_report(svd_onesided)
        lead = rep["sigma"][: rep["numerical_rank"]]
        assert np.all(np.diff(lead) < 0)
        assert rep["numerical_rank"] <= op_onesided.n_window
        assert rep["slope"] <= -0.5
        assert len(rep["j"]) == len(rep["sigma"]) == len(rep["log10_sigma"])


@pytest.fixture(scope="module")
def sweep(op_pipeline):
    sigma1 = float(np.linalg.norm(op_pipeline.weighted, 2))
    cfg = fr.RegularizerConfig(
        scheme="spectral",
        alpha_schedule=sigma1 * 10.0 ** (-np.arange(0, 61) / 4.0),
    )
    levels = np.concatenate([[0.0], 10.0 ** np.linspace(-2, -8, 7)])
    return fr.stability_sweep(
        op_pipeline, cfg, trials=3, noise_levels=levels, s_prime=0.25, seed=3
    )


class TestStabilitySweep:
    def test_exact_data_error_at_floor(self, sweep):
        assert sweep.recon_errors[0] <= 2e-2 * sweep.energy

    def test_monotone_in_the_mean(self, sweep):
        noisy = sweep.recon_errors[1:]
        assert np.all(np.diff(noisy) <= 1e-12 + 0 * noisy[:-1])

    def test_log_model_beats_power_law(self, sweep):
        assert sweep.fitted_modulus["sigma"] > 0
        assert sweep.fitted_modulus["residual"] < sweep.power_fit["residual"]

    def test_seeded_determinism(self, op_pipeline):
        sigma1 = float(np.linalg.norm(op_pipeline.weighted, 2))
        cfg = fr.RegularizerConfig(
            scheme="spectral", alpha_schedule=fr.default_alpha_schedule(sigma1)
        )
        levels = 10.0 ** np.linspace(-2, -5, 3)
        a = fr.stability_sweep(op_pipeline, cfg, 2, levels, 0.25, seed=11)
        b = fr.stability_sweep(op_pipeline, cfg, 2, levels, 0.25, seed=11)
        assert np.array_equal(a.per_trial, b.per_trial)

    def test_threaded_matches_serial(self, op_pipeline):
        sigma1 = float(np.linalg.norm(op_pipeline.weighted, 2))
        cfg = fr.RegularizerConfig(
            scheme="spectral", alpha_schedule=fr.default_alpha_schedule(sigma1)
        )
        levels = 10.0 ** np.linspace(-2, -4, 2)
        a = fr.stability_sweep(op_pipeline, cfg, 2, levels, 0.25, seed=5, threads=1)
        b = fr.stability_sweep(op_pipeline, cfg, 2, levels, 0.25, seed=5, threads=4)
        assert np.array_equal(a.per_trial, b.per_trial)

    def test_weak_order_must_be_below_operator_order(self, op_pipeline):
        cfg = fr.RegularizerConfig(scheme="spectral", alpha_schedule=np.array([1e-3]))
        with pytest.raises(ValueError, match="s_prime"):
            fr.stability_sweep(op_pipeline, cfg, 1, np.array([1e-3]), s_prime=0.5)
