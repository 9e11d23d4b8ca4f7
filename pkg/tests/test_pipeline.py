"""Tests for the dataset-to-metrics orchestration layer."""

import numpy as np
import pytest

from dmatensor.errors import IdentifiabilityError, MissingInputError
from dmatensor.estimators import EstimatorConfig, min_k
from dmatensor.pipeline import estimated_parameters, run_estimation, split_dataset
from dmatensor.scenario import ScenarioSpec, generate_params, measure, sample_configs


def make_dataset(n_f=2, n_m=6, n_u=3, coupling=0.7, snr_db=None, alpha=0.0,
                 k_pool=16, q=20, seed=9, reference=True):
    spec = ScenarioSpec(n_f=n_f, n_m=n_m, n_u=n_u, coupling_strength=coupling,
                        snr_db=snr_db, seed=seed, alpha=alpha, beta=1.0)
    p = generate_params(spec)
    configs = sample_configs(n_m, k_pool + q, seed=2, prepend_reference=reference)
    ms = measure(p, configs, snr_db=snr_db, noise_seed=3)
    return ms, p


class TestSplitDataset:
    def test_reference_detected_and_removed_from_pool(self):
        ms, _ = make_dataset()
        split = split_dataset(ms, k_train=10, q_test=20)
        assert split.reference_h is not None
        np.testing.assert_array_equal(split.reference_h, ms.h_meas[:, :, 0])
        assert split.train_configs.shape == (10, 6)
        assert not np.all(split.train_configs[0] == 0)
        assert split.test_configs.shape == (20, 6)

    def test_defaults_to_all_remaining(self):
        ms, _ = make_dataset()
        split = split_dataset(ms, k_train=None, q_test=20)
        assert split.train_configs.shape[0] == 16

    def test_overlapping_split_rejected(self):
        ms, _ = make_dataset()
        with pytest.raises(MissingInputError):
            split_dataset(ms, k_train=30, q_test=20)

    def test_without_reference(self):
        ms, _ = make_dataset(reference=False)
        split = split_dataset(ms, k_train=10, q_test=20)
        assert split.reference_h is None


class TestRunEstimation:
    def test_each_type_reaches_noiseless_floor(self):
        ms, p = make_dataset()
        cfg = EstimatorConfig(max_iter=2000, cost_tol=1e-14, restarts=4)
        for est_type in ("1", "2", "3", "4"):
            outcome = run_estimation(ms, p, est_type, k_train=12, q_test=20, cfg=cfg)
            assert outcome.metrics.nmse <= 1e-14, est_type
            assert outcome.k_train == 12 and outcome.q_test == 20
            assert outcome.report.min_k_required == min_k(est_type, 2, 6, 3)

    def test_k_below_bound_raises_identifiability(self):
        ms, p = make_dataset()
        with pytest.raises(IdentifiabilityError):
            run_estimation(ms, p, "rbf", k_train=10, q_test=20)

    def test_requires_parameters(self):
        ms, _ = make_dataset()
        with pytest.raises(MissingInputError):
            run_estimation(ms, None, "1", k_train=10, q_test=20)

    def test_known_h0_types_require_reference(self):
        ms, p = make_dataset(reference=False)
        with pytest.raises(MissingInputError):
            run_estimation(ms, p, "2", k_train=10, q_test=20)

    def test_known_h0_types_require_zero_alpha(self):
        ms, p = make_dataset(alpha=-1.0)
        with pytest.raises(MissingInputError):
            run_estimation(ms, p, "4", k_train=10, q_test=20)
        run_estimation(ms, p, "1", k_train=10, q_test=20)  # type 1 unaffected

    def test_no_mc_flag_zeroes_the_stacks(self):
        ms, p = make_dataset(coupling=0.0, snr_db=25.0)
        a = run_estimation(ms, p, "1", k_train=12, q_test=20)
        b = run_estimation(ms, p, "1", k_train=12, q_test=20, no_mc=True)
        assert a.metrics.zeta_db == b.metrics.zeta_db

    def test_estimated_parameters_cover_all_fields(self):
        ms, p = make_dataset()
        cfg = EstimatorConfig(max_iter=2000, cost_tol=1e-14, restarts=4)
        outcome = run_estimation(ms, p, "2", k_train=12, q_test=20, cfg=cfg)
        p_est = estimated_parameters(outcome, p)
        np.testing.assert_array_equal(p_est.h0, ms.h_meas[:, :, 0])  # reference slice
        np.testing.assert_array_equal(p_est.gamma, p.gamma)
        assert p_est.a.shape == p.a.shape and p_est.b.shape == p.b.shape


class TestAccuracyHierarchy:
    def test_coupling_aware_estimators_dominate_benchmark(self):
        # At saturation the coupling-aware variants are statistically
        # equivalent (the known-feed solve is marginally better because its
        # prior is exact), while ignoring coupling costs tens of dB.
        spec = ScenarioSpec(n_f=4, n_m=12, n_u=4, coupling_strength=0.8,
                            snr_db=40.0, seed=11, alpha=-1.0, beta=1.0)
        p = generate_params(spec)
        k = 10 * min_k("1", 4, 12, 4)
        configs = sample_configs(12, k + 100, seed=21, prepend_reference=True)
        ms = measure(p, configs, snr_db=40.0, noise_seed=31)
        cfg = EstimatorConfig(max_iter=2000, restarts=3)
        z1 = run_estimation(ms, p, "1", k_train=k, q_test=100, cfg=cfg).metrics.zeta_db
        z3 = run_estimation(ms, p, "3", k_train=k, q_test=100, cfg=cfg).metrics.zeta_db
        z_nomc = run_estimation(ms, p, "1", k_train=k, q_test=100, no_mc=True,
                                cfg=cfg).metrics.zeta_db
        assert z1 >= z3 - 1.0
        assert z3 >= z_nomc + 20.0
        assert z1 >= z_nomc + 20.0
