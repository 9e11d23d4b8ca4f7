"""Tests for the five channel estimators, identifiability bounds and prediction."""

import numpy as np
import pytest

from dmatensor.errors import IdentifiabilityError, RankDeficiencyError, SymmetryError
from dmatensor.estimators import (
    EstimatorConfig,
    _bilinear_gram,
    fit_type1,
    fit_type2,
    fit_type2_bilinear,
    fit_type3,
    fit_type4,
    min_k,
    predict,
)
from dmatensor.metrics import align_scalar, nmse
from dmatensor.network_model import SystemParameters, build_omega_stack, end_to_end
from dmatensor.scenario import ScenarioSpec, generate_params, measure, sample_configs
from dmatensor.tensor_ops import unfold, vech_indices, build_duplication


def make_problem(n_f=2, n_m=8, n_u=3, coupling=0.8, alpha=0.0, beta=1.0,
                 scen_seed=1, cfg_seed=3, k=None, q=60, snr_db=None, noise_seed=9):
    spec = ScenarioSpec(n_f=n_f, n_m=n_m, n_u=n_u, coupling_strength=coupling,
                        snr_db=snr_db, seed=scen_seed, alpha=alpha, beta=beta)
    p = generate_params(spec)
    configs = sample_configs(n_m, (k or 0) + q, seed=cfg_seed)
    ms = measure(p, configs, snr_db=snr_db, noise_seed=noise_seed)
    train, test = configs[:k], configs[k:]
    h_train, h_test = ms.h_meas[:, :, :k], ms.h_meas[:, :, k:]
    return p, train, test, h_train, h_test


def stacks(p, train, test, n_f, augmented):
    kwargs = {"augmented": True, "n_f": n_f} if augmented else {}
    return (
        build_omega_stack(p.gamma, p.alpha, p.beta, train, **kwargs),
        build_omega_stack(p.gamma, p.alpha, p.beta, test),
    )


EXACT_CFG = EstimatorConfig(max_iter=3000, cost_tol=1e-14, init_seed=0, restarts=6)


class TestMinK:
    def test_type1_paper_dims(self):
        assert min_k("1", 7, 96, 4) == 26

    def test_type4_paper_dims(self):
        assert min_k("4", 7, 96, 4) == 14

    def test_bilinear_bound(self):
        assert min_k("rbf", 3, 8, 2) == 36

    def test_remaining_types(self):
        assert min_k("2", 2, 8, 3) == 4
        assert min_k("3", 2, 8, 3) == 5

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            min_k("5", 2, 8, 3)


class TestType1:
    def test_noiseless_exact_recovery(self):
        k = 2 * min_k("1", 2, 8, 3)
        p, train, test, h_train, h_test = make_problem(k=k)
        core, test_core = stacks(p, train, test, 2, augmented=True)
        rep = fit_type1(h_train, core, EXACT_CFG)
        assert nmse(h_test, predict(rep, test_core)) <= 1e-14
        # H0 is identified directly (no ambiguity)
        assert np.linalg.norm(rep.h0_hat - p.h0) <= 1e-6 * np.linalg.norm(p.h0)

    def test_no_direct_channel_degenerate_case(self):
        # zero coupling and zero H0 reduces to the known-core Tucker-2 case
        rng = np.random.default_rng(3)
        p0 = generate_params(ScenarioSpec(n_f=2, n_m=8, n_u=3, coupling_strength=0.0, seed=4))
        p = SystemParameters(h0=np.zeros((3, 2)), a=p0.a, gamma=p0.gamma, b=p0.b,
                             alpha=0.0, beta=1.0)
        k = 2 * min_k("1", 2, 8, 3)
        configs = sample_configs(8, k + 40, seed=6)
        ms = measure(p, configs)
        core = build_omega_stack(p.gamma, p.alpha, p.beta, configs[:k], augmented=True, n_f=2)
        test_core = build_omega_stack(p.gamma, p.alpha, p.beta, configs[k:])
        rep = fit_type1(ms.h_meas[:, :, :k], core, EXACT_CFG)
        assert nmse(ms.h_meas[:, :, k:], predict(rep, test_core)) <= 1e-14

    def test_k_below_bound_raises(self):
        k_min = min_k("1", 2, 8, 3)
        p, train, test, h_train, _ = make_problem(k=k_min - 1, q=10)
        core, _ = stacks(p, train, test, 2, augmented=True)
        with pytest.raises(IdentifiabilityError) as exc:
            fit_type1(h_train, core, EXACT_CFG)
        assert exc.value.k_min == k_min

    def test_monotone_descent_under_noise(self):
        k = 4 * min_k("1", 2, 8, 3)
        for seed in range(5):
            p, train, test, h_train, _ = make_problem(
                k=k, q=10, snr_db=30.0, scen_seed=20 + seed, noise_seed=seed
            )
            core, _ = stacks(p, train, test, 2, augmented=True)
            rep = fit_type1(h_train, core, EstimatorConfig(max_iter=150, init_seed=seed))
            tr = rep.cost_trace
            assert all(tr[i + 1] <= tr[i] * (1 + 1e-9) for i in range(len(tr) - 1))

    def test_plain_alternation_also_descends(self):
        k = 4 * min_k("1", 2, 8, 3)
        p, train, test, h_train, _ = make_problem(k=k, q=10, snr_db=30.0, noise_seed=2)
        core, _ = stacks(p, train, test, 2, augmented=True)
        cfg = EstimatorConfig(max_iter=100, init_seed=0, line_search=False)
        rep = fit_type1(h_train, core, cfg)
        tr = rep.cost_trace
        assert all(tr[i + 1] <= tr[i] * (1 + 1e-9) for i in range(len(tr) - 1))


class TestType2:
    def test_noiseless_exact_recovery(self):
        k = 2 * min_k("2", 2, 8, 3)
        p, train, test, h_train, h_test = make_problem(k=k)
        core, test_core = stacks(p, train, test, 2, augmented=False)
        rep = fit_type2(h_train - p.h0[:, :, None], core, EXACT_CFG)
        assert nmse(h_test, predict(rep, test_core, h0=p.h0)) <= 1e-14

    def test_zero_row_of_a_stays_zero_in_predictions(self):
        p0 = generate_params(ScenarioSpec(n_f=2, n_m=8, n_u=3, coupling_strength=0.7, seed=12))
        a = p0.a.copy()
        a[0, :] = 0.0
        p = SystemParameters(h0=p0.h0, a=a, gamma=p0.gamma, b=p0.b, alpha=0.0, beta=1.0)
        k = 3 * min_k("2", 2, 8, 3)
        configs = sample_configs(8, k + 30, seed=13)
        ms = measure(p, configs)
        core = build_omega_stack(p.gamma, p.alpha, p.beta, configs[:k])
        test_core = build_omega_stack(p.gamma, p.alpha, p.beta, configs[k:])
        rep = fit_type2(ms.h_meas[:, :, :k] - p.h0[:, :, None], core, EXACT_CFG)
        pred = predict(rep, test_core, h0=p.h0)
        for q in range(pred.shape[2]):
            np.testing.assert_allclose(pred[0, :, q], p.h0[0, :], atol=1e-7)

    def test_agrees_with_type1_up_to_scalar(self):
        k = 3 * min_k("1", 2, 8, 3)
        p, train, test, h_train, _ = make_problem(k=k)
        core_aug, _ = stacks(p, train, test, 2, augmented=True)
        core = build_omega_stack(p.gamma, p.alpha, p.beta, train)
        rep1 = fit_type1(h_train, core_aug, EXACT_CFG)
        rep2 = fit_type2(h_train - p.h0[:, :, None], core, EXACT_CFG)
        _, res_a, res_b = align_scalar(rep2.a_hat, rep2.b_hat, rep1.a_hat, rep1.b_hat)
        assert res_a <= 1e-6 and res_b <= 1e-6

    def test_k_below_bound_raises(self):
        k_min = min_k("2", 2, 8, 3)
        p, train, test, h_train, _ = make_problem(k=k_min - 1, q=10)
        core, _ = stacks(p, train, test, 2, augmented=False)
        with pytest.raises(IdentifiabilityError):
            fit_type2(h_train - p.h0[:, :, None], core, EXACT_CFG)

    def test_monotone_descent_under_noise(self):
        k = 4 * min_k("2", 2, 8, 3)
        for seed in range(5):
            p, train, test, h_train, _ = make_problem(
                k=k, q=10, snr_db=30.0, scen_seed=30 + seed, noise_seed=seed
            )
            core, _ = stacks(p, train, test, 2, augmented=False)
            rep = fit_type2(h_train - p.h0[:, :, None], core,
                            EstimatorConfig(max_iter=150, init_seed=seed))
            tr = rep.cost_trace
            assert all(tr[i + 1] <= tr[i] * (1 + 1e-9) for i in range(len(tr) - 1))


class TestBilinear:
    def test_noiseless_exact_recovery(self):
        n_m = 6
        k = 2 * min_k("rbf", 2, n_m, 3)
        p, train, test, h_train, h_test = make_problem(n_m=n_m, k=k, q=20, cfg_seed=8)
        core, test_core = stacks(p, train, test, 2, augmented=False)
        rep = fit_type2_bilinear(h_train - p.h0[:, :, None], core, EXACT_CFG)
        assert nmse(h_test, predict(rep, test_core, h0=p.h0)) <= 1e-14
        assert rep.zf_residual_rel <= 1e-10

    def test_vech_stack_factorization_is_exact(self):
        # duplication identity applied to the whole stack: T_(3)^T == W @ S_bar
        p, train, test, *_ = make_problem(n_m=5, k=12, q=5)
        core, _ = stacks(p, train, test, 2, augmented=False)
        rows, cols = vech_indices(5)
        s_bar = core[rows, cols, :]
        w, _ = build_duplication(5)
        np.testing.assert_array_equal(unfold(core, 3).T, w @ s_bar)

    def test_decoupled_zero_coupling_case(self):
        n_m = 5
        k = min_k("rbf", 2, n_m, 3) + 5
        p, train, test, h_train, h_test = make_problem(
            n_m=n_m, coupling=0.0, k=k, q=10, cfg_seed=4
        )
        core, test_core = stacks(p, train, test, 2, augmented=False)
        rep = fit_type2_bilinear(h_train - p.h0[:, :, None], core, EXACT_CFG)
        assert rep.decoupled_core
        assert nmse(h_test, predict(rep, test_core, h0=p.h0)) <= 1e-14

    def test_k_below_vech_bound_raises(self):
        n_m = 6
        bound = min_k("rbf", 2, n_m, 3)
        p, train, test, h_train, _ = make_problem(n_m=n_m, k=bound - 1, q=10, cfg_seed=8)
        core, _ = stacks(p, train, test, 2, augmented=False)
        with pytest.raises(IdentifiabilityError) as exc:
            fit_type2_bilinear(h_train - p.h0[:, :, None], core, EXACT_CFG)
        assert str(bound) in str(exc.value)

    def test_duplicate_configs_trigger_rank_error(self):
        n_m = 4
        bound = min_k("rbf", 2, n_m, 3)
        p, train, test, h_train, _ = make_problem(n_m=n_m, k=bound, q=5, cfg_seed=2)
        train_dup = train.copy()
        train_dup[1] = train_dup[0]  # duplicated column in the vech stack
        core = build_omega_stack(p.gamma, p.alpha, p.beta, train_dup)
        h_dup = np.stack([end_to_end(p, v) for v in train_dup], axis=2)
        with pytest.raises(RankDeficiencyError):
            fit_type2_bilinear(h_dup - p.h0[:, :, None], core, EXACT_CFG)

    def test_asymmetric_core_rejected(self):
        p, train, test, h_train, _ = make_problem(n_m=4, k=10, q=5, cfg_seed=2)
        core, _ = stacks(p, train, test, 2, augmented=False)
        core = core.copy()
        core[0, 1, 0] += 1.0  # break reciprocity in one slice
        with pytest.raises(SymmetryError):
            fit_type2_bilinear(h_train - p.h0[:, :, None], core, EXACT_CFG)

    def test_gram_structure_for_orthonormal_columns(self):
        n_m = 4
        x = np.linalg.qr(np.random.default_rng(0).standard_normal((6, n_m)))[0]
        g = _bilinear_gram(x)
        np.testing.assert_allclose(np.diag(g), np.full(n_m, n_m), atol=1e-12)
        np.testing.assert_allclose(g - np.diag(np.diag(g)), 0, atol=1e-12)


class TestOneShotTypes:
    def test_type3_exact_parameter_recovery(self):
        k = 2 * min_k("3", 2, 8, 3)
        p, train, test, h_train, h_test = make_problem(k=k)
        core, test_core = stacks(p, train, test, 2, augmented=True)
        rep = fit_type3(h_train, core, p.b, EXACT_CFG)
        assert np.linalg.norm(rep.h0_hat - p.h0) <= 1e-10 * np.linalg.norm(p.h0)
        assert np.linalg.norm(rep.a_hat - p.a) <= 1e-10 * np.linalg.norm(p.a)
        assert nmse(h_test, predict(rep, test_core, b=p.b)) <= 1e-20

    def test_type3_zero_a_detected(self):
        p0 = generate_params(ScenarioSpec(n_f=2, n_m=8, n_u=3, coupling_strength=0.6, seed=7))
        p = SystemParameters(h0=p0.h0, a=np.zeros_like(p0.a), gamma=p0.gamma, b=p0.b,
                             alpha=0.0, beta=1.0)
        k = 2 * min_k("3", 2, 8, 3)
        configs = sample_configs(8, k, seed=5)
        ms = measure(p, configs)
        core = build_omega_stack(p.gamma, p.alpha, p.beta, configs, augmented=True, n_f=2)
        rep = fit_type3(ms.h_meas, core, p.b, EXACT_CFG)
        assert np.linalg.norm(rep.a_hat) <= 1e-10
        np.testing.assert_allclose(rep.h0_hat, p.h0, atol=1e-10)

    def test_type3_boundary(self):
        # exactly at the bound solvable (generic), below it the guard fires
        k_min = min_k("3", 1, 12, 3)
        p, train, test, h_train, _ = make_problem(
            n_f=1, n_m=12, k=k_min, q=5, alpha=-1.0, beta=1.0, cfg_seed=17
        )
        core, _ = stacks(p, train, test, 1, augmented=True)
        fit_type3(h_train, core, p.b, EXACT_CFG)
        with pytest.raises(IdentifiabilityError):
            fit_type3(h_train[:, :, : k_min - 1], core[:, :, : k_min - 1], p.b, EXACT_CFG)

    def test_type4_exact_parameter_recovery(self):
        k = 2 * min_k("4", 2, 8, 3)
        p, train, test, h_train, h_test = make_problem(k=k)
        core, test_core = stacks(p, train, test, 2, augmented=False)
        rep = fit_type4(h_train - p.h0[:, :, None], core, p.b, EXACT_CFG)
        assert np.linalg.norm(rep.a_hat - p.a) <= 1e-10 * np.linalg.norm(p.a)
        assert nmse(h_test, predict(rep, test_core, h0=p.h0, b=p.b)) <= 1e-20

    def test_type4_zero_data_gives_zero_a(self):
        p, train, test, h_train, _ = make_problem(k=8, q=5)
        core, _ = stacks(p, train, test, 2, augmented=False)
        rep = fit_type4(np.zeros_like(h_train), core, p.b, EXACT_CFG)
        assert not rep.a_hat.any()

    def test_type4_boundary(self):
        k_min = min_k("4", 1, 12, 3)
        p, train, test, h_train, _ = make_problem(
            n_f=1, n_m=12, k=k_min, q=5, alpha=-1.0, beta=1.0, cfg_seed=19
        )
        core, _ = stacks(p, train, test, 1, augmented=False)
        fit_type4(h_train - p.h0[:, :, None], core, p.b, EXACT_CFG)
        with pytest.raises(IdentifiabilityError):
            fit_type4(h_train[:, :, : k_min - 1] - p.h0[:, :, None],
                      core[:, :, : k_min - 1], p.b, EXACT_CFG)


class TestIdentifiabilityThresholds:
    # scenario with well-separated binary configurations: the dimensional
    # bound is generically sharp (see the acceptance suite for 10 seeds)
    N_F, N_M, N_U = 1, 12, 3

    @pytest.mark.parametrize("est_type", ["1", "2", "3", "4"])
    def test_threshold_dichotomy(self, est_type):
        for seed in range(3):
            k_min = min_k(est_type, self.N_F, self.N_M, self.N_U)
            p, train, test, h_train, _ = make_problem(
                n_f=self.N_F, n_m=self.N_M, n_u=self.N_U, coupling=0.7,
                alpha=-1.0, beta=1.0, scen_seed=100 + seed, cfg_seed=200 + seed,
                k=k_min, q=5,
            )
            aug = est_type in ("1", "3")
            core, _ = stacks(p, train, test, self.N_F, augmented=aug)
            cfg = EstimatorConfig(max_iter=30, init_seed=0)
            hd = h_train - p.h0[:, :, None]
            runners = {
                "1": lambda c, h: fit_type1(h, c, cfg),
                "2": lambda c, h: fit_type2(h, c, cfg),
                "3": lambda c, h: fit_type3(h, c, p.b, cfg),
                "4": lambda c, h: fit_type4(h, c, p.b, cfg),
            }
            data = h_train if est_type in ("1", "3") else hd
            runners[est_type](core, data)  # at the bound: must not raise
            with pytest.raises(IdentifiabilityError):
                runners[est_type](core[:, :, :-1], data[:, :, :-1])


class TestPredict:
    def test_training_residual_matches_cost_trace(self):
        k = 3 * min_k("2", 2, 8, 3)
        p, train, test, h_train, _ = make_problem(k=k, snr_db=25.0, noise_seed=3)
        core, _ = stacks(p, train, test, 2, augmented=False)
        rep = fit_type2(h_train - p.h0[:, :, None], core, EstimatorConfig(max_iter=80))
        pred = predict(rep, core, h0=p.h0)
        resid = float(np.sum(np.abs(h_train - pred) ** 2))
        assert abs(resid - rep.cost_trace[-1]) <= 1e-9 * max(rep.cost_trace[-1], 1e-30)

    def test_ground_truth_parameters_reproduce_forward_model(self):
        p, train, test, *_ = make_problem(k=4, q=10)
        test_core = build_omega_stack(p.gamma, p.alpha, p.beta, test)
        pred = predict(None, test_core, h0=p.h0, a=p.a, b=p.b)
        for q in range(test.shape[0]):
            direct = end_to_end(p, test[q])
            assert np.linalg.norm(pred[:, :, q] - direct) <= 1e-12 * np.linalg.norm(direct)

    def test_reciprocal_scaling_cancels(self):
        p, train, test, *_ = make_problem(k=4, q=10)
        test_core = build_omega_stack(p.gamma, p.alpha, p.beta, test)
        base = predict(None, test_core, h0=p.h0, a=p.a, b=p.b)
        g = 2.3 - 1.4j
        scaled = predict(None, test_core, h0=p.h0, a=g * p.a, b=p.b / g)
        assert np.linalg.norm(scaled - base) <= 1e-12 * np.linalg.norm(base)

    def test_augmented_and_plain_stacks_agree(self):
        p, train, test, *_ = make_problem(k=4, q=8)
        plain = build_omega_stack(p.gamma, p.alpha, p.beta, test)
        aug = build_omega_stack(p.gamma, p.alpha, p.beta, test, augmented=True, n_f=2)
        p1 = predict(None, plain, h0=p.h0, a=p.a, b=p.b)
        p2 = predict(None, aug, h0=p.h0, a=p.a, b=p.b)
        np.testing.assert_allclose(p1, p2, rtol=1e-12)

    def test_missing_parameter_raises(self):
        p, train, test, *_ = make_problem(k=4, q=5)
        test_core = build_omega_stack(p.gamma, p.alpha, p.beta, test)
        with pytest.raises(ValueError, match="missing"):
            predict(None, test_core, h0=p.h0, a=p.a)


class TestEstimatorConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            EstimatorConfig(max_iter=0)
        with pytest.raises(ValueError):
            EstimatorConfig(cost_tol=-1.0)
        with pytest.raises(ValueError):
            EstimatorConfig(init_mode="provided")
        with pytest.raises(ValueError):
            EstimatorConfig(restarts=0)

    def test_provided_initialization_used(self):
        k = 3 * min_k("2", 2, 8, 3)
        p, train, test, h_train, _ = make_problem(k=k)
        core, _ = stacks(p, train, test, 2, augmented=False)
        cfg = EstimatorConfig(max_iter=3, init_mode="provided", init_b=p.b)
        rep = fit_type2(h_train - p.h0[:, :, None], core, cfg)
        # warm start at the truth: residual stays at machine floor
        assert rep.cost_trace[0] <= 1e-20
