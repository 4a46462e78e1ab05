import json

import numpy as np
import pytest

from qcmkl import (
    AdamState,
    MKLProblem,
    TrainingConfig,
    adam_step,
    loss_gradient_theta,
    make_spec,
    prepare_gram,
    solve_easymkl,
    train,
)
from qcmkl.kernels import gram_gradient
from qcmkl.data import make_instance
from qcmkl.experiment import stable_seed
from qcmkl.mkl import distance_vector


def small_instance(d=2, n=40, seed=0, class_sep=1.0):
    return make_instance(d, n, class_sep, 2, seed=seed, ratio=0.5, split_seed=seed + 1)


# --- adam -------------------------------------------------------------------


def test_adam_zero_gradient_keeps_theta():
    state = AdamState.initial(3, TrainingConfig())
    theta, new_state = adam_step(np.array([1.0, 2.0, 3.0]), np.zeros(3), state)
    assert np.array_equal(theta, [1.0, 2.0, 3.0])
    assert new_state.t == 1


def test_adam_first_step_magnitude():
    config = TrainingConfig(learning_rate=0.05)
    state = AdamState.initial(2, config)
    theta, _ = adam_step(np.zeros(2), np.array([3.0, -3.0]), state)
    # bias-corrected first step moves by ~lr in the gradient's sign direction
    assert np.allclose(theta, [0.05, -0.05], rtol=1e-6)


def test_adam_ascends_scalar_objective():
    # maximize f(t) = -(t - 2)^2 from 0; gradient is -2(t - 2)
    config = TrainingConfig(learning_rate=0.05)
    state = AdamState.initial(1, config)
    theta = np.array([0.0])
    for _ in range(100):
        theta, state = adam_step(theta, -2.0 * (theta - 2.0), state)
    assert abs(theta[0] - 2.0) < 0.05


def test_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainingConfig(lam=1.0)
    with pytest.raises(ValueError):
        TrainingConfig(max_outer_iters=-1)


# --- loss gradient -----------------------------------------------------------


def test_loss_gradient_zero_for_nonparametric():
    ds = small_instance()
    specs = [make_spec("rx", 2), make_spec("linear", 2)]
    grams = [prepare_gram(s, ds.train_X) for s in specs]
    sol = solve_easymkl(MKLProblem(grams, ds.train_y, 0.2))
    grad = loss_gradient_theta(grams, [[], []], ds.train_y, sol.phi_min, 0.2)
    assert grad.shape == (0,)


def test_loss_gradient_single_kernel_reduction():
    ds = small_instance(seed=3)
    spec = make_spec("rbf", 2)
    gram = prepare_gram(spec, ds.train_X)
    lam = 0.2
    sol = solve_easymkl(MKLProblem([gram], ds.train_y, lam))
    grads = gram_gradient(spec, ds.train_X)
    got = loss_gradient_theta([gram], [grads], ds.train_y, sol.phi_min, lam)
    yphi = ds.train_y * sol.phi_min
    # with R = 1, d_1/||d|| = 1, so the gradient is (1-lam) * phi^T Y dK Y phi
    assert got[0] == pytest.approx((1 - lam) * float(yphi @ grads[0] @ yphi), rel=1e-12)


def test_loss_gradient_degenerate_distance_is_zero():
    from qcmkl import GramMatrix

    K = GramMatrix(np.ones((4, 4)), bounded=True)
    labels = np.array([1, 1, -1, -1])
    phi = np.full(4, 0.5)
    grad = loss_gradient_theta([K], [[np.eye(4)]], labels, phi, 0.2)
    assert np.array_equal(grad, [0.0])


def test_danskin_gradient_matches_resolve_finite_differences():
    rng = np.random.default_rng(21)
    lam = 0.2
    for _ in range(3):
        d, M = 2, 8
        X = rng.uniform(0, 2 * np.pi, (M, d))
        labels = np.array([1] * 4 + [-1] * 4)
        specs = [make_spec("qaoa", d, rng=rng), make_spec("rbf", d, theta=(float(rng.uniform(0.3, 1.5)),))]

        def solve_loss(theta_flat):
            n_q = len(specs[0].theta)
            cur = [specs[0].with_theta(theta_flat[:n_q]), specs[1].with_theta(theta_flat[n_q:])]
            grams = [prepare_gram(s, X) for s in cur]
            return solve_easymkl(MKLProblem(grams, labels, lam), grad_tol=1e-10, obj_tol=1e-15, max_iters=100000).loss

        grams = [prepare_gram(s, X) for s in specs]
        sol = solve_easymkl(MKLProblem(grams, labels, lam), grad_tol=1e-10, obj_tol=1e-15, max_iters=100000)
        gram_grads = [gram_gradient(s, X, normalized=not s.bounded) for s in specs]
        analytic = loss_gradient_theta(grams, gram_grads, labels, sol.phi_min, lam)
        theta_flat = np.array(list(specs[0].theta) + list(specs[1].theta))
        h = 1e-4
        for j in range(len(theta_flat)):
            tp, tm = theta_flat.copy(), theta_flat.copy()
            tp[j] += h
            tm[j] -= h
            fd = (solve_loss(tp) - solve_loss(tm)) / (2 * h)
            assert abs(analytic[j] - fd) / (abs(fd) + 1e-9) < 1e-3


# --- training loop ------------------------------------------------------------


def test_nonparametric_training_equals_single_solve():
    ds = small_instance(seed=5)
    specs = [make_spec("rx", 2), make_spec("linear", 2)]
    result = train(specs, ds.train_X, ds.train_y, TrainingConfig(lam=0.2))
    grams = [prepare_gram(s, ds.train_X) for s in specs]
    sol = solve_easymkl(MKLProblem(grams, ds.train_y, 0.2))
    assert len(result.trace.records) == 1
    assert result.solution.loss == sol.loss
    assert np.array_equal(result.gamma_l1, sol.gamma_l1)
    assert np.array_equal(result.solution.phi_min, sol.phi_min)


def test_zero_outer_iters_equals_weights_only_solve():
    ds = small_instance(seed=6)
    specs = [make_spec("rbf", 2), make_spec("linear", 2)]
    result = train(specs, ds.train_X, ds.train_y, TrainingConfig(lam=0.2, max_outer_iters=0))
    grams = [prepare_gram(s, ds.train_X) for s in specs]
    sol = solve_easymkl(MKLProblem(grams, ds.train_y, 0.2))
    assert len(result.trace.records) == 1
    assert result.gamma_l1 == pytest.approx(sol.gamma_l1)
    assert result.specs[0].theta == specs[0].theta


def test_uniform_combination_is_type_one_baseline():
    from qcmkl import combine_grams

    ds = small_instance(seed=7)
    specs = [make_spec("rx", 2), make_spec("iqp", 2)]
    grams = [prepare_gram(s, ds.train_X) for s in specs]
    baseline = combine_grams(grams, [0.5, 0.5])
    assert np.allclose(baseline.entries, 0.5 * grams[0].entries + 0.5 * grams[1].entries)


def test_best_iterate_dominates_start():
    rng = np.random.default_rng(30)
    ds = small_instance(seed=8, n=30)
    spec = make_spec("qaoa", 2, rng=rng)
    result = train([spec, spec], ds.train_X, ds.train_y,
                   TrainingConfig(lam=0.2, max_outer_iters=30))
    losses = [r.loss for r in result.trace.records]
    assert result.trace.best_iteration == int(np.argmax(losses))
    assert losses[result.trace.best_iteration] >= losses[0]


def test_training_is_deterministic():
    ds = small_instance(seed=9, n=30)
    rng1 = np.random.default_rng(42)
    rng2 = np.random.default_rng(42)
    specs1 = [make_spec("qaoa", 2, rng=rng1), make_spec("rbf", 2)]
    specs2 = [make_spec("qaoa", 2, rng=rng2), make_spec("rbf", 2)]
    config = TrainingConfig(lam=0.2, max_outer_iters=10)
    r1 = train(specs1, ds.train_X, ds.train_y, config)
    r2 = train(specs2, ds.train_X, ds.train_y, config)
    assert [rec.loss for rec in r1.trace.records] == [rec.loss for rec in r2.trace.records]
    assert r1.trace.records[-1].theta == r2.trace.records[-1].theta
    assert np.array_equal(r1.gamma_l1, r2.gamma_l1)


def test_early_stop_on_flat_loss():
    ds = small_instance(seed=10)
    specs = [make_spec("rbf", 2), make_spec("linear", 2)]
    result = train(specs, ds.train_X, ds.train_y,
                   TrainingConfig(lam=0.2, max_outer_iters=50, loss_tolerance=1e9))
    # every relative change counts as flat, so the loop stops after 5 updates
    assert len(result.trace.records) == 6


def test_rbf_scale_stays_positive():
    ds = small_instance(seed=11)
    specs = [make_spec("rbf", 2), make_spec("linear", 2)]
    result = train(specs, ds.train_X, ds.train_y, TrainingConfig(lam=0.2, max_outer_iters=40))
    for record in result.trace.records:
        assert record.theta[0][0] > 0.0


def test_rbf_dominates_linear_combination():
    # Weighting prefers rbf over linear on these instances, trained or not.
    g2, g3 = [], []
    for rep in range(6):
        seed = stable_seed(77, "rbf", "linear", 2, rep)
        ds = make_instance(2, 100, 1.0, 2, seed=stable_seed(seed, "data"), ratio=0.5,
                           split_seed=stable_seed(seed, "split"))
        specs = [make_spec("rbf", 2), make_spec("linear", 2)]
        grams = [prepare_gram(s, ds.train_X) for s in specs]
        sol = solve_easymkl(MKLProblem(grams, ds.train_y, 0.2))
        result = train(specs, ds.train_X, ds.train_y, TrainingConfig(lam=0.2, max_outer_iters=25))
        g2.append(sol.gamma_l1[0])
        g3.append(result.gamma_l1[0])
    assert np.median(g2) > 0.5
    assert np.median(g3) > 0.5


def test_trace_json_lines_round_trip():
    ds = small_instance(seed=12)
    specs = [make_spec("rbf", 2), make_spec("linear", 2)]
    result = train(specs, ds.train_X, ds.train_y, TrainingConfig(lam=0.2, max_outer_iters=3))
    lines = result.trace.to_json_lines().strip().split("\n")
    assert len(lines) == len(result.trace.records)
    first = json.loads(lines[0])
    assert first["iteration"] == 0
    assert set(first) == {"iteration", "loss", "gamma_l2", "gamma_l1", "theta", "degenerate"}
