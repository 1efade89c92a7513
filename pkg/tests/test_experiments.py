import math

import numpy as np
import pytest

from qsd.ansatz import run_discriminator
from qsd.discrimination import RANDOM_LOSS, batch_cost
from qsd.experiments import (
    DistributionStats,
    Objective,
    TrainConfig,
    circular_std,
    cost_bias_experiment,
    initial_parameters,
    moving_average_converged,
    mu_sweep_experiment,
    noise_cross_experiment,
    parameter_distribution_experiment,
    repeat_runs,
    revalidated,
    train,
    training_set,
    validation_set,
    worker_count,
)
from qsd.noise import NoiseConfig

SMALL = TrainConfig(batch_size=20, validation_size=40, max_steps=5, seed=3)


def test_zero_steps_returns_initial_parameters():
    run = train(SMALL.replace(max_steps=0))
    np.testing.assert_array_equal(run.final_thetas, run.initial_thetas)
    assert run.cost_trace.shape == (0, 3)
    assert not run.converged and run.converged_step == 0


def test_training_is_deterministic():
    a, b = train(SMALL), train(SMALL)
    np.testing.assert_array_equal(a.final_thetas, b.final_thetas)
    np.testing.assert_array_equal(a.cost_trace, b.cost_trace)
    assert a.as_dict() == b.as_dict()


def test_seeds_give_independent_streams():
    assert not np.allclose(initial_parameters(SMALL), initial_parameters(SMALL.replace(seed=4)))
    # changing the batch size must not perturb the initial parameters
    np.testing.assert_array_equal(initial_parameters(SMALL), initial_parameters(SMALL.replace(batch_size=7)))
    t = [(x.klass, x.a_value) for x in training_set(SMALL)]
    v = [(x.klass, x.a_value) for x in validation_set(SMALL)][: len(t)]
    assert t != v


def test_parameter_counts():
    assert initial_parameters(SMALL).shape == (12,)
    assert initial_parameters(SMALL.replace(circuit="long")).shape == (30,)
    assert np.all((initial_parameters(SMALL) >= 0) & (initial_parameters(SMALL) < 2 * np.pi))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(noise=1.5)
    with pytest.raises(ValueError):
        TrainConfig(circuit="medium")
    with pytest.raises(ValueError):
        TrainConfig(max_steps=-1)


def test_training_reduces_cost():
    run = train(TrainConfig(batch_size=50, validation_size=100, max_steps=150, seed=1))
    costs = run.cost_trace[:, 0]
    assert costs[-10:].mean() < costs[:10].mean()


def test_objective_matches_per_input_reference(rng):
    data = training_set(SMALL)
    noise = NoiseConfig(0.01)
    thetas = rng.uniform(0, 2 * np.pi, 12)
    obj = Objective(SMALL.kind, 0.01, data, SMALL.cost_params)
    cost, p_err, p_inc = obj.breakdown(thetas[None, :])
    ref = batch_cost(data, [run_discriminator(x.rho, "short", thetas, noise) for x in data], SMALL.cost_params)
    assert cost[0] == pytest.approx(ref.cost, abs=1e-10)
    assert p_err[0] == pytest.approx(ref.p_err, abs=1e-12)
    assert p_inc[0] == pytest.approx(ref.p_inc, abs=1e-12)


def test_histograms_are_distributions():
    run = train(SMALL)
    for row in run.outcome_histogram.values():
        assert sum(row) == pytest.approx(1.0, abs=1e-9)
        assert min(row) >= -1e-12
    assert sum(run.outcome_distribution) == pytest.approx(1.0, abs=1e-9)


def test_untrained_loss_near_random():
    run = train(SMALL.replace(max_steps=0, validation_size=300))
    assert abs(run.loss - RANDOM_LOSS) < 0.35


def test_convergence_rule():
    assert not moving_average_converged([1.0] * 99, 50, 1e-4)
    assert moving_average_converged([1.0] * 100, 50, 1e-4)
    assert not moving_average_converged([2.0] * 50 + [1.0] * 50, 50, 1e-4)
    assert moving_average_converged([1.0] * 50 + [1.00005] * 50, 50, 1e-4)


def test_converged_run_stops_early():
    run = train(SMALL.replace(max_steps=400, window=5, rel_tol=0.5))
    assert run.converged and run.converged_step < 400
    assert run.cost_trace.shape[0] == run.converged_step


def test_stats_single_run():
    s = DistributionStats.from_values([0.3])
    assert s.n == 1 and s.mean == s.median == s.q1 == s.q3 == 0.3 and s.outliers == []


def test_stats_ordering(rng):
    for _ in range(20):
        s = DistributionStats.from_values(rng.exponential(size=25))
        assert s.p5 <= s.whisker_low <= s.q1 <= s.median <= s.q3 <= s.whisker_high <= s.p95
    s = DistributionStats.from_values(list(range(1, 21)) + [100])
    assert 100 in s.outliers
    with pytest.raises(ValueError):
        DistributionStats.from_values([])


def test_circular_std():
    assert circular_std([1.0, 1.0, 1.0]) == pytest.approx(0.0, abs=1e-7)
    # wrapping: angles near 0 and 2 pi are close
    assert circular_std([0.01, 2 * np.pi - 0.01]) == pytest.approx(0.01, rel=1e-3)
    assert circular_std([0, np.pi]) > 5


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("QSD_WORKERS", "1")
    assert worker_count(8) == 1
    monkeypatch.delenv("QSD_WORKERS")
    assert worker_count(3) == 3


def test_repeat_runs_seeds():
    res = repeat_runs(SMALL.replace(max_steps=2), repeats=3, workers=1)
    assert [r.config.seed for r in res.runs] == [3, 4, 5]
    assert res.losses.shape == (3,)
    assert set(res.summary()) == {"loss", "p_err", "p_inc"}
    with pytest.raises(ValueError):
        repeat_runs(SMALL, repeats=0)


def test_revalidated_keeps_parameters():
    run = train(SMALL)
    again = revalidated(run, 0.05)
    np.testing.assert_array_equal(again.final_thetas, run.final_thetas)
    assert again.config.validation_noise == 0.05
    assert revalidated(run, run.config.validation_noise).loss == pytest.approx(run.loss, abs=1e-12)


def test_cost_bias_smoke():
    out = cost_bias_experiment(SMALL.replace(max_steps=2), repeats=2, workers=1)
    assert out["biased"].config.alpha_err == 60 and out["biased"].config.alpha_inc == 10
    assert out["balanced"].config.alpha_err == 40


def test_noise_cross_smoke():
    grid = noise_cross_experiment(SMALL.replace(max_steps=2), (0.0, 0.01), (0.0, 0.1), repeats=2, workers=1)
    assert set(grid) == {0.0, 0.01} and set(grid[0.0]) == {0.0, 0.1}
    a, b = grid[0.01][0.0].runs[0], grid[0.01][0.1].runs[0]
    np.testing.assert_array_equal(a.final_thetas, b.final_thetas)
    assert a.config.noise == 0.01 and b.config.validation_noise == 0.1
    with pytest.raises(ValueError):
        noise_cross_experiment(SMALL, (0.5,), (0.0,), repeats=1)


def test_mu_sweep_smoke():
    cells = mu_sweep_experiment(SMALL.replace(max_steps=1), (0.25,), (0.0, 0.01), repeats=1, workers=1)
    assert cells[(0.25, 0.0)]["model"] == pytest.approx(0.03125)
    assert cells[(0.25, 0.01)]["runs"].runs[0].config.mu_a == 0.25


def test_parameter_distribution_smoke():
    out = parameter_distribution_experiment(SMALL.replace(max_steps=2), (0.0,), repeats=2, workers=1)
    for angle, loss in out[0.0]:
        assert 0 <= angle < 2 * math.pi and 0 <= loss <= 1
    with pytest.raises(ValueError):
        parameter_distribution_experiment(SMALL, theta_index=12)
