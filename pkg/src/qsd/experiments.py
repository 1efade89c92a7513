"""Training loop, repeat statistics and the named experiments."""

import dataclasses
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ansatz import CircuitKind, Discriminator
from .discrimination import (
    CLASSES,
    CostBreakdown,
    CostParams,
    StateFamilyParams,
    class_sums,
    error_and_inconclusive,
    sample_dataset,
)
from .fidelity import model_check
from .noise import NoiseConfig
from .optim import AdamState, adam_step, gradient_from_shifted, shifted_parameters

log = logging.getLogger(__name__)

NOISE_GRID = (0.0, 0.001, 0.005, 0.01, 0.05, 0.1)
DEFAULT_REPEATS = 25


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Flat training configuration; field names double as config-file keys."""

    circuit: str = "short"
    mu_a: float = 0.5
    sigma_a: float = 0.15
    alpha_err: float = 40.0
    alpha_inc: float = 40.0
    noise: float = 0.0
    validation_noise: float = 0.0
    batch_size: int = 100
    validation_size: int = 1000
    max_steps: int = 1000
    window: int = 50
    rel_tol: float = 1e-4
    lr: float = 0.01
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "circuit", CircuitKind.parse(self.circuit).value)
        StateFamilyParams(self.mu_a, self.sigma_a)
        CostParams(self.alpha_err, self.alpha_inc)
        NoiseConfig(self.noise)
        NoiseConfig(self.validation_noise)
        if self.batch_size < 1 or self.validation_size < 1:
            raise ValueError("batch and validation sizes must be at least 1")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")
        if self.window < 1 or not self.rel_tol > 0:
            raise ValueError("convergence window must be >= 1 and rel_tol > 0")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")

    @property
    def kind(self):
        return CircuitKind.parse(self.circuit)

    @property
    def state_params(self):
        return StateFamilyParams(self.mu_a, self.sigma_a)

    @property
    def cost_params(self):
        return CostParams(self.alpha_err, self.alpha_inc)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass
class RunResult:
    config: TrainConfig
    initial_thetas: np.ndarray
    final_thetas: np.ndarray
    cost_trace: np.ndarray  # columns: cost, p_err, p_inc
    validation: CostBreakdown
    outcome_histogram: dict  # class -> [p00, p01, p10, p11]
    outcome_distribution: list  # validation-set mean [p00, p01, p10, p11]
    converged_step: int
    converged: bool

    @property
    def loss(self):
        return self.validation.loss

    def as_dict(self):
        return {
            "config": self.config.as_dict(),
            "initial_thetas": self.initial_thetas.tolist(),
            "final_thetas": self.final_thetas.tolist(),
            "cost_trace": self.cost_trace.tolist(),
            "validation": self.validation.as_dict(),
            "outcome_histogram": {k: list(v) for k, v in self.outcome_histogram.items()},
            "outcome_distribution": list(self.outcome_distribution),
            "converged_step": self.converged_step,
            "converged": self.converged,
        }


class Objective:
    """Batch cost of a fixed data set, evaluated through class sums."""

    def __init__(self, kind, noise, inputs, cost_params):
        self.model = Discriminator(kind, NoiseConfig(noise))
        sums, counts = class_sums(inputs)
        self.total = len(inputs)
        self.sums = sums / self.total
        self.counts = counts
        self.cost_params = cost_params

    def breakdown(self, thetas):
        """``(cost, p_err, p_inc)`` arrays, one entry per parameter row."""
        probs = self.model.probabilities(self.sums, np.atleast_2d(thetas))
        p_err, p_inc = error_and_inconclusive(probs)
        cost = self.cost_params.alpha_err * p_err + self.cost_params.alpha_inc * p_inc
        return cost, p_err, p_inc

    def histogram(self, thetas):
        """Mean outcome distribution per input class (``CLASSES`` order) and
        over the whole data set."""
        probs = self.model.probabilities(self.sums, np.atleast_2d(thetas))[0]
        out = {}
        for k, name in enumerate(CLASSES):
            n = self.counts[k]
            out[name] = (probs[k] * self.total / n).tolist() if n else [0.0] * 4
        return out, probs.sum(axis=0).tolist()


def _streams(seed):
    init, train, valid = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(init), np.random.default_rng(train), np.random.default_rng(valid)


def initial_parameters(config):
    rng, _, _ = _streams(config.seed)
    return rng.uniform(0.0, 2.0 * np.pi, config.kind.n_params)


def training_set(config):
    _, rng, _ = _streams(config.seed)
    return sample_dataset(rng, config.state_params, config.batch_size)


def validation_set(config):
    _, _, rng = _streams(config.seed)
    return sample_dataset(rng, config.state_params, config.validation_size)


def moving_average_converged(costs, window, rel_tol):
    """True when the mean of the last ``window`` costs differs from the mean of
    the ``window`` before it by less than ``rel_tol`` (relative)."""
    if len(costs) < 2 * window:
        return False
    recent = float(np.mean(costs[-window:]))
    previous = float(np.mean(costs[-2 * window : -window]))
    scale = max(abs(previous), 1e-300)
    return abs(recent - previous) / scale < rel_tol


def validate(config, thetas, noise=None):
    """Validation breakdown, per-class histogram and mean outcome distribution."""
    noise = config.validation_noise if noise is None else noise
    obj = Objective(config.kind, noise, validation_set(config), config.cost_params)
    cost, p_err, p_inc = obj.breakdown(thetas)
    histogram, overall = obj.histogram(thetas)
    return CostBreakdown(float(cost[0]), float(p_err[0]), float(p_inc[0])), histogram, overall


def train(config):
    """Train one network; deterministic for a fixed ``config.seed``."""
    thetas = initial_parameters(config)
    start = thetas.copy()
    obj = Objective(config.kind, config.noise, training_set(config), config.cost_params)
    state = AdamState.fresh(thetas.shape[0], lr=config.lr)
    trace = []
    converged = False
    for step in range(config.max_steps):
        rows = np.vstack([thetas[None, :], shifted_parameters(thetas)])
        cost, p_err, p_inc = obj.breakdown(rows)
        if not np.all(np.isfinite(cost)):
            raise TrainingError(f"non-finite cost at step {step}, thetas={thetas.tolist()}")
        trace.append((cost[0], p_err[0], p_inc[0]))
        grad = gradient_from_shifted(cost[1:])
        state, thetas = adam_step(state, thetas, grad)
        if moving_average_converged([t[0] for t in trace], config.window, config.rel_tol):
            converged = True
            break
    validation, histogram, overall = validate(config, thetas)
    return RunResult(
        config=config,
        initial_thetas=start,
        final_thetas=thetas,
        cost_trace=np.array(trace, dtype=float).reshape(-1, 3),
        validation=validation,
        outcome_histogram=histogram,
        outcome_distribution=overall,
        converged_step=len(trace),
        converged=converged,
    )


def worker_count(requested=None):
    cap = os.environ.get("QSD_WORKERS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def _map(fn, items, workers=None):
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class DistributionStats:
    """Box-plot summary: quartiles, 5th/95th percentiles and outliers."""

    n: int
    mean: float
    median: float
    q1: float
    q3: float
    p5: float
    p95: float
    whisker_low: float
    whisker_high: float
    outliers: list = field(default_factory=list)

    @classmethod
    def from_values(cls, values):
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise ValueError("no values to summarize")
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        p5, p95 = np.percentile(v, [5, 95])
        iqr = q3 - q1
        lo = max(q1 - 1.5 * iqr, p5)
        hi = min(q3 + 1.5 * iqr, p95)
        outliers = sorted(float(x) for x in v if x < lo or x > hi)
        return cls(
            int(v.size), float(v.mean()), float(med), float(q1), float(q3),
            float(p5), float(p95), float(lo), float(hi), outliers,
        )

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass
class RepeatResult:
    config: TrainConfig
    runs: list

    @property
    def losses(self):
        return np.array([r.loss for r in self.runs])

    def stats(self, metric="loss"):
        values = [getattr(r.validation, metric) for r in self.runs]
        return DistributionStats.from_values(values)

    def summary(self):
        return {m: self.stats(m).as_dict() for m in ("loss", "p_err", "p_inc")}


def repeat_configs(config, repeats):
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    return [config.replace(seed=config.seed + i) for i in range(repeats)]


def repeat_runs(config, repeats=DEFAULT_REPEATS, workers=None):
    """Train ``repeats`` networks with seeds ``seed .. seed + repeats - 1``."""
    runs = _map(train, repeat_configs(config, repeats), workers)
    return RepeatResult(config, runs)


def cost_bias_experiment(base, repeats=DEFAULT_REPEATS, workers=None):
    """Error-biased (60, 10) versus balanced (40, 40) cost weights."""
    base = base.replace(mu_a=0.5, sigma_a=0.15)
    return {
        "biased": repeat_runs(base.replace(alpha_err=60.0, alpha_inc=10.0), repeats, workers),
        "balanced": repeat_runs(base.replace(alpha_err=40.0, alpha_inc=40.0), repeats, workers),
    }


def noise_sweep_experiment(base, levels=NOISE_GRID, repeats=DEFAULT_REPEATS, workers=None):
    """Train and validate at the same noise level, for each level."""
    return {
        p: repeat_runs(base.replace(noise=p, validation_noise=p), repeats, workers) for p in levels
    }


def compare_circuits_experiment(base, levels=(0.0, 0.001, 0.01, 0.1), repeats=DEFAULT_REPEATS,
                                workers=None):
    return {
        circuit: noise_sweep_experiment(base.replace(circuit=circuit), levels, repeats, workers)
        for circuit in ("short", "long")
    }


def revalidated(run, noise):
    """Copy of ``run`` whose validation is recomputed at another noise level."""
    validation, histogram, overall = validate(run.config, run.final_thetas, noise)
    return dataclasses.replace(
        run,
        config=run.config.replace(validation_noise=noise),
        validation=validation,
        outcome_histogram=histogram,
        outcome_distribution=overall,
    )


def _revalidate(args):
    run, levels = args
    return {p: revalidated(run, p) for p in levels}


def noise_cross_experiment(base, train_levels=NOISE_GRID, validation_levels=NOISE_GRID,
                           repeats=DEFAULT_REPEATS, workers=None):
    """Train once per (training level, seed), then validate at every level.

    Returns ``{train_p: {val_p: RepeatResult}}``; each run in the inner
    result shares its trained parameters across validation levels.
    """
    for p in list(train_levels) + list(validation_levels):
        if not 0.0 <= p <= 0.1:
            raise ValueError(f"noise level {p} outside [0, 0.1]")
    grid = {}
    for tp in train_levels:
        trained = repeat_runs(base.replace(noise=tp, validation_noise=tp), repeats, workers)
        per_run = _map(_revalidate, [(r, tuple(validation_levels)) for r in trained.runs], workers)
        grid[tp] = {
            vp: RepeatResult(trained.config.replace(validation_noise=vp), [row[vp] for row in per_run])
            for vp in validation_levels
        }
    return grid


def mu_sweep_experiment(base, mu_values=(0.25, 0.5, 0.75), noise_values=(0.0, 0.001, 0.01, 0.1),
                        repeats=DEFAULT_REPEATS, workers=None):
    """Loss over (mu_a, p) cells with the fidelity-model prediction attached."""
    cells = {}
    for mu in mu_values:
        for p in noise_values:
            res = repeat_runs(base.replace(mu_a=mu, noise=p, validation_noise=p), repeats, workers)
            cells[(mu, p)] = {"runs": res, "model": model_check(mu, p)}
    return cells


def circular_std(angles):
    """Circular standard deviation ``sqrt(-2 ln R)`` of angles in radians."""
    angles = np.asarray(angles, dtype=float)
    r = abs(np.mean(np.exp(1j * angles)))
    return float(math.sqrt(max(-2.0 * math.log(max(r, 1e-300)), 0.0)))


def parameter_distribution_experiment(base, noise_levels=(0.0, 0.001, 0.01, 0.1), theta_index=9,
                                      repeats=DEFAULT_REPEATS, workers=None):
    """Final ``theta_index`` (mod 2 pi) and noiseless-validation loss per run.

    ``theta_index`` is 0-based; the default 9 is the first rotation of V2 in the
    short circuit.
    """
    if not 0 <= theta_index < base.kind.n_params:
        raise ValueError(f"theta_index {theta_index} out of range")
    out = {}
    for p in noise_levels:
        res = repeat_runs(base.replace(noise=p, validation_noise=0.0), repeats, workers)
        out[p] = [
            (float(np.mod(r.final_thetas[theta_index], 2 * np.pi)), r.loss) for r in res.runs
        ]
    return out
