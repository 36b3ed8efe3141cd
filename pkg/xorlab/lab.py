"""
Experiment harness: trial runner, batches, learning-rate sweeps, epoch curves,
quadrant study and the runtime micro-benchmark.

Per-epoch metrics (MSE, number of correctly classified rows) are measured on
the parameters produced by that epoch's update, so the last epoch's record
describes the final parameters.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .config import (
    DEFAULT_CURVE_EPOCHS,
    DEFAULT_EPOCHS,
    DEFAULT_WEIGHT_BOUND,
    MIN_BENCH_REPETITIONS,
    resolve_threads,
)
from .models import AND_PATTERN, InputRange, ModelName, ModelParams, backward, forward, xor_batch
from .optim import U64_MAX, AdamConfig, AdamState, InitPolicy, adam_step, init_params, init_params_in_quadrant
from .scalargrad import mse

logger = logging.getLogger(__name__)

CLASS_THRESHOLD = 0.5


def classify(output: float) -> int:
    """1 at or above the midpoint between the targets 0 and 1"""
    return 1 if output >= CLASS_THRESHOLD else 0


def count_correct(outputs: Sequence[float], targets: Sequence[float]) -> int:
    return sum(1 for out, y in zip(outputs, targets) if classify(out) == int(y))


class TrialSpec(BaseModel):
    """Complete, deterministic description of one training run"""

    model_config = ConfigDict(frozen=True)

    model: ModelName
    input_range: InputRange
    lr: float = Field(gt=0.0)
    epochs: int = Field(DEFAULT_EPOCHS, ge=1)
    seed: int = Field(0, ge=0, le=U64_MAX)
    trial_index: int = Field(0, ge=0)
    record_trace: bool = False
    quadrant: int | None = Field(None, ge=1, le=4)
    slope_init: float = 0.0
    train_slope: bool = True
    weight_bound: float = Field(DEFAULT_WEIGHT_BOUND, gt=0.0)
    adam: AdamConfig = AdamConfig()

    @field_validator("lr", "slope_init")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @property
    def init_policy(self) -> InitPolicy:
        return InitPolicy(
            seed=self.seed,
            stream=self.trial_index,
            weight_bound=self.weight_bound,
            slope_init=self.slope_init,
        )


@dataclass(frozen=True)
class TrialResult:
    success: bool
    epochs_to_success: int | None
    final_mse: float
    final_params: ModelParams
    wall_time_ns: int
    input_range: InputRange
    diverged: bool = False
    initial_params: ModelParams | None = None
    per_epoch_mse: tuple[float, ...] | None = None
    per_epoch_correct: tuple[int, ...] | None = None
    # theta after each epoch's update, traced runs only
    per_epoch_params: tuple[tuple[float, ...], ...] | None = None

    @property
    def final_outputs(self) -> tuple[float, ...]:
        inputs, _ = xor_batch(self.input_range)
        return forward(self.final_params, inputs)

    @property
    def final_pattern(self) -> tuple[int, ...]:
        return tuple(classify(out) for out in self.final_outputs)


def _initial_params(spec: TrialSpec) -> ModelParams:
    arch = spec.model.arch
    if spec.quadrant is not None:
        return init_params_in_quadrant(arch, spec.quadrant, spec.init_policy)
    return init_params(arch, spec.init_policy)


def run_trial(spec: TrialSpec) -> TrialResult:
    """Initialise, then run ``spec.epochs`` full-batch Adam steps on the XOR set"""
    start = time.perf_counter_ns()

    inputs, targets = xor_batch(spec.input_range)
    params = _initial_params(spec)
    initial = params
    state = AdamState.zeros(params.arch.n_params, spec.lr, spec.adam)
    slope_index = params.arch.slope_index
    freeze_slope = slope_index is not None and not spec.train_slope

    trace = spec.record_trace
    mse_trace: list[float] = []
    correct_trace: list[int] = []
    param_trace: list[tuple[float, ...]] = []

    first_all_correct = None
    loss = math.inf
    correct = 0
    diverged = False

    for epoch in range(1, spec.epochs + 1):
        grad = backward(params, inputs, targets)
        if freeze_slope:
            grad = grad[:slope_index] + (0.0,) + grad[slope_index + 1 :]
        try:
            state, params = adam_step(state, params, grad)
        except FloatingPointError:
            diverged = True
        else:
            outputs = forward(params, inputs)
            loss = mse(outputs, targets)
            diverged = not math.isfinite(loss)

        if diverged:
            logger.warning(
                f"Trial diverged at epoch {epoch} ({spec.model.value}, lr={spec.lr}, "
                f"seed={spec.seed}, trial={spec.trial_index})"
            )
            loss = math.inf
            correct = 0
            if trace:
                missing = spec.epochs - epoch + 1
                mse_trace.extend([math.inf] * missing)
                correct_trace.extend([0] * missing)
                param_trace.extend([params.theta] * missing)
            break

        correct = count_correct(outputs, targets)
        if correct == len(targets) and first_all_correct is None:
            first_all_correct = epoch
        if trace:
            mse_trace.append(loss)
            correct_trace.append(correct)
            param_trace.append(params.theta)

    elapsed = time.perf_counter_ns() - start
    success = not diverged and correct == len(targets)

    result = TrialResult(
        success=success,
        epochs_to_success=first_all_correct if success else None,
        final_mse=loss,
        final_params=params,
        wall_time_ns=elapsed,
        input_range=spec.input_range,
        diverged=diverged,
        initial_params=initial,
        per_epoch_mse=tuple(mse_trace) if trace else None,
        per_epoch_correct=tuple(correct_trace) if trace else None,
        per_epoch_params=tuple(param_trace) if trace else None,
    )
    logger.debug(
        f"Trial {spec.model.value} seed={spec.seed}/{spec.trial_index} lr={spec.lr}: "
        f"success={success} epochs_to_success={result.epochs_to_success} mse={loss:.3e}"
    )
    return result


def run_trials(specs: Sequence[TrialSpec], threads: int | None = None) -> list[TrialResult]:
    """Run independent trials across worker processes; results keep the input order"""
    workers = min(resolve_threads(threads), len(specs))
    if workers <= 1:
        return [run_trial(spec) for spec in specs]
    chunksize = max(1, len(specs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, specs, chunksize=chunksize))


def batch_specs(template: TrialSpec, n_trials: int, base_seed: int) -> list[TrialSpec]:
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    return [template.model_copy(update={"seed": base_seed, "trial_index": i}) for i in range(n_trials)]


def run_batch(
    template: TrialSpec, n_trials: int, base_seed: int, threads: int | None = None
) -> list[TrialResult]:
    """Trial i uses stream (base_seed, i); results come back in trial order"""
    return run_trials(batch_specs(template, n_trials, base_seed), threads)


@dataclass(frozen=True)
class SweepRow:
    model: ModelName
    input_range: InputRange
    lr: float
    trials: int
    successes: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


def sweep_learning_rates(
    models: Iterable[ModelName],
    lr_grid: Sequence[float],
    n_trials: int,
    base_seed: int,
    ranges: Mapping[ModelName, InputRange] | None = None,
    epochs: int = DEFAULT_EPOCHS,
    adam: AdamConfig | None = None,
    weight_bound: float = DEFAULT_WEIGHT_BOUND,
    threads: int | None = None,
) -> list[SweepRow]:
    """Success rate per (model, lr); every cell reuses the same initialisations"""
    if len(lr_grid) == 0:
        raise ValueError("Learning-rate grid is empty")
    if any(lr <= 0.0 for lr in lr_grid):
        raise ValueError("Learning rates must be positive")
    if any(b <= a for a, b in zip(lr_grid, lr_grid[1:])):
        raise ValueError("Learning-rate grid must be strictly increasing")

    ranges = ranges or {}
    rows = []
    for model in models:
        input_range = ranges.get(model, model.default_range)
        logger.info(f"Sweeping {model.value} on {input_range.value} over {len(lr_grid)} learning rates")
        specs = []
        for lr in lr_grid:
            template = TrialSpec(
                model=model,
                input_range=input_range,
                lr=lr,
                epochs=epochs,
                weight_bound=weight_bound,
                adam=adam or AdamConfig(),
            )
            specs.extend(batch_specs(template, n_trials, base_seed))
        # one pool per model; cell k owns results[k * n_trials : (k + 1) * n_trials]
        results = run_trials(specs, threads)
        for k, lr in enumerate(lr_grid):
            successes = sum(r.success for r in results[k * n_trials : (k + 1) * n_trials])
            rows.append(SweepRow(model, input_range, float(lr), n_trials, successes))
            logger.debug(f"{model.value} lr={lr:.3g}: {successes}/{n_trials}")
    return rows


def longest_full_success_span(rows: Sequence[SweepRow]) -> int:
    """Longest run of consecutive grid points with success rate 1.0"""
    best = current = 0
    for row in sorted(rows, key=lambda r: r.lr):
        current = current + 1 if row.successes == row.trials else 0
        best = max(best, current)
    return best


@dataclass(frozen=True)
class CurvePoint:
    model: ModelName
    epoch: int
    success_rate: float
    mean_mse: float


def epoch_curves(
    models: Iterable[ModelName],
    n_trials: int,
    lrs: Mapping[ModelName, float],
    base_seed: int,
    curve_epochs: int = DEFAULT_CURVE_EPOCHS,
    train_epochs: int = DEFAULT_EPOCHS,
    ranges: Mapping[ModelName, InputRange] | None = None,
    adam: AdamConfig | None = None,
    weight_bound: float = DEFAULT_WEIGHT_BOUND,
    threads: int | None = None,
) -> list[CurvePoint]:
    """Per-epoch fraction of all-correct trials and mean MSE, per model"""
    if curve_epochs < 1:
        raise ValueError(f"curve_epochs must be >= 1, got {curve_epochs}")
    epochs = max(curve_epochs, train_epochs)
    ranges = ranges or {}
    points = []
    for model in models:
        template = TrialSpec(
            model=model,
            input_range=ranges.get(model, model.default_range),
            lr=lrs[model],
            epochs=epochs,
            record_trace=True,
            weight_bound=weight_bound,
            adam=adam or AdamConfig(),
        )
        logger.info(f"Epoch curves for {model.value}: {n_trials} trials at lr={template.lr}")
        results = run_batch(template, n_trials, base_seed, threads)
        correct = np.array([r.per_epoch_correct[:curve_epochs] for r in results])
        losses = np.array([r.per_epoch_mse[:curve_epochs] for r in results])
        success_rate = (correct == 4).mean(axis=0)
        mean_mse = losses.mean(axis=0)
        for epoch in range(curve_epochs):
            points.append(CurvePoint(model, epoch + 1, float(success_rate[epoch]), float(mean_mse[epoch])))
    return points


@dataclass(frozen=True)
class QuadrantConfig:
    label: str
    slope_init: float
    train_slope: bool


QUADRANT_CONFIGS = (
    QuadrantConfig("fixed-slope", -1.0, False),
    QuadrantConfig("learned-slope", 0.0, True),
)


@dataclass(frozen=True)
class QuadrantRow:
    config: str
    input_range: InputRange
    quadrant: int
    trials: int
    successes: int
    and_count: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def and_rate(self) -> float:
        return self.and_count / self.trials


def quadrant_study(
    input_range: InputRange,
    lr: float,
    n_trials: int,
    base_seed: int,
    epochs: int = DEFAULT_EPOCHS,
    configs: Sequence[QuadrantConfig] = QUADRANT_CONFIGS,
    adam: AdamConfig | None = None,
    weight_bound: float = DEFAULT_WEIGHT_BOUND,
    threads: int | None = None,
) -> list[QuadrantRow]:
    """Success of the bias-free PReLU neuron per initial weight quadrant"""
    rows = []
    for config in configs:
        for quadrant in (1, 2, 3, 4):
            template = TrialSpec(
                model=ModelName.PRELU,
                input_range=input_range,
                lr=lr,
                epochs=epochs,
                quadrant=quadrant,
                slope_init=config.slope_init,
                train_slope=config.train_slope,
                weight_bound=weight_bound,
                adam=adam or AdamConfig(),
            )
            results = run_batch(template, n_trials, base_seed, threads)
            successes = sum(r.success for r in results)
            and_count = sum(r.final_pattern == AND_PATTERN for r in results)
            rows.append(QuadrantRow(config.label, input_range, quadrant, n_trials, successes, and_count))
            logger.info(
                f"Quadrant {quadrant} ({config.label}, {input_range.value}): "
                f"{successes}/{n_trials} solved, {and_count} ended on AND"
            )
    return rows


@dataclass(frozen=True)
class BenchSummary:
    model: ModelName
    min_ns: int
    median_ns: float
    p95_ns: float


@dataclass(frozen=True)
class BenchResult:
    samples: dict[ModelName, tuple[int, ...]]

    def summary(self) -> list[BenchSummary]:
        rows = []
        for model, times in self.samples.items():
            values = np.array(times, dtype=np.float64)
            rows.append(
                BenchSummary(
                    model,
                    int(values.min()),
                    float(np.median(values)),
                    float(np.percentile(values, 95)),
                )
            )
        return rows


def bench_runtime(
    models: Sequence[ModelName],
    n_trials: int,
    lr: float,
    base_seed: int,
    repetitions: int,
    epochs: int = DEFAULT_EPOCHS,
    warmup: int = 1,
    adam: AdamConfig | None = None,
    weight_bound: float = DEFAULT_WEIGHT_BOUND,
) -> BenchResult:
    """
    Wall time of single 300-epoch trials, measured with a monotonic clock

    Models are interleaved within each repetition; repetition r uses
    initialisation r mod n_trials. Always single-threaded.
    """
    if repetitions < MIN_BENCH_REPETITIONS:
        raise ValueError(f"repetitions must be >= {MIN_BENCH_REPETITIONS}, got {repetitions}")
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")

    specs = {
        model: TrialSpec(
            model=model,
            input_range=model.default_range,
            lr=lr,
            epochs=epochs,
            seed=base_seed,
            weight_bound=weight_bound,
            adam=adam or AdamConfig(),
        )
        for model in models
    }
    for _ in range(warmup):
        for spec in specs.values():
            run_trial(spec)

    samples: dict[ModelName, list[int]] = {model: [] for model in models}
    for repetition in range(repetitions):
        for model, spec in specs.items():
            trial = spec.model_copy(update={"trial_index": repetition % n_trials})
            start = time.perf_counter_ns()
            run_trial(trial)
            samples[model].append(max(1, time.perf_counter_ns() - start))
    for model, times in samples.items():
        logger.info(f"{model.value}: median {np.median(times) / 1e6:.2f} ms over {repetitions} runs")
    return BenchResult({model: tuple(times) for model, times in samples.items()})
