"""
Command handlers behind the ``xorlab`` command line.

Each command has a request model carrying every resolved setting (these are
what ends up in ``manifest.json``) and a ``handle_*`` function that runs the
experiment and writes its artifacts.
"""

import logging
import math
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .artifacts import ArtifactWriter, RunManifest, detect_schema, read_csv
from .config import (
    DEFAULT_BENCH_REPETITIONS,
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_CURVE_EPOCHS,
    DEFAULT_EPOCHS,
    DEFAULT_EPS,
    DEFAULT_GRID_STEPS,
    DEFAULT_LR,
    DEFAULT_OUT_DIR,
    DEFAULT_QUADRANT_TRIALS,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    DEFAULT_WEIGHT_BOUND,
    GCU_LR,
    LR_GRID_MAX,
    LR_GRID_MIN,
    LR_GRID_POINTS,
    MIN_BENCH_REPETITIONS,
    default_lr_grid,
)
from .lab import (
    TrialSpec,
    bench_runtime,
    epoch_curves,
    quadrant_study,
    run_trial,
    sweep_learning_rates,
)
from .models import InputRange, ModelName
from .optim import U64_MAX, AdamConfig
from .surfaces import (
    GridAxis,
    ZERO_LOSS_TOL,
    boundary_spread,
    class_margin,
    decision_boundary_raster,
    default_input_axes,
    find_local_minima,
    loss_landscape,
    minimum_pattern,
    prelu_loss_grid,
)

logger = logging.getLogger(__name__)

ALL_MODELS = [ModelName.PRELU, ModelName.PRELU_BIAS, ModelName.GCU, ModelName.MLP]
CORE_MODELS = [ModelName.PRELU, ModelName.GCU, ModelName.MLP]

# Per-model learning rates used by `curves` when --lr is not given
TUNED_LRS = {ModelName.GCU: GCU_LR}


def pattern_label(pattern: tuple[int, ...]) -> str:
    return "-".join(str(bit) for bit in pattern)


class CommandRequest(BaseModel):
    model_config = ConfigDict(allow_inf_nan=False)

    out: Path = DEFAULT_OUT_DIR  # --out
    seed: int = Field(DEFAULT_SEED, ge=0, le=U64_MAX)  # --seed
    no_timing: bool = False  # --no-timing
    threads: Optional[int] = Field(None, ge=1)  # --threads

    # Optimizer and initialization overrides
    beta1: float = Field(DEFAULT_BETA1, gt=0.0, lt=1.0)  # --beta1
    beta2: float = Field(DEFAULT_BETA2, gt=0.0, lt=1.0)  # --beta2
    eps: float = Field(DEFAULT_EPS, gt=0.0)  # --eps
    weight_bound: float = Field(DEFAULT_WEIGHT_BOUND, gt=0.0)  # --weight-bound

    @property
    def adam(self) -> AdamConfig:
        return AdamConfig(beta1=self.beta1, beta2=self.beta2, eps=self.eps)

    def writer(self) -> ArtifactWriter:
        return ArtifactWriter(self.out, no_timing=self.no_timing)

    def manifest(self, command: str, **summary) -> RunManifest:
        return RunManifest(
            command=command,
            config=self.model_dump(mode="json"),
            base_seed=self.seed,
            summary=summary,
        )


class TrainRequest(CommandRequest):
    model: ModelName  # --model
    input_range: Optional[InputRange] = None  # --range (model default when unset)
    lr: float = Field(DEFAULT_LR, gt=0.0)  # --lr
    epochs: int = Field(DEFAULT_EPOCHS, ge=1)  # --epochs
    trace: bool = False  # --trace

    @model_validator(mode="after")
    def _default_range(self) -> "TrainRequest":
        if self.input_range is None:
            self.input_range = self.model.default_range
        return self


class SweepRequest(CommandRequest):
    models: list[ModelName] = Field(default_factory=lambda: list(ALL_MODELS))  # --model (repeatable)
    input_range: Optional[InputRange] = None  # --range (every model; model default when unset)
    model_ranges: dict[ModelName, InputRange] = {}  # --model-range NAME=RANGE
    lr_min: float = Field(LR_GRID_MIN, gt=0.0)  # --lr-min
    lr_max: float = Field(LR_GRID_MAX, gt=0.0)  # --lr-max
    lr_points: int = Field(LR_GRID_POINTS, ge=1)  # --lr-points
    trials: int = Field(DEFAULT_TRIALS, ge=1)  # --trials
    epochs: int = Field(DEFAULT_EPOCHS, ge=1)  # --epochs

    @model_validator(mode="after")
    def _grid(self) -> "SweepRequest":
        if self.lr_points > 1 and not self.lr_max > self.lr_min:
            raise ValueError("lr_max must exceed lr_min")
        return self

    def range_for(self, model: ModelName) -> InputRange:
        return self.model_ranges.get(model) or self.input_range or model.default_range


class CurvesRequest(CommandRequest):
    models: list[ModelName] = Field(default_factory=lambda: list(CORE_MODELS))  # --model (repeatable)
    lr: Optional[float] = Field(None, gt=0.0)  # --lr (every model; tuned per-model rate when unset)
    model_lrs: dict[ModelName, float] = {}  # --model-lr NAME=LR
    trials: int = Field(DEFAULT_TRIALS, ge=1)  # --trials
    curve_epochs: int = Field(DEFAULT_CURVE_EPOCHS, ge=1)  # --curve-epochs
    epochs: int = Field(DEFAULT_EPOCHS, ge=1)  # --epochs

    @field_validator("model_lrs")
    @classmethod
    def _positive(cls, value: dict[ModelName, float]) -> dict[ModelName, float]:
        if any(not (lr > 0.0 and math.isfinite(lr)) for lr in value.values()):
            raise ValueError("learning rates must be finite and positive")
        return value

    def lr_for(self, model: ModelName) -> float:
        if model in self.model_lrs:
            return self.model_lrs[model]
        if self.lr is not None:
            return self.lr
        return TUNED_LRS.get(model, DEFAULT_LR)


class LandscapeRequest(CommandRequest):
    input_range: InputRange = InputRange.PLUS_MINUS_ONE  # --range
    slope: float = -1.0  # --slope
    extent: float = Field(2.0, gt=0.0)  # --extent
    steps: int = Field(DEFAULT_GRID_STEPS, ge=3)  # --steps
    lr: float = Field(DEFAULT_LR, gt=0.0)  # --lr
    quadrant_trials: int = Field(DEFAULT_QUADRANT_TRIALS, ge=1)  # --quadrant-trials
    epochs: int = Field(DEFAULT_EPOCHS, ge=1)  # --epochs
    trajectories: bool = False  # --trajectories


class BoundaryRequest(CommandRequest):
    models: list[ModelName] = Field(default_factory=lambda: list(CORE_MODELS))  # --model (repeatable)
    lr: float = Field(DEFAULT_LR, gt=0.0)  # --lr
    trials: int = Field(DEFAULT_TRIALS, ge=1)  # --trials
    steps: int = Field(DEFAULT_GRID_STEPS, ge=2)  # --steps
    epochs: int = Field(DEFAULT_EPOCHS, ge=1)  # --epochs


class BenchRequest(CommandRequest):
    models: list[ModelName] = Field(default_factory=lambda: list(CORE_MODELS))  # --model (repeatable)
    lr: float = Field(DEFAULT_LR, gt=0.0)  # --lr
    repetitions: int = Field(DEFAULT_BENCH_REPETITIONS, ge=MIN_BENCH_REPETITIONS)  # --repetitions
    trials: int = Field(10, ge=1)  # --trials (distinct initialisations cycled)
    epochs: int = Field(DEFAULT_EPOCHS, ge=1)  # --epochs
    warmup: int = Field(1, ge=0)  # --warmup


class PlotRequest(BaseModel):
    inputs: list[Path] = Field(min_length=1)  # positional CSV paths
    out: Optional[Path] = None  # --out (defaults to each input's directory)


def handle_train(request: TrainRequest) -> RunManifest:
    logger.info(f"🚀 Training {request.model.value} on {request.input_range.value} (lr={request.lr}, seed={request.seed})")
    spec = TrialSpec(
        model=request.model,
        input_range=request.input_range,
        lr=request.lr,
        epochs=request.epochs,
        seed=request.seed,
        record_trace=True,
        weight_bound=request.weight_bound,
        adam=request.adam,
    )
    result = run_trial(spec)

    names = list(spec.model.arch.param_names)
    if request.trace:
        epochs = range(1, len(result.per_epoch_mse) + 1)
        rows = zip(epochs, result.per_epoch_mse, result.per_epoch_correct, result.per_epoch_params)
    else:
        rows = [(request.epochs, result.per_epoch_mse[-1], result.per_epoch_correct[-1], result.per_epoch_params[-1])]
    frame = pd.DataFrame(
        [(epoch, loss, correct, *theta) for epoch, loss, correct, theta in rows],
        columns=["epoch", "mse", "correct_count", *names],
    )

    writer = request.writer()
    writer.add_table("trial.csv", frame)
    summary = {
        "success": result.success,
        "epochs_to_success": result.epochs_to_success,
        "final_mse": result.final_mse,
        "diverged": result.diverged,
        "final_params": result.final_params.as_dict(),
    }
    if not request.no_timing:
        summary["wall_time_ns"] = result.wall_time_ns
    logger.info(f"{'✅ Solved' if result.success else '❌ Not solved'}: final mse {result.final_mse:.3e}")
    return writer.write(request.manifest("train", **summary))


def handle_sweep(request: SweepRequest) -> RunManifest:
    if request.lr_points == 1:
        grid = [request.lr_min]
    else:
        grid = default_lr_grid(request.lr_min, request.lr_max, request.lr_points)
    logger.info(f"🚀 Sweeping {len(request.models)} models x {len(grid)} learning rates, {request.trials} trials each")
    rows = sweep_learning_rates(
        request.models,
        grid,
        request.trials,
        request.seed,
        ranges={model: request.range_for(model) for model in request.models},
        epochs=request.epochs,
        adam=request.adam,
        weight_bound=request.weight_bound,
        threads=request.threads,
    )
    frame = pd.DataFrame(
        [(r.model.value, r.lr, r.trials, r.successes, r.success_rate) for r in rows],
        columns=["model", "lr", "trials", "successes", "success_rate"],
    )
    writer = request.writer()
    writer.add_table("sweep.csv", frame)
    ranges = {model.value: request.range_for(model).value for model in request.models}
    return writer.write(request.manifest("sweep", ranges=ranges))


def handle_curves(request: CurvesRequest) -> RunManifest:
    logger.info(f"🚀 Epoch curves for {', '.join(m.value for m in request.models)}")
    lrs = {model: request.lr_for(model) for model in request.models}
    points = epoch_curves(
        request.models,
        request.trials,
        lrs,
        request.seed,
        curve_epochs=request.curve_epochs,
        train_epochs=request.epochs,
        adam=request.adam,
        weight_bound=request.weight_bound,
        threads=request.threads,
    )
    frame = pd.DataFrame(
        [(p.model.value, p.epoch, p.success_rate, p.mean_mse) for p in points],
        columns=["model", "epoch", "success_rate", "mean_mse"],
    )
    writer = request.writer()
    writer.add_table("curves.csv", frame)
    return writer.write(request.manifest("curves", lrs={model.value: lr for model, lr in lrs.items()}))


def handle_landscape(request: LandscapeRequest) -> RunManifest:
    logger.info(f"🚀 Loss landscape on {request.input_range.value} with a={request.slope}")
    x_axis = GridAxis(name="w1", min=-request.extent, max=request.extent, steps=request.steps)
    y_axis = GridAxis(name="w2", min=-request.extent, max=request.extent, steps=request.steps)

    trajectories = []
    if request.trajectories:
        trajectories = [
            TrialSpec(
                model=ModelName.PRELU,
                input_range=request.input_range,
                lr=request.lr,
                epochs=request.epochs,
                seed=request.seed,
                quadrant=quadrant,
                slope_init=request.slope,
                train_slope=False,
                weight_bound=request.weight_bound,
                adam=request.adam,
            )
            for quadrant in (1, 2, 3, 4)
        ]
    surface = loss_landscape(request.input_range, request.slope, x_axis, y_axis, trajectories)
    w1, w2 = surface.mesh()

    writer = request.writer()
    writer.add_table(
        "landscape.csv",
        pd.DataFrame({"w1": w1.ravel(), "w2": w2.ravel(), "mse": surface.values.ravel()}),
    )

    minima = find_local_minima(surface)
    writer.add_table(
        "minima.csv",
        pd.DataFrame(
            [
                (
                    m.x,
                    m.y,
                    m.value,
                    pattern_label(minimum_pattern(m, request.input_range, request.slope)),
                    "global" if m.is_global else "local",
                )
                for m in minima
            ],
            columns=["w1", "w2", "mse", "pattern", "kind"],
        ),
    )

    rows = quadrant_study(
        request.input_range,
        request.lr,
        request.quadrant_trials,
        request.seed,
        epochs=request.epochs,
        adam=request.adam,
        weight_bound=request.weight_bound,
        threads=request.threads,
    )
    writer.add_table(
        "quadrants.csv",
        pd.DataFrame(
            [
                (r.config, r.input_range.value, r.quadrant, r.trials, r.successes, r.success_rate, r.and_rate)
                for r in rows
            ],
            columns=["config", "input_range", "quadrant", "trials", "successes", "success_rate", "and_rate"],
        ),
    )

    for overlay in surface.overlays:
        path = overlay.points
        losses = prelu_loss_grid(request.input_range, request.slope, path[:, 0], path[:, 1])
        writer.add_table(
            f"trajectory_{overlay.label}.csv",
            pd.DataFrame({"epoch": np.arange(len(path)), "w1": path[:, 0], "w2": path[:, 1], "mse": losses}),
        )

    zero_cells = int(np.count_nonzero(surface.values <= ZERO_LOSS_TOL))
    return writer.write(request.manifest("landscape", zero_cells=zero_cells, minima=len(minima)))


def handle_boundary(request: BoundaryRequest) -> RunManifest:
    writer = request.writer()
    margins = []
    for model in request.models:
        logger.info(f"🚀 Decision boundary raster for {model.value}")
        template = TrialSpec(
            model=model,
            input_range=model.default_range,
            lr=request.lr,
            epochs=request.epochs,
            weight_bound=request.weight_bound,
            adam=request.adam,
        )
        x_axis, y_axis = default_input_axes(model.default_range, request.steps)
        surface = decision_boundary_raster(
            model,
            request.trials,
            request.lr,
            request.seed,
            x_axis=x_axis,
            y_axis=y_axis,
            template=template,
            threads=request.threads,
        )
        x1, x2 = surface.mesh()
        writer.add_table(
            f"boundary_{model.value}.csv",
            pd.DataFrame({"x1": x1.ravel(), "x2": x2.ravel(), "mean_class": surface.values.ravel()}),
        )
        margin = class_margin(surface, model.default_range)
        margins.append((model.value, model.default_range.value, margin, boundary_spread(surface)))

    writer.add_table("margins.csv", pd.DataFrame(margins, columns=["model", "input_range", "margin", "spread"]))
    return writer.write(request.manifest("boundary"))


def handle_bench(request: BenchRequest) -> RunManifest:
    logger.info(f"🚀 Benchmarking {', '.join(m.value for m in request.models)} ({request.repetitions} repetitions)")
    result = bench_runtime(
        request.models,
        request.trials,
        request.lr,
        request.seed,
        request.repetitions,
        epochs=request.epochs,
        warmup=request.warmup,
        adam=request.adam,
        weight_bound=request.weight_bound,
    )
    samples = [
        (model.value, repetition, wall_time)
        for model, times in result.samples.items()
        for repetition, wall_time in enumerate(times)
    ]
    writer = request.writer()
    writer.add_table("bench.csv", pd.DataFrame(samples, columns=["model", "repetition", "wall_time_ns"]))
    writer.add_table(
        "bench_summary.csv",
        pd.DataFrame(
            [(s.model.value, s.min_ns, s.median_ns, s.p95_ns) for s in result.summary()],
            columns=["model", "min_ns", "median_ns", "p95_ns"],
        ),
    )
    return writer.write(request.manifest("bench"))


def handle_plot(request: PlotRequest) -> list[Path]:
    from .plotting import render

    outputs = []
    for path in request.inputs:
        frame = read_csv(path)
        schema = detect_schema(frame)
        out_dir = request.out or path.parent
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / f"{path.stem}.svg"
        render(schema, frame, target, source=path)
        logger.info(f"🖼️ Rendered {path} -> {target}")
        outputs.append(target)
    return outputs
