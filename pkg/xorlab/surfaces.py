"""
Rectangular grids over two parameters or two inputs: loss landscapes with
optimizer trajectories, averaged decision-boundary rasters, grid minima and
class margins.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import DEFAULT_GRID_STEPS
from .lab import CLASS_THRESHOLD, TrialSpec, run_batch, run_trial
from .models import InputRange, ModelName, ModelParams, forward, forward_grid, xor_batch
from .scalargrad import Activation, act_value_array

logger = logging.getLogger(__name__)

ZERO_LOSS_TOL = 1e-9


class GridAxis(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    min: float
    max: float
    steps: int = Field(DEFAULT_GRID_STEPS, ge=2)

    @model_validator(mode="after")
    def _ordered(self) -> "GridAxis":
        if not self.max > self.min:
            raise ValueError(f"Axis {self.name}: max must exceed min")
        return self

    def values(self) -> np.ndarray:
        values = np.linspace(self.min, self.max, self.steps)
        if self.min == -self.max:
            # exact mirror image around 0, so sign-flip symmetries hold on the grid
            values = (values - values[::-1]) / 2.0
        return values


@dataclass(frozen=True)
class Overlay:
    label: str
    points: np.ndarray  # shape (n, 2), in axis coordinates


@dataclass(frozen=True)
class Surface:
    x_axis: GridAxis
    y_axis: GridAxis
    values: np.ndarray  # shape (y_axis.steps, x_axis.steps)
    overlays: list[Overlay] = field(default_factory=list)

    def __post_init__(self):
        expected = (self.y_axis.steps, self.x_axis.steps)
        if self.values.shape != expected:
            raise ValueError(f"Surface values have shape {self.values.shape}, expected {expected}")

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_axis.values(), self.y_axis.values())


def default_input_axes(input_range: InputRange, steps: int = DEFAULT_GRID_STEPS) -> tuple[GridAxis, GridAxis]:
    if input_range is InputRange.ZERO_ONE:
        low, high = -0.5, 1.5
    else:
        low, high = -2.0, 2.0
    return GridAxis(name="x1", min=low, max=high, steps=steps), GridAxis(name="x2", min=low, max=high, steps=steps)


def default_weight_axes(steps: int = DEFAULT_GRID_STEPS) -> tuple[GridAxis, GridAxis]:
    return GridAxis(name="w1", min=-2.0, max=2.0, steps=steps), GridAxis(name="w2", min=-2.0, max=2.0, steps=steps)


def prelu_loss_grid(
    input_range: InputRange, slope: float, w1: np.ndarray, w2: np.ndarray
) -> np.ndarray:
    """MSE of the bias-free PReLU neuron at every (w1, w2), slope held fixed"""
    inputs, targets = xor_batch(input_range)
    act = Activation.prelu(slope)
    total = np.zeros_like(w1, dtype=np.float64)
    # rows summed in batch order, matching the scalar mse
    for (x1, x2), y in zip(inputs, targets):
        diff = act_value_array(act, w1 * x1 + w2 * x2) - y
        total = total + diff * diff
    return total / len(inputs)


def loss_landscape(
    input_range: InputRange,
    slope_fixed: float = -1.0,
    x_axis: GridAxis | None = None,
    y_axis: GridAxis | None = None,
    trajectories: Sequence[TrialSpec] = (),
) -> Surface:
    """
    Loss over (w1, w2) for the bias-free PReLU neuron

    values[i][j] is the MSE at w1 = x_j, w2 = y_i. Each trajectory spec is run
    with tracing on and attached as an overlay of its (w1, w2) path.
    """
    if x_axis is None or y_axis is None:
        default_x, default_y = default_weight_axes()
        x_axis = x_axis or default_x
        y_axis = y_axis or default_y

    w1, w2 = np.meshgrid(x_axis.values(), y_axis.values())
    values = prelu_loss_grid(input_range, slope_fixed, w1, w2)

    overlays = []
    for spec in trajectories:
        if spec.model is not ModelName.PRELU:
            raise ValueError(f"Landscape trajectories need the bias-free PReLU neuron, got {spec.model.value}")
        result = run_trial(spec.model_copy(update={"record_trace": True}))
        path = [result.initial_params.theta[:2]] + [theta[:2] for theta in result.per_epoch_params]
        label = f"q{spec.quadrant}" if spec.quadrant is not None else f"trial{spec.trial_index}"
        overlays.append(Overlay(label, np.array(path, dtype=np.float64)))

    logger.info(
        f"Landscape on {input_range.value} with a={slope_fixed}: "
        f"{x_axis.steps}x{y_axis.steps} cells, min {values.min():.3e}"
    )
    return Surface(x_axis, y_axis, values, overlays)


@dataclass(frozen=True)
class GridMinimum:
    x: float
    y: float
    value: float
    row: int
    col: int

    @property
    def is_global(self) -> bool:
        return self.value <= ZERO_LOSS_TOL


def find_local_minima(surface: Surface) -> list[GridMinimum]:
    """
    Interior cells no larger than any of their 8 neighbours

    A cell must be strictly smaller than neighbours that come before it in
    row-major order, so a group of tied adjacent cells reports only one.
    """
    values = surface.values
    ny, nx = values.shape
    xs = surface.x_axis.values()
    ys = surface.y_axis.values()
    centre = values[1:-1, 1:-1]
    is_min = np.ones_like(centre, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neighbour = values[1 + di : ny - 1 + di, 1 + dj : nx - 1 + dj]
            earlier = di < 0 or (di == 0 and dj < 0)
            is_min &= centre < neighbour if earlier else centre <= neighbour

    minima = []
    for i, j in zip(*np.nonzero(is_min)):
        row, col = int(i) + 1, int(j) + 1
        minima.append(GridMinimum(float(xs[col]), float(ys[row]), float(values[row, col]), row, col))
    return minima


def minimum_pattern(minimum: GridMinimum, input_range: InputRange, slope: float = -1.0) -> tuple[int, ...]:
    """Classified outputs of the bias-free PReLU neuron at a landscape minimum"""
    params = ModelParams(ModelName.PRELU.arch, (minimum.x, minimum.y, slope))
    inputs, _ = xor_batch(input_range)
    return tuple(1 if out >= CLASS_THRESHOLD else 0 for out in forward(params, inputs))


def decision_boundary_raster(
    model: ModelName,
    n_trials: int,
    lr: float,
    base_seed: int,
    input_range: InputRange | None = None,
    x_axis: GridAxis | None = None,
    y_axis: GridAxis | None = None,
    template: TrialSpec | None = None,
    threads: int | None = None,
) -> Surface:
    """Mean over trials of the classified output at every input-plane pixel"""
    input_range = input_range or model.default_range
    if x_axis is None or y_axis is None:
        default_x, default_y = default_input_axes(input_range)
        x_axis = x_axis or default_x
        y_axis = y_axis or default_y

    if template is None:
        template = TrialSpec(model=model, input_range=input_range, lr=lr)
    else:
        template = template.model_copy(update={"model": model, "input_range": input_range, "lr": lr})
    results = run_batch(template, n_trials, base_seed, threads)

    x1, x2 = np.meshgrid(x_axis.values(), y_axis.values())
    total = np.zeros_like(x1)
    for result in results:
        total += forward_grid(result.final_params, x1, x2) >= CLASS_THRESHOLD
    values = total / n_trials

    solved = sum(r.success for r in results)
    logger.info(f"Boundary raster for {model.value}: {solved}/{n_trials} trials solved")
    return Surface(x_axis, y_axis, values)


def class_margin(surface: Surface, input_range: InputRange) -> float:
    """
    Smallest distance from a training input to the 0.5 level set of a raster,
    in units of the spacing between adjacent XOR inputs

    The level set is located at midpoints between neighbouring pixels on
    opposite sides of the threshold. A raster without a boundary has an
    infinite margin.
    """
    xs = surface.x_axis.values()
    ys = surface.y_axis.values()
    mask = surface.values >= CLASS_THRESHOLD

    rows, cols = np.nonzero(mask[:, 1:] != mask[:, :-1])
    horizontal = np.column_stack([(xs[cols] + xs[cols + 1]) / 2.0, ys[rows]])
    rows, cols = np.nonzero(mask[1:, :] != mask[:-1, :])
    vertical = np.column_stack([xs[cols], (ys[rows] + ys[rows + 1]) / 2.0])
    boundary = np.vstack([horizontal, vertical])
    if boundary.size == 0:
        return float("inf")

    inputs, _ = xor_batch(input_range)
    points = np.array(inputs, dtype=np.float64)
    distances = np.hypot(
        points[:, None, 0] - boundary[None, :, 0],
        points[:, None, 1] - boundary[None, :, 1],
    )
    return float(distances.min() / input_range.spacing)


def boundary_spread(surface: Surface) -> float:
    """Fraction of raster pixels on which the averaged trials disagree (0 < mean class < 1)"""
    values = surface.values
    return float(np.count_nonzero((values > 0.0) & (values < 1.0)) / values.size)
