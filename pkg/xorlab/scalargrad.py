"""
Exact scalar mathematics for the XOR experiments.

Every activation used by the three architectures, its derivative with respect
to the input, the derivative of PReLU with respect to its learnable slope, the
MSE loss and a central finite-difference oracle. Scalar functions work on
Python floats through ``math``; the ``*_array`` variants evaluate the same
formulas on numpy arrays for grids and rasters.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

LEAKY_RELU_SLOPE = 0.01
TANH_LECUN_SCALE = 1.7159
TANH_LECUN_GAIN = 2.0 / 3.0


class ActivationKind(str, Enum):
    PRELU = "prelu"
    GCU = "gcu"
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"
    TANH_LECUN = "tanh_lecun"
    IDENTITY = "identity"
    ABS = "abs"


@dataclass(frozen=True)
class Activation:
    """Activation kind plus the slope, which only PReLU carries"""

    kind: ActivationKind
    slope: float | None = None

    def __post_init__(self):
        if self.kind is ActivationKind.PRELU:
            if self.slope is None or not math.isfinite(self.slope):
                raise ValueError(f"PReLU needs a finite slope, got {self.slope!r}")
        elif self.slope is not None:
            raise ValueError(f"{self.kind.value} has no learnable slope")

    @classmethod
    def prelu(cls, slope: float) -> "Activation":
        return cls(ActivationKind.PRELU, float(slope))

    @classmethod
    def of(cls, kind: ActivationKind | str) -> "Activation":
        return cls(ActivationKind(kind))


# Scalar building blocks. The models call these directly in their training loop.


def prelu(x: float, slope: float) -> float:
    return x if x >= 0.0 else slope * x


def prelu_dx(x: float, slope: float) -> float:
    # x == 0 takes the positive branch
    return 1.0 if x >= 0.0 else slope


def prelu_dslope(x: float) -> float:
    return 0.0 if x >= 0.0 else x


def gcu(x: float) -> float:
    return x * math.cos(x)


def gcu_dx(x: float) -> float:
    return math.cos(x) - x * math.sin(x)


def tanh_lecun(x: float) -> float:
    return TANH_LECUN_SCALE * math.tanh(TANH_LECUN_GAIN * x)


def tanh_lecun_dx(x: float) -> float:
    t = math.tanh(TANH_LECUN_GAIN * x)
    return TANH_LECUN_SCALE * TANH_LECUN_GAIN * (1.0 - t * t)


def relu(x: float) -> float:
    return x if x >= 0.0 else 0.0


def act_value(act: Activation, x: float) -> float:
    kind = act.kind
    if kind is ActivationKind.PRELU:
        return prelu(x, act.slope)
    if kind is ActivationKind.GCU:
        return gcu(x)
    if kind is ActivationKind.TANH_LECUN:
        return tanh_lecun(x)
    if kind is ActivationKind.RELU:
        return relu(x)
    if kind is ActivationKind.LEAKY_RELU:
        return prelu(x, LEAKY_RELU_SLOPE)
    if kind is ActivationKind.IDENTITY:
        return x
    return abs(x)


def act_dvalue_dx(act: Activation, x: float) -> float:
    """Derivative with respect to the input; kinks take the right-hand slope"""
    kind = act.kind
    if kind is ActivationKind.PRELU:
        return prelu_dx(x, act.slope)
    if kind is ActivationKind.GCU:
        return gcu_dx(x)
    if kind is ActivationKind.TANH_LECUN:
        return tanh_lecun_dx(x)
    if kind is ActivationKind.RELU:
        return prelu_dx(x, 0.0)
    if kind is ActivationKind.LEAKY_RELU:
        return prelu_dx(x, LEAKY_RELU_SLOPE)
    if kind is ActivationKind.IDENTITY:
        return 1.0
    return 1.0 if x >= 0.0 else -1.0


def act_dvalue_dslope(act: Activation, x: float) -> float:
    if act.kind is not ActivationKind.PRELU:
        raise ValueError(f"{act.kind.value} has no slope parameter to differentiate")
    return prelu_dslope(x)


def act_value_array(act: Activation, x: np.ndarray) -> np.ndarray:
    """Vectorised ``act_value`` for grids"""
    x = np.asarray(x, dtype=np.float64)
    kind = act.kind
    if kind is ActivationKind.PRELU:
        return np.where(x >= 0.0, x, act.slope * x)
    if kind is ActivationKind.GCU:
        return x * np.cos(x)
    if kind is ActivationKind.TANH_LECUN:
        return TANH_LECUN_SCALE * np.tanh(TANH_LECUN_GAIN * x)
    if kind is ActivationKind.RELU:
        return np.where(x >= 0.0, x, 0.0)
    if kind is ActivationKind.LEAKY_RELU:
        return np.where(x >= 0.0, x, LEAKY_RELU_SLOPE * x)
    if kind is ActivationKind.IDENTITY:
        return x.copy()
    return np.abs(x)


def mse(pred: Sequence[float], target: Sequence[float]) -> float:
    if len(pred) != len(target):
        raise ValueError(f"Length mismatch: {len(pred)} predictions vs {len(target)} targets")
    if not pred:
        raise ValueError("mse of an empty batch is undefined")
    total = 0.0
    for p, t in zip(pred, target):
        diff = p - t
        total += diff * diff
    return total / len(pred)


def fd_derivative(f: Callable[[float], float], x: float, h: float = 1e-5) -> float:
    """Central difference (f(x+h) - f(x-h)) / 2h, used as a test oracle"""
    if not h > 0.0:
        raise ValueError(f"Step must be positive, got {h}")
    return (f(x + h) - f(x - h)) / (2.0 * h)
