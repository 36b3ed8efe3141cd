"""
The three XOR architectures with exact forward and backward passes.

Parameters live in a flat tuple in a fixed canonical order per architecture:

    prelu        (w1, w2, a)
    prelu-bias   (w1, w2, b, a)
    gcu          (w1, w2, b)
    mlp          (W11, W12, W21, W22, b1, b2, v1, v2)

The MLP has two LeCun-tanh hidden units with biases and a linear output
neuron without bias. Batches are always the full four-row XOR set.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .scalargrad import (
    Activation,
    ActivationKind,
    act_value_array,
    gcu,
    gcu_dx,
    prelu,
    prelu_dslope,
    prelu_dx,
    tanh_lecun,
    tanh_lecun_dx,
)

Inputs = tuple[tuple[float, float], ...]

XOR_TARGETS: tuple[float, ...] = (0.0, 1.0, 1.0, 0.0)
AND_PATTERN: tuple[int, ...] = (0, 0, 0, 1)


class InputRange(str, Enum):
    ZERO_ONE = "01"
    PLUS_MINUS_ONE = "pm1"

    @property
    def levels(self) -> tuple[float, float]:
        return (0.0, 1.0) if self is InputRange.ZERO_ONE else (-1.0, 1.0)

    @property
    def spacing(self) -> float:
        """Distance between adjacent XOR inputs along one axis"""
        low, high = self.levels
        return high - low


class ArchKind(str, Enum):
    PRELU_NEURON = "prelu_neuron"
    GCU_NEURON = "gcu_neuron"
    MLP_TANH = "mlp_tanh"


@dataclass(frozen=True)
class ModelArch:
    kind: ArchKind
    bias: bool = False

    def __post_init__(self):
        if self.bias and self.kind is not ArchKind.PRELU_NEURON:
            raise ValueError("Only the PReLU neuron has an optional bias")

    @property
    def param_names(self) -> tuple[str, ...]:
        if self.kind is ArchKind.PRELU_NEURON:
            return ("w1", "w2", "b", "a") if self.bias else ("w1", "w2", "a")
        if self.kind is ArchKind.GCU_NEURON:
            return ("w1", "w2", "b")
        return ("W11", "W12", "W21", "W22", "b1", "b2", "v1", "v2")

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def weight_indices(self) -> tuple[int, ...]:
        """Positions drawn from the random init; biases and the slope are not"""
        return tuple(i for i, name in enumerate(self.param_names) if name[0] in "wWv")

    @property
    def slope_index(self) -> int | None:
        if self.kind is not ArchKind.PRELU_NEURON:
            return None
        return self.n_params - 1


class ModelName(str, Enum):
    """Command-line names of the four trainable configurations"""

    PRELU = "prelu"
    PRELU_BIAS = "prelu-bias"
    GCU = "gcu"
    MLP = "mlp"

    @property
    def arch(self) -> ModelArch:
        return _ARCHS[self]

    @property
    def default_range(self) -> InputRange:
        # GCU trains best on {0,1}; the others on {-1,1}
        if self is ModelName.GCU:
            return InputRange.ZERO_ONE
        return InputRange.PLUS_MINUS_ONE


_ARCHS = {
    ModelName.PRELU: ModelArch(ArchKind.PRELU_NEURON),
    ModelName.PRELU_BIAS: ModelArch(ArchKind.PRELU_NEURON, bias=True),
    ModelName.GCU: ModelArch(ArchKind.GCU_NEURON),
    ModelName.MLP: ModelArch(ArchKind.MLP_TANH),
}


@dataclass(frozen=True)
class ModelParams:
    arch: ModelArch
    theta: tuple[float, ...]

    def __post_init__(self):
        if len(self.theta) != self.arch.n_params:
            raise ValueError(
                f"{self.arch.kind.value} expects {self.arch.n_params} parameters, got {len(self.theta)}"
            )
        for value in self.theta:
            if not math.isfinite(value):
                raise FloatingPointError(f"Non-finite parameter in {self.theta}")

    def with_theta(self, theta: Sequence[float]) -> "ModelParams":
        return ModelParams(self.arch, tuple(float(v) for v in theta))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.arch.param_names, self.theta))

    @property
    def activation(self) -> Activation:
        if self.arch.kind is ArchKind.PRELU_NEURON:
            return Activation.prelu(self.theta[self.arch.slope_index])
        if self.arch.kind is ArchKind.GCU_NEURON:
            return Activation.of(ActivationKind.GCU)
        return Activation.of(ActivationKind.TANH_LECUN)


def xor_batch(input_range: InputRange) -> tuple[Inputs, tuple[float, ...]]:
    low, high = input_range.levels
    inputs = ((low, low), (low, high), (high, low), (high, high))
    return inputs, XOR_TARGETS


def prelu_xor_solution(input_range: InputRange) -> ModelParams:
    """Closed-form single-neuron solution |x1 - x2|, weights halved on {-1,1}"""
    weight = 1.0 if input_range is InputRange.ZERO_ONE else 0.5
    return ModelParams(ModelName.PRELU.arch, (weight, -weight, -1.0))


def _prelu_parts(params: ModelParams) -> tuple[float, float, float, float]:
    theta = params.theta
    if params.arch.bias:
        return theta[0], theta[1], theta[2], theta[3]
    return theta[0], theta[1], 0.0, theta[2]


def _forward_prelu(params: ModelParams, inputs: Inputs) -> tuple[float, ...]:
    w1, w2, b, a = _prelu_parts(params)
    if params.arch.bias:
        return tuple(prelu(w1 * x1 + w2 * x2 + b, a) for x1, x2 in inputs)
    return tuple(prelu(w1 * x1 + w2 * x2, a) for x1, x2 in inputs)


def _forward_gcu(params: ModelParams, inputs: Inputs) -> tuple[float, ...]:
    w1, w2, b = params.theta
    return tuple(gcu(w1 * x1 + w2 * x2 + b) for x1, x2 in inputs)


def _forward_mlp(params: ModelParams, inputs: Inputs) -> tuple[float, ...]:
    w11, w12, w21, w22, b1, b2, v1, v2 = params.theta
    out = []
    for x1, x2 in inputs:
        t1 = tanh_lecun(w11 * x1 + w12 * x2 + b1)
        t2 = tanh_lecun(w21 * x1 + w22 * x2 + b2)
        out.append(v1 * t1 + v2 * t2)
    return tuple(out)


def _backward_prelu(params: ModelParams, inputs: Inputs, targets: Sequence[float]) -> tuple[float, ...]:
    w1, w2, b, a = _prelu_parts(params)
    bias = params.arch.bias
    scale = 2.0 / len(inputs)
    g_w1 = g_w2 = g_b = g_a = 0.0
    for (x1, x2), y in zip(inputs, targets):
        z = w1 * x1 + w2 * x2 + b if bias else w1 * x1 + w2 * x2
        r = scale * (prelu(z, a) - y)
        dz = r * prelu_dx(z, a)
        g_w1 += dz * x1
        g_w2 += dz * x2
        g_b += dz
        g_a += r * prelu_dslope(z)
    if bias:
        return (g_w1, g_w2, g_b, g_a)
    return (g_w1, g_w2, g_a)


def _backward_gcu(params: ModelParams, inputs: Inputs, targets: Sequence[float]) -> tuple[float, ...]:
    w1, w2, b = params.theta
    scale = 2.0 / len(inputs)
    g_w1 = g_w2 = g_b = 0.0
    for (x1, x2), y in zip(inputs, targets):
        z = w1 * x1 + w2 * x2 + b
        dz = scale * (gcu(z) - y) * gcu_dx(z)
        g_w1 += dz * x1
        g_w2 += dz * x2
        g_b += dz
    return (g_w1, g_w2, g_b)


def _backward_mlp(params: ModelParams, inputs: Inputs, targets: Sequence[float]) -> tuple[float, ...]:
    w11, w12, w21, w22, b1, b2, v1, v2 = params.theta
    scale = 2.0 / len(inputs)
    g = [0.0] * 8
    for (x1, x2), y in zip(inputs, targets):
        h1 = w11 * x1 + w12 * x2 + b1
        h2 = w21 * x1 + w22 * x2 + b2
        t1 = tanh_lecun(h1)
        t2 = tanh_lecun(h2)
        r = scale * (v1 * t1 + v2 * t2 - y)
        d1 = r * v1 * tanh_lecun_dx(h1)
        d2 = r * v2 * tanh_lecun_dx(h2)
        g[0] += d1 * x1
        g[1] += d1 * x2
        g[2] += d2 * x1
        g[3] += d2 * x2
        g[4] += d1
        g[5] += d2
        g[6] += r * t1
        g[7] += r * t2
    return tuple(g)


_FORWARD = {
    ArchKind.PRELU_NEURON: _forward_prelu,
    ArchKind.GCU_NEURON: _forward_gcu,
    ArchKind.MLP_TANH: _forward_mlp,
}

_BACKWARD = {
    ArchKind.PRELU_NEURON: _backward_prelu,
    ArchKind.GCU_NEURON: _backward_gcu,
    ArchKind.MLP_TANH: _backward_mlp,
}


def forward(params: ModelParams, inputs: Inputs) -> tuple[float, ...]:
    return _FORWARD[params.arch.kind](params, inputs)


def backward(params: ModelParams, inputs: Inputs, targets: Sequence[float]) -> tuple[float, ...]:
    """Exact gradient of mse(forward(params, inputs), targets) in canonical order"""
    if len(inputs) != len(targets):
        raise ValueError(f"Batch mismatch: {len(inputs)} inputs vs {len(targets)} targets")
    return _BACKWARD[params.arch.kind](params, inputs, targets)


def forward_grid(params: ModelParams, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Evaluate the model at every (x1, x2) pair of two equally shaped arrays"""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    kind = params.arch.kind
    if kind is ArchKind.PRELU_NEURON:
        w1, w2, b, _ = _prelu_parts(params)
        z = w1 * x1 + w2 * x2
        if params.arch.bias:
            z = z + b
        return act_value_array(params.activation, z)
    if kind is ArchKind.GCU_NEURON:
        w1, w2, b = params.theta
        return act_value_array(params.activation, w1 * x1 + w2 * x2 + b)
    w11, w12, w21, w22, b1, b2, v1, v2 = params.theta
    act = params.activation
    t1 = act_value_array(act, w11 * x1 + w12 * x2 + b1)
    t2 = act_value_array(act, w21 * x1 + w22 * x2 + b2)
    return v1 * t1 + v2 * t2


def pre_activations(params: ModelParams, inputs: Inputs) -> tuple[float, ...]:
    """Every neuron input over the batch; used to keep gradient checks off PReLU kinks"""
    kind = params.arch.kind
    if kind is ArchKind.PRELU_NEURON:
        w1, w2, b, _ = _prelu_parts(params)
        return tuple(w1 * x1 + w2 * x2 + b for x1, x2 in inputs)
    if kind is ArchKind.GCU_NEURON:
        w1, w2, b = params.theta
        return tuple(w1 * x1 + w2 * x2 + b for x1, x2 in inputs)
    w11, w12, w21, w22, b1, b2, _, _ = params.theta
    values = []
    for x1, x2 in inputs:
        values.append(w11 * x1 + w12 * x2 + b1)
        values.append(w21 * x1 + w22 * x2 + b2)
    return tuple(values)
